#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace xom::rewriter {

// Thumb-2 subset, one item per line. Labels are `name:`, data directives
// are .word/.hword/.byte, `@` starts a comment, `.ltorg`/`.pool` flush
// literal pools. Encoding widths (bytes) used for all size accounting:
//   movw/movt 4; ldr-literal 2 (.n) or 4; tbb/tbh 4; b.w 4; b.n 2; adr 4;
//   add/orr 4; bx 2; halt 2.

struct Reg {
    int index = 0; // 0..12, 13 = sp, 14 = lr, 15 = pc
    bool operator==(const Reg&) const = default;
};

inline constexpr int kRegSp = 13;
inline constexpr int kRegLr = 14;
inline constexpr int kRegPc = 15;

struct Imm { // `#value`
    std::uint32_t value = 0;
    bool operator==(const Imm&) const = default;
};

struct LitImm { // `=value`, a literal-pool constant
    std::uint32_t value = 0;
    bool operator==(const LitImm&) const = default;
};

struct LitSym { // `=symbol`, a literal-pool address constant
    std::string name;
    bool operator==(const LitSym&) const = default;
};

struct LabelRef {
    std::string name;
    bool operator==(const LabelRef&) const = default;
};

struct MemIndexed { // `[base, index]` or `[base, index, lsl #n]`
    Reg base;
    Reg index;
    unsigned lsl = 0;
    bool operator==(const MemIndexed&) const = default;
};

using Operand = std::variant<Reg, Imm, LitImm, LitSym, LabelRef, MemIndexed>;

enum class Opcode {
    movw,
    movt,
    ldr_lit, // ldr rd, =const  (pool slot materialized at layout time)
    ldr_lbl, // ldr rd, label   (pc-relative load of a pool word)
    tbb,
    tbh,
    branch, // b.w / b.n
    adr,
    add,
    orr,
    bx,
    halt,
    opaque, // preserved pass-through; no interpreter semantics
};

struct Instr {
    Opcode op = Opcode::opaque;
    std::string mnemonic; // as canonicalized, e.g. "b.w"
    std::vector<Operand> operands;
    unsigned width = 0;
    std::string raw_operands; // opaque instructions only
    int line = 0;

    bool operator==(const Instr& o) const {
        return op == o.op && mnemonic == o.mnemonic && operands == o.operands &&
               width == o.width && raw_operands == o.raw_operands;
    }
};

struct Label {
    std::string name;
    int line = 0;
    bool operator==(const Label& o) const { return name == o.name; }
};

enum class DataKind { word, half, byte };

inline constexpr unsigned data_kind_size(DataKind k) {
    return k == DataKind::word ? 4 : k == DataKind::half ? 2 : 1;
}

using DataValue = std::variant<std::uint32_t, std::string>; // number or label

struct DataDirective {
    DataKind kind = DataKind::word;
    std::vector<DataValue> values;
    int line = 0;

    bool operator==(const DataDirective& o) const {
        return kind == o.kind && values == o.values;
    }
};

struct PoolMarker {
    int line = 0;
    bool operator==(const PoolMarker&) const { return true; }
};

using AsmItem = std::variant<Label, Instr, DataDirective, PoolMarker>;

struct AsmProgram {
    std::vector<AsmItem> items;
    std::string entry; // first label; empty when the program starts unlabeled

    bool operator==(const AsmProgram&) const = default;
};

/// Parse the subset. Unknown-but-suffixed instructions are preserved as
/// opaque items; an instruction whose width cannot be determined, unknown
/// directives, duplicate label definitions and references to undefined
/// labels are ParseErrors.
AsmProgram parse(const std::string& text);

/// Canonical text form; parse(serialize(p)) reproduces p.
std::string serialize(const AsmProgram& prog);

/// Width of one item per the encoding table (labels and pool markers are 0).
unsigned item_width(const AsmItem& item);

/// Distinct literal-pool slots the ldr-literal instructions imply, grouped
/// by the pool site that will hold them (next .ltorg/.pool, else program
/// end). Each slot is 4 bytes.
std::size_t count_pool_slots(const AsmProgram& prog);

/// All label definitions; duplicates are impossible post-parse.
std::unordered_map<std::string, std::size_t> label_definitions(const AsmProgram& prog);

/// Number of references to each label (operands and data values).
std::unordered_map<std::string, int> label_references(const AsmProgram& prog);

} // namespace xom::rewriter
