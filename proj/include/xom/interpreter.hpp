#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

#include "xom/asm_program.hpp"

namespace xom::rewriter {

inline constexpr std::uint32_t kDefaultOrg = 0x08000000u;

/// Addresses and image bytes for a program placed at `org`. Instructions
/// align to 2, .word (and pool slots) to 4, .hword to 2. Jump-table label
/// entries in .byte/.hword directives become half-offsets from the
/// directive's own start, which is exactly the tbb/tbh base.
struct Layout {
    std::uint32_t org = kDefaultOrg;
    std::uint32_t end = kDefaultOrg; // exclusive
    std::vector<std::uint32_t> item_addr;
    std::unordered_map<std::string, std::uint32_t> label_addr;
    std::map<std::uint32_t, std::size_t> instr_by_addr;
    std::vector<std::uint8_t> image; // [org, end)
    std::unordered_map<std::size_t, std::uint32_t> literal_slot; // ldr_lit item -> addr

    std::uint32_t size() const { return end - org; }
    bool in_image(std::uint32_t a) const { return a >= org && a < end; }
};

Layout layout_program(const AsmProgram& prog, std::uint32_t org = kDefaultOrg);

/// Register file, flat little-endian memory and the island-read log. Data
/// reads that land inside the program image are islands: the access would
/// trap once the code range is read-watched.
struct MachineState {
    std::array<std::uint32_t, 16> regs{}; // 13 = sp, 14 = lr, 15 = pc
    std::map<std::uint32_t, std::uint8_t> memory;
    bool halted = false;
    std::vector<std::uint32_t> island_reads;

    std::uint32_t& pc() { return regs[kRegPc]; }
};

/// Run the program from its entry label for at most `fuel` steps. The image
/// is placed at kDefaultOrg and overlaid onto the initial memory; pc is set
/// to the entry address (fuel 0 returns otherwise-unchanged state). Throws
/// StuckError on undefined behavior.
MachineState interpret(const AsmProgram& prog, const MachineState& initial,
                       std::uint64_t fuel);

} // namespace xom::rewriter
