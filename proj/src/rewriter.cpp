#include "xom/rewriter.hpp"

#include <set>

#include "xom/errors.hpp"
#include "xom/util.hpp"

namespace xom::rewriter {

namespace {

Instr make_instr(Opcode op, std::string mnemonic, std::vector<Operand> operands,
                 unsigned width, int line) {
    Instr ins;
    ins.op = op;
    ins.mnemonic = std::move(mnemonic);
    ins.operands = std::move(operands);
    ins.width = width;
    ins.line = line;
    return ins;
}

void emit_movw_movt(std::vector<AsmItem>& out, const Reg& rd, std::uint32_t value,
                    int line) {
    out.push_back(make_instr(Opcode::movw, "movw", {rd, Imm{value & 0xFFFF}}, 4, line));
    if (value >> 16)
        out.push_back(
            make_instr(Opcode::movt, "movt", {rd, Imm{value >> 16}}, 4, line));
}

std::size_t count_literal_loads(const AsmProgram& prog) {
    std::size_t n = 0;
    for (const AsmItem& item : prog.items) {
        const auto* ins = std::get_if<Instr>(&item);
        if (ins && (ins->op == Opcode::ldr_lit || ins->op == Opcode::ldr_lbl))
            ++n;
    }
    return n;
}

std::size_t count_tables(const AsmProgram& prog) {
    std::size_t n = 0;
    for (const AsmItem& item : prog.items) {
        const auto* ins = std::get_if<Instr>(&item);
        if (ins && (ins->op == Opcode::tbb || ins->op == Opcode::tbh))
            ++n;
    }
    return n;
}

} // namespace

AsmProgram remove_load_constants(const AsmProgram& prog) {
    auto defs = label_definitions(prog);

    // The constant a label-form load resolves to, or an error.
    auto pool_value = [&](const LabelRef& ref, int line) -> std::uint32_t {
        std::size_t label_index = defs.at(ref.name);
        const DataDirective* word = nullptr;
        for (std::size_t j = label_index + 1; j < prog.items.size(); ++j) {
            if (std::holds_alternative<Label>(prog.items[j]))
                continue;
            word = std::get_if<DataDirective>(&prog.items[j]);
            break;
        }
        if (!word || word->kind != DataKind::word)
            throw UnsupportedLiteralError(line, "label '" + ref.name +
                                                    "' does not name a literal word");
        if (word->values.size() != 1)
            throw UnsupportedLiteralError(line, "pool entry '" + ref.name +
                                                    "' holds more than one word");
        if (const auto* n = std::get_if<std::uint32_t>(&word->values[0]))
            return *n;
        throw UnsupportedLiteralError(
            line, "pool entry '" + ref.name + "' is a relocation the subset cannot resolve");
    };

    AsmProgram out;
    out.entry = prog.entry;
    std::set<std::string> rewritten_pool_labels;
    for (const AsmItem& item : prog.items) {
        const auto* ins = std::get_if<Instr>(&item);
        if (ins && ins->op == Opcode::ldr_lit) {
            const Reg& rd = std::get<Reg>(ins->operands[0]);
            if (const auto* imm = std::get_if<LitImm>(&ins->operands[1])) {
                emit_movw_movt(out.items, rd, imm->value, ins->line);
            } else {
                throw UnsupportedLiteralError(
                    ins->line, "'=" + std::get<LitSym>(ins->operands[1]).name +
                                   "' is a relocation the subset cannot resolve");
            }
            continue;
        }
        if (ins && ins->op == Opcode::ldr_lbl) {
            const Reg& rd = std::get<Reg>(ins->operands[0]);
            const auto& ref = std::get<LabelRef>(ins->operands[1]);
            emit_movw_movt(out.items, rd, pool_value(ref, ins->line), ins->line);
            rewritten_pool_labels.insert(ref.name);
            continue;
        }
        out.items.push_back(item);
    }

    // Drop pool words whose label lost its last reference, then the labels
    // themselves. Words still referenced (by data or a surviving load) stay.
    auto refs = label_references(out);
    std::vector<AsmItem> kept;
    kept.reserve(out.items.size());
    for (std::size_t i = 0; i < out.items.size(); ++i) {
        if (const auto* l = std::get_if<Label>(&out.items[i])) {
            if (rewritten_pool_labels.count(l->name) && refs[l->name] == 0) {
                // Delete the word only when this label (and any sharing the
                // same spot) no longer has references.
                std::size_t j = i;
                bool all_dead = true;
                while (j < out.items.size()) {
                    if (const auto* l2 = std::get_if<Label>(&out.items[j])) {
                        if (refs[l2->name] != 0)
                            all_dead = false;
                        ++j;
                        continue;
                    }
                    break;
                }
                if (all_dead && j < out.items.size() &&
                    std::holds_alternative<DataDirective>(out.items[j])) {
                    i = j; // skip labels and the pool word
                    continue;
                }
            }
        }
        kept.push_back(out.items[i]);
    }
    out.items = std::move(kept);
    return out;
}

AsmProgram remove_jump_tables(const AsmProgram& prog) {
    auto refs = label_references(prog);
    std::set<std::string> taken;
    for (const auto& [name, idx] : label_definitions(prog))
        taken.insert(name);
    int fresh_counter = 0;
    auto fresh_label = [&] {
        std::string name;
        do {
            name = ".Ltramp" + std::to_string(fresh_counter++);
        } while (taken.count(name));
        taken.insert(name);
        return name;
    };

    AsmProgram out;
    out.entry = prog.entry;
    for (std::size_t i = 0; i < prog.items.size(); ++i) {
        const auto* ins = std::get_if<Instr>(&prog.items[i]);
        if (!ins || (ins->op != Opcode::tbb && ins->op != Opcode::tbh)) {
            out.items.push_back(prog.items[i]);
            continue;
        }

        const MemIndexed& m = std::get<MemIndexed>(ins->operands[0]);
        if (m.base.index != kRegPc)
            throw UnsupportedTableError(ins->line,
                                        "table branch base register is not pc");

        // The inline table: optional labels, then one byte/half directive.
        std::size_t j = i + 1;
        while (j < prog.items.size() && std::holds_alternative<Label>(prog.items[j])) {
            const auto& l = std::get<Label>(prog.items[j]);
            if (refs[l.name] != 0)
                throw UnsupportedTableError(
                    ins->line, "jump table label '" + l.name + "' is referenced");
            ++j;
        }
        const DataKind want = ins->op == Opcode::tbb ? DataKind::byte : DataKind::half;
        const DataDirective* table =
            j < prog.items.size() ? std::get_if<DataDirective>(&prog.items[j]) : nullptr;
        if (!table || table->kind != want)
            throw UnsupportedTableError(ins->line, "no inline table after " +
                                                       ins->mnemonic);
        if (table->values.empty())
            throw UnsupportedTableError(ins->line, "empty jump table");
        std::vector<std::string> targets;
        for (const DataValue& v : table->values) {
            const auto* name = std::get_if<std::string>(&v);
            if (!name)
                throw UnsupportedTableError(ins->line,
                                            "table entry is not a label reference");
            targets.push_back(*name);
        }

        const Reg rI = m.index;
        const int line = ins->line;
        out.items.push_back(make_instr(Opcode::add, "add", {rI, rI, rI}, 4, line));
        out.items.push_back(make_instr(Opcode::add, "add", {rI, rI, rI}, 4, line));
        out.items.push_back(make_instr(Opcode::orr, "orr", {rI, Imm{3}}, 4, line));
        out.items.push_back(make_instr(Opcode::add, "add", {rI, Reg{kRegPc}}, 4, line));
        out.items.push_back(make_instr(Opcode::bx, "bx", {rI}, 2, line));
        out.items.push_back(Label{fresh_label(), line});
        for (const std::string& target : targets)
            out.items.push_back(
                make_instr(Opcode::branch, "b.w", {LabelRef{target}}, 4, line));
        i = j; // consume the tbb/tbh, intervening labels and the table
    }
    return out;
}

RewriteReport verify_no_islands(const AsmProgram& prog) {
    RewriteReport report;
    std::uint64_t bytes = 0;
    for (const AsmItem& item : prog.items) {
        bytes += item_width(item);
        if (std::holds_alternative<DataDirective>(item))
            ++report.islands_remaining;
        const auto* ins = std::get_if<Instr>(&item);
        if (ins && (ins->op == Opcode::ldr_lit || ins->op == Opcode::ldr_lbl))
            ++report.islands_remaining;
    }
    bytes += 4 * count_pool_slots(prog);
    report.bytes_before = bytes;
    report.bytes_after = bytes;
    return report;
}

RewriteResult rewrite_program(const AsmProgram& prog) {
    RewriteReport before = verify_no_islands(prog);
    AsmProgram rewritten = remove_jump_tables(remove_load_constants(prog));
    RewriteReport after = verify_no_islands(rewritten);

    RewriteResult out{std::move(rewritten), after};
    out.report.bytes_before = before.bytes_before;
    out.report.loads_rewritten =
        count_literal_loads(prog) - count_literal_loads(out.program);
    out.report.tables_rewritten = count_tables(prog) - count_tables(out.program);
    return out;
}

} // namespace xom::rewriter
