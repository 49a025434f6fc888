#include "xom/interpreter.hpp"

#include <set>

#include "xom/errors.hpp"
#include "xom/util.hpp"

namespace xom::rewriter {

namespace {

std::uint32_t align_up(std::uint32_t v, std::uint32_t a) {
    return (v + a - 1) & ~(a - 1);
}

unsigned item_alignment(const AsmItem& item) {
    if (std::holds_alternative<Instr>(item))
        return 2;
    if (const auto* d = std::get_if<DataDirective>(&item))
        return data_kind_size(d->kind);
    return 1; // labels and pool markers take no space themselves
}

std::string literal_key(const Instr& ins) {
    if (const auto* imm = std::get_if<LitImm>(&ins.operands[1]))
        return "#" + std::to_string(imm->value);
    return "$" + std::get<LitSym>(ins.operands[1]).name;
}

void put32(std::vector<std::uint8_t>& image, std::uint32_t off, std::uint32_t v) {
    image[off] = v & 0xFF;
    image[off + 1] = (v >> 8) & 0xFF;
    image[off + 2] = (v >> 16) & 0xFF;
    image[off + 3] = (v >> 24) & 0xFF;
}

} // namespace

Layout layout_program(const AsmProgram& prog, std::uint32_t org) {
    Layout out;
    out.org = org;
    out.item_addr.resize(prog.items.size(), org);

    // Pool sites: each ldr-literal's slot lives at the next marker, or at
    // the program end; identical literals bound for the same site share.
    auto next_site = [&](std::size_t from) {
        for (std::size_t j = from; j < prog.items.size(); ++j)
            if (std::holds_alternative<PoolMarker>(prog.items[j]))
                return j;
        return prog.items.size();
    };
    std::map<std::size_t, std::vector<std::size_t>> site_loads;
    {
        std::size_t site = next_site(0);
        for (std::size_t i = 0; i < prog.items.size(); ++i) {
            if (i > site)
                site = next_site(i);
            const auto* ins = std::get_if<Instr>(&prog.items[i]);
            if (ins && ins->op == Opcode::ldr_lit)
                site_loads[site].push_back(i);
        }
    }

    std::uint32_t cur = org;
    std::vector<std::size_t> pending_labels;

    auto place_pool = [&](std::size_t site) {
        auto it = site_loads.find(site);
        if (it == site_loads.end())
            return;
        std::map<std::string, std::uint32_t> slot_of;
        for (std::size_t load : it->second) {
            const auto& ins = std::get<Instr>(prog.items[load]);
            std::string key = literal_key(ins);
            auto [entry, fresh] = slot_of.try_emplace(key, 0);
            if (fresh) {
                cur = align_up(cur, 4);
                entry->second = cur;
                cur += 4;
            }
            out.literal_slot[load] = entry->second;
        }
    };

    for (std::size_t i = 0; i < prog.items.size(); ++i) {
        const AsmItem& item = prog.items[i];
        if (const auto* l = std::get_if<Label>(&item)) {
            pending_labels.push_back(i);
            (void)l;
            continue;
        }
        if (std::holds_alternative<PoolMarker>(item)) {
            out.item_addr[i] = cur;
            for (std::size_t p : pending_labels) {
                out.item_addr[p] = cur;
                out.label_addr[std::get<Label>(prog.items[p]).name] = cur;
            }
            pending_labels.clear();
            place_pool(i);
            continue;
        }
        cur = align_up(cur, item_alignment(item));
        out.item_addr[i] = cur;
        for (std::size_t p : pending_labels) {
            out.item_addr[p] = cur;
            out.label_addr[std::get<Label>(prog.items[p]).name] = cur;
        }
        pending_labels.clear();
        if (std::holds_alternative<Instr>(item))
            out.instr_by_addr[cur] = i;
        cur += item_width(item);
    }
    for (std::size_t p : pending_labels) {
        out.item_addr[p] = cur;
        out.label_addr[std::get<Label>(prog.items[p]).name] = cur;
    }
    place_pool(prog.items.size()); // end-of-program pool
    out.end = cur;

    // Second pass: image bytes. Instruction bytes stay zero; only data
    // matters to execution.
    out.image.assign(out.size(), 0);
    for (std::size_t i = 0; i < prog.items.size(); ++i) {
        const auto* d = std::get_if<DataDirective>(&prog.items[i]);
        if (!d)
            continue;
        const std::uint32_t base = out.item_addr[i];
        const unsigned esize = data_kind_size(d->kind);
        for (std::size_t k = 0; k < d->values.size(); ++k) {
            std::uint32_t value;
            if (const auto* n = std::get_if<std::uint32_t>(&d->values[k])) {
                value = *n;
            } else {
                const std::string& name = std::get<std::string>(d->values[k]);
                std::uint32_t target = out.label_addr.at(name);
                if (d->kind == DataKind::word) {
                    value = target; // address constant
                } else {
                    // Jump-table entry: half-offset from the table start.
                    if (target < base || (target - base) % 2 != 0)
                        throw LayoutError("table entry '" + name +
                                          "' is not an even forward offset");
                    value = (target - base) / 2;
                }
            }
            std::uint64_t limit = esize == 4 ? 0x100000000ull : (1ull << (esize * 8));
            if (value >= limit)
                throw LayoutError("data value " + std::to_string(value) +
                                  " does not fit a " + std::to_string(esize) +
                                  "-byte entry");
            std::uint32_t off = base - out.org + static_cast<std::uint32_t>(k) * esize;
            for (unsigned b = 0; b < esize; ++b)
                out.image[off + b] = (value >> (b * 8)) & 0xFF;
        }
    }
    for (const auto& [load, addr] : out.literal_slot) {
        const auto& ins = std::get<Instr>(prog.items[load]);
        std::uint32_t value;
        if (const auto* imm = std::get_if<LitImm>(&ins.operands[1]))
            value = imm->value;
        else
            value = out.label_addr.at(std::get<LitSym>(ins.operands[1]).name);
        put32(out.image, addr - out.org, value);
    }
    return out;
}

namespace {

class Machine {
public:
    Machine(const AsmProgram& prog, const Layout& layout, MachineState state)
        : prog_(prog), layout_(layout), st_(std::move(state)) {}

    MachineState run(std::uint64_t fuel) {
        for (std::uint64_t step = 0; step < fuel && !st_.halted; ++step)
            execute_one();
        return std::move(st_);
    }

private:
    [[noreturn]] void stuck(const std::string& why) {
        throw StuckError(st_.regs[kRegPc], "stuck at pc=" + hex32(st_.regs[kRegPc]) +
                                               ": " + why);
    }

    std::uint8_t read8(std::uint32_t addr) {
        auto it = st_.memory.find(addr);
        return it == st_.memory.end() ? 0 : it->second;
    }

    // One island event per data access, not per byte.
    std::uint32_t read_data(std::uint32_t addr, unsigned bytes) {
        if (layout_.in_image(addr))
            st_.island_reads.push_back(addr);
        std::uint32_t v = 0;
        for (unsigned i = 0; i < bytes; ++i)
            v |= std::uint32_t(read8(addr + i)) << (i * 8);
        return v;
    }

    std::uint32_t reg_value(const Reg& r, std::uint32_t instr_addr) {
        // Thumb rule: pc reads as the instruction address plus 4.
        return r.index == kRegPc ? instr_addr + 4 : st_.regs[r.index];
    }

    std::uint32_t operand_value(const Operand& op, std::uint32_t instr_addr) {
        if (const auto* r = std::get_if<Reg>(&op))
            return reg_value(*r, instr_addr);
        if (const auto* i = std::get_if<Imm>(&op))
            return i->value;
        stuck("operand has no runtime value");
    }

    void write_reg(const Reg& r, std::uint32_t v) {
        if (r.index == kRegPc)
            stuck("pc used as a destination register");
        st_.regs[r.index] = v;
    }

    void execute_one() {
        const std::uint32_t pc = st_.regs[kRegPc];
        auto it = layout_.instr_by_addr.find(pc);
        if (it == layout_.instr_by_addr.end())
            stuck("no instruction at this address");
        const std::size_t index = it->second;
        const Instr& ins = std::get<Instr>(prog_.items[index]);
        std::uint32_t next = pc + ins.width;

        switch (ins.op) {
        case Opcode::movw: {
            write_reg(std::get<Reg>(ins.operands[0]), std::get<Imm>(ins.operands[1]).value);
            break;
        }
        case Opcode::movt: {
            const Reg& rd = std::get<Reg>(ins.operands[0]);
            std::uint32_t lo = st_.regs[rd.index] & 0xFFFF;
            write_reg(rd, lo | (std::get<Imm>(ins.operands[1]).value << 16));
            break;
        }
        case Opcode::ldr_lit: {
            std::uint32_t slot = layout_.literal_slot.at(index);
            write_reg(std::get<Reg>(ins.operands[0]), read_data(slot, 4));
            break;
        }
        case Opcode::ldr_lbl: {
            std::uint32_t addr =
                layout_.label_addr.at(std::get<LabelRef>(ins.operands[1]).name);
            write_reg(std::get<Reg>(ins.operands[0]), read_data(addr, 4));
            break;
        }
        case Opcode::tbb:
        case Opcode::tbh: {
            const MemIndexed& m = std::get<MemIndexed>(ins.operands[0]);
            std::uint32_t base = reg_value(m.base, pc);
            std::uint32_t idx = st_.regs[m.index.index];
            std::uint32_t offset;
            if (ins.op == Opcode::tbb)
                offset = read_data(base + idx, 1);
            else
                offset = read_data(base + 2 * idx, 2);
            next = base + 2 * offset;
            break;
        }
        case Opcode::branch: {
            next = layout_.label_addr.at(std::get<LabelRef>(ins.operands[0]).name);
            break;
        }
        case Opcode::adr: {
            write_reg(std::get<Reg>(ins.operands[0]),
                      layout_.label_addr.at(std::get<LabelRef>(ins.operands[1]).name));
            break;
        }
        case Opcode::add:
        case Opcode::orr: {
            const Reg& rd = std::get<Reg>(ins.operands[0]);
            std::uint32_t a, b;
            if (ins.operands.size() == 3) {
                a = operand_value(ins.operands[1], pc);
                b = operand_value(ins.operands[2], pc);
            } else {
                a = reg_value(rd, pc);
                b = operand_value(ins.operands[1], pc);
            }
            write_reg(rd, ins.op == Opcode::add ? a + b : (a | b));
            break;
        }
        case Opcode::bx: {
            std::uint32_t target = st_.regs[std::get<Reg>(ins.operands[0]).index];
            if ((target & 1) == 0)
                stuck("bx to an address without the Thumb bit");
            next = target & ~1u;
            break;
        }
        case Opcode::halt:
            st_.halted = true;
            break;
        case Opcode::opaque:
            stuck("opaque instruction '" + ins.mnemonic + "' has no semantics");
        }
        st_.regs[kRegPc] = next;
    }

    const AsmProgram& prog_;
    const Layout& layout_;
    MachineState st_;
};

} // namespace

MachineState interpret(const AsmProgram& prog, const MachineState& initial,
                       std::uint64_t fuel) {
    Layout layout = layout_program(prog, kDefaultOrg);
    MachineState st = initial;
    st.halted = false;
    st.island_reads.clear();
    for (std::uint32_t i = 0; i < layout.size(); ++i)
        st.memory[layout.org + i] = layout.image[i];

    std::uint32_t entry = layout.org;
    if (!prog.entry.empty())
        entry = layout.label_addr.at(prog.entry);
    st.regs[kRegPc] = entry;

    return Machine(prog, layout, std::move(st)).run(fuel);
}

} // namespace xom::rewriter
