#include "xom/asm_program.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include "xom/errors.hpp"
#include "xom/util.hpp"

namespace xom::rewriter {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool is_label_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$';
}

bool is_label_char(char c) {
    return is_label_start(c) || std::isdigit(static_cast<unsigned char>(c));
}

bool valid_label(std::string_view s) {
    if (s.empty() || !is_label_start(s[0]))
        return false;
    return std::all_of(s.begin() + 1, s.end(), is_label_char);
}

std::optional<std::uint32_t> parse_int(std::string_view s) {
    if (s.empty())
        return std::nullopt;
    bool neg = s[0] == '-';
    if (neg)
        s.remove_prefix(1);
    if (s.empty())
        return std::nullopt;
    int base = 10;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
        base = 16;
        s.remove_prefix(2);
    }
    std::uint64_t v = 0;
    for (char c : s) {
        int d;
        if (c >= '0' && c <= '9')
            d = c - '0';
        else if (base == 16 && c >= 'a' && c <= 'f')
            d = c - 'a' + 10;
        else if (base == 16 && c >= 'A' && c <= 'F')
            d = c - 'A' + 10;
        else
            return std::nullopt;
        v = v * base + d;
        if (v > 0xFFFFFFFFull)
            return std::nullopt;
    }
    auto u = static_cast<std::uint32_t>(v);
    return neg ? static_cast<std::uint32_t>(-static_cast<std::int64_t>(u)) : u;
}

std::optional<Reg> parse_reg(std::string_view s) {
    std::string t = lower(std::string(s));
    if (t == "sp")
        return Reg{kRegSp};
    if (t == "lr")
        return Reg{kRegLr};
    if (t == "pc")
        return Reg{kRegPc};
    if (t.size() >= 2 && t[0] == 'r') {
        auto n = parse_int(t.substr(1));
        if (n && *n <= 15)
            return Reg{static_cast<int>(*n)};
    }
    return std::nullopt;
}

// Split an operand string on commas that are not inside brackets.
std::vector<std::string> split_operands(const std::string& s) {
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    for (char c : s) {
        if (c == '[')
            ++depth;
        if (c == ']')
            --depth;
        if (c == ',' && depth == 0) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    std::string last = trim(cur);
    if (!last.empty())
        out.push_back(last);
    return out;
}

class Parser {
public:
    AsmProgram run(const std::string& text) {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            ++lineno_;
            auto at = line.find('@');
            if (at != std::string::npos)
                line.erase(at);
            std::string body = trim(line);
            while (!body.empty()) {
                std::string rest = consume_label(body);
                if (rest == body)
                    break; // no label prefix; fall through to item parse
                body = rest;
            }
            if (body.empty())
                continue;
            if (body[0] == '.')
                parse_directive(body);
            else
                parse_instr(body);
        }
        finish();
        return std::move(prog_);
    }

private:
    std::string consume_label(const std::string& body) {
        auto colon = body.find(':');
        if (colon == std::string::npos)
            return body;
        std::string name = trim(body.substr(0, colon));
        if (!valid_label(name))
            return body;
        define_label(name);
        prog_.items.push_back(Label{name, lineno_});
        return trim(body.substr(colon + 1));
    }

    void define_label(const std::string& name) {
        if (!defined_.insert(name).second)
            throw ParseError(lineno_, "label '" + name + "' defined more than once");
        if (prog_.entry.empty() && !saw_item_)
            prog_.entry = name;
    }

    void parse_directive(const std::string& body) {
        std::string mnemonic, args;
        split_mnemonic(body, mnemonic, args);
        if (mnemonic == ".ltorg" || mnemonic == ".pool") {
            if (!args.empty())
                throw ParseError(lineno_, mnemonic + " takes no operands");
            prog_.items.push_back(PoolMarker{lineno_});
            saw_item_ = true;
            return;
        }
        DataKind kind;
        if (mnemonic == ".word")
            kind = DataKind::word;
        else if (mnemonic == ".hword")
            kind = DataKind::half;
        else if (mnemonic == ".byte")
            kind = DataKind::byte;
        else
            throw ParseError(lineno_, "unknown directive '" + mnemonic + "'");

        DataDirective d{kind, {}, lineno_};
        for (const std::string& v : split_operands(args)) {
            if (auto n = parse_int(v)) {
                d.values.push_back(*n);
            } else if (valid_label(v)) {
                d.values.push_back(v);
                referenced_[v] = lineno_;
            } else {
                throw ParseError(lineno_, "bad data value '" + v + "'");
            }
        }
        prog_.items.push_back(std::move(d));
        saw_item_ = true;
    }

    static void split_mnemonic(const std::string& body, std::string& mnemonic,
                               std::string& args) {
        auto ws = body.find_first_of(" \t");
        if (ws == std::string::npos) {
            mnemonic = lower(body);
            args = "";
        } else {
            mnemonic = lower(body.substr(0, ws));
            args = trim(body.substr(ws));
        }
    }

    Reg expect_reg(const std::string& s) {
        auto r = parse_reg(s);
        if (!r)
            throw ParseError(lineno_, "expected register, got '" + s + "'");
        return *r;
    }

    Imm expect_imm(const std::string& s) {
        if (s.empty() || s[0] != '#')
            throw ParseError(lineno_, "expected #immediate, got '" + s + "'");
        auto v = parse_int(trim(s.substr(1)));
        if (!v)
            throw ParseError(lineno_, "bad immediate '" + s + "'");
        return Imm{*v};
    }

    LabelRef expect_label(const std::string& s) {
        if (!valid_label(s))
            throw ParseError(lineno_, "expected label, got '" + s + "'");
        referenced_[s] = lineno_;
        return LabelRef{s};
    }

    MemIndexed expect_mem(const std::string& s, int line) {
        if (s.size() < 2 || s.front() != '[' || s.back() != ']')
            throw ParseError(line, "expected [base, index] operand, got '" + s + "'");
        auto parts = split_operands(trim(s.substr(1, s.size() - 2)));
        if (parts.size() != 2 && parts.size() != 3)
            throw ParseError(line, "expected [base, index(, lsl #n)]");
        MemIndexed m;
        m.base = expect_reg(parts[0]);
        m.index = expect_reg(parts[1]);
        if (parts.size() == 3) {
            std::string shift = lower(parts[2]);
            if (shift.rfind("lsl", 0) != 0)
                throw ParseError(line, "only lsl shifts are supported");
            Imm amount = expect_imm(trim(shift.substr(3)));
            m.lsl = amount.value;
        }
        return m;
    }

    void parse_instr(const std::string& body) {
        std::string mnemonic, args;
        split_mnemonic(body, mnemonic, args);

        std::string base = mnemonic;
        std::optional<unsigned> suffix_width;
        if (base.size() > 2 && base.ends_with(".n")) {
            base = base.substr(0, base.size() - 2);
            suffix_width = 2;
        } else if (base.size() > 2 && base.ends_with(".w")) {
            base = base.substr(0, base.size() - 2);
            suffix_width = 4;
        }

        Instr ins;
        ins.line = lineno_;
        auto ops = split_operands(args);

        if (base == "movw" || base == "movt") {
            require_operands(ops, 2, base);
            Imm imm = expect_imm(ops[1]);
            if (imm.value > 0xFFFF)
                throw ParseError(lineno_, base + " immediate exceeds 16 bits");
            ins.op = base == "movw" ? Opcode::movw : Opcode::movt;
            ins.mnemonic = base;
            ins.operands = {expect_reg(ops[0]), imm};
            ins.width = 4;
        } else if (base == "ldr" && ops.size() == 2 && !ops[1].empty() &&
                   ops[1][0] == '=') {
            std::string lit = trim(ops[1].substr(1));
            ins.op = Opcode::ldr_lit;
            ins.mnemonic = mnemonic;
            ins.width = suffix_width.value_or(4);
            if (auto v = parse_int(lit)) {
                ins.operands = {expect_reg(ops[0]), LitImm{*v}};
            } else if (valid_label(lit)) {
                referenced_[lit] = lineno_;
                ins.operands = {expect_reg(ops[0]), LitSym{lit}};
            } else {
                throw ParseError(lineno_, "bad literal '" + ops[1] + "'");
            }
        } else if (base == "ldr" && ops.size() == 2 && valid_label(ops[1])) {
            ins.op = Opcode::ldr_lbl;
            ins.mnemonic = mnemonic;
            ins.width = suffix_width.value_or(4);
            ins.operands = {expect_reg(ops[0]), expect_label(ops[1])};
        } else if (base == "tbb" || base == "tbh") {
            require_operands(ops, 1, base);
            MemIndexed m = expect_mem(ops[0], lineno_);
            if (base == "tbb" && m.lsl != 0)
                throw ParseError(lineno_, "tbb does not take a shift");
            if (base == "tbh" && m.lsl != 1)
                throw ParseError(lineno_, "tbh requires lsl #1");
            ins.op = base == "tbb" ? Opcode::tbb : Opcode::tbh;
            ins.mnemonic = base;
            ins.operands = {m};
            ins.width = 4;
        } else if (base == "b") {
            if (!suffix_width)
                throw ParseError(lineno_, "branch width not declared (use b.n or b.w)");
            require_operands(ops, 1, mnemonic);
            ins.op = Opcode::branch;
            ins.mnemonic = mnemonic;
            ins.operands = {expect_label(ops[0])};
            ins.width = *suffix_width;
        } else if (base == "adr") {
            require_operands(ops, 2, base);
            ins.op = Opcode::adr;
            ins.mnemonic = base;
            ins.operands = {expect_reg(ops[0]), expect_label(ops[1])};
            ins.width = 4;
        } else if (base == "add" || base == "orr") {
            if (ops.size() != 2 && ops.size() != 3)
                throw ParseError(lineno_, base + " takes 2 or 3 operands");
            ins.op = base == "add" ? Opcode::add : Opcode::orr;
            ins.mnemonic = base;
            ins.operands.push_back(expect_reg(ops[0]));
            for (std::size_t i = 1; i < ops.size(); ++i) {
                if (!ops[i].empty() && ops[i][0] == '#')
                    ins.operands.push_back(expect_imm(ops[i]));
                else
                    ins.operands.push_back(expect_reg(ops[i]));
            }
            ins.width = 4;
        } else if (base == "bx") {
            require_operands(ops, 1, base);
            ins.op = Opcode::bx;
            ins.mnemonic = base;
            ins.operands = {expect_reg(ops[0])};
            ins.width = 2;
        } else if (base == "halt") {
            require_operands(ops, 0, base);
            ins.op = Opcode::halt;
            ins.mnemonic = base;
            ins.width = 2;
        } else if (suffix_width) {
            ins.op = Opcode::opaque;
            ins.mnemonic = mnemonic;
            ins.raw_operands = args;
            ins.width = *suffix_width;
        } else if (base == "ldr") {
            // Addressing forms outside the literal subset pass through; a
            // bare ldr accounts 4 bytes like the wide encoding.
            ins.op = Opcode::opaque;
            ins.mnemonic = mnemonic;
            ins.raw_operands = args;
            ins.width = suffix_width.value_or(4);
        } else {
            throw ParseError(lineno_, "unknown instruction '" + mnemonic +
                                          "' with undeclared width (add .n or .w)");
        }
        prog_.items.push_back(std::move(ins));
        saw_item_ = true;
    }

    void require_operands(const std::vector<std::string>& ops, std::size_t n,
                          const std::string& what) {
        if (ops.size() != n)
            throw ParseError(lineno_, what + " takes " + std::to_string(n) +
                                          " operand(s), got " + std::to_string(ops.size()));
    }

    void finish() {
        for (const auto& [name, line] : referenced_)
            if (!defined_.count(name))
                throw ParseError(line, "reference to undefined label '" + name + "'");
    }

    AsmProgram prog_;
    int lineno_ = 0;
    bool saw_item_ = false;
    std::set<std::string> defined_;
    std::map<std::string, int> referenced_; // name -> first referencing line
};

std::string format_operand(const Operand& op) {
    struct Fmt {
        std::string operator()(const Reg& r) const {
            switch (r.index) {
            case kRegSp: return "sp";
            case kRegLr: return "lr";
            case kRegPc: return "pc";
            default: return "r" + std::to_string(r.index);
            }
        }
        std::string operator()(const Imm& i) const {
            char buf[16];
            std::snprintf(buf, sizeof buf, "#0x%x", i.value);
            return buf;
        }
        std::string operator()(const LitImm& i) const {
            char buf[16];
            std::snprintf(buf, sizeof buf, "=0x%x", i.value);
            return buf;
        }
        std::string operator()(const LitSym& s) const { return "=" + s.name; }
        std::string operator()(const LabelRef& l) const { return l.name; }
        std::string operator()(const MemIndexed& m) const {
            std::string s = "[" + (*this)(m.base) + ", " + (*this)(m.index);
            if (m.lsl != 0)
                s += ", lsl #" + std::to_string(m.lsl);
            return s + "]";
        }
    };
    return std::visit(Fmt{}, op);
}

std::string format_data_value(DataKind kind, const DataValue& v) {
    if (const auto* n = std::get_if<std::uint32_t>(&v)) {
        char buf[16];
        if (kind == DataKind::word)
            std::snprintf(buf, sizeof buf, "0x%x", *n);
        else
            std::snprintf(buf, sizeof buf, "%u", *n);
        return buf;
    }
    return std::get<std::string>(v);
}

} // namespace

AsmProgram parse(const std::string& text) {
    return Parser{}.run(text);
}

std::string serialize(const AsmProgram& prog) {
    std::string out;
    for (const AsmItem& item : prog.items) {
        if (const auto* l = std::get_if<Label>(&item)) {
            out += l->name + ":\n";
        } else if (const auto* i = std::get_if<Instr>(&item)) {
            out += "    " + i->mnemonic;
            if (i->op == Opcode::opaque) {
                if (!i->raw_operands.empty())
                    out += " " + i->raw_operands;
            } else {
                for (std::size_t k = 0; k < i->operands.size(); ++k)
                    out += (k == 0 ? " " : ", ") + format_operand(i->operands[k]);
            }
            out += '\n';
        } else if (const auto* d = std::get_if<DataDirective>(&item)) {
            out += d->kind == DataKind::word    ? "    .word"
                   : d->kind == DataKind::half ? "    .hword"
                                               : "    .byte";
            for (std::size_t k = 0; k < d->values.size(); ++k)
                out += (k == 0 ? " " : ", ") + format_data_value(d->kind, d->values[k]);
            out += '\n';
        } else {
            out += "    .ltorg\n";
        }
    }
    return out;
}

unsigned item_width(const AsmItem& item) {
    if (const auto* i = std::get_if<Instr>(&item))
        return i->width;
    if (const auto* d = std::get_if<DataDirective>(&item))
        return data_kind_size(d->kind) * static_cast<unsigned>(d->values.size());
    return 0;
}

std::size_t count_pool_slots(const AsmProgram& prog) {
    // A slot is keyed by (pool site, literal); loads of the same literal
    // before the same site share one word.
    std::set<std::pair<std::size_t, std::string>> slots;
    std::size_t site = 0;
    auto next_site = [&](std::size_t from) {
        for (std::size_t j = from; j < prog.items.size(); ++j)
            if (std::holds_alternative<PoolMarker>(prog.items[j]))
                return j;
        return prog.items.size();
    };
    site = next_site(0);
    for (std::size_t i = 0; i < prog.items.size(); ++i) {
        if (i > site)
            site = next_site(i);
        const auto* ins = std::get_if<Instr>(&prog.items[i]);
        if (!ins || ins->op != Opcode::ldr_lit)
            continue;
        std::string key;
        if (const auto* imm = std::get_if<LitImm>(&ins->operands[1]))
            key = "#" + std::to_string(imm->value);
        else
            key = "$" + std::get<LitSym>(ins->operands[1]).name;
        slots.insert({site, key});
    }
    return slots.size();
}

std::unordered_map<std::string, std::size_t> label_definitions(const AsmProgram& prog) {
    std::unordered_map<std::string, std::size_t> out;
    for (std::size_t i = 0; i < prog.items.size(); ++i)
        if (const auto* l = std::get_if<Label>(&prog.items[i]))
            out[l->name] = i;
    return out;
}

std::unordered_map<std::string, int> label_references(const AsmProgram& prog) {
    std::unordered_map<std::string, int> out;
    for (const AsmItem& item : prog.items) {
        if (const auto* i = std::get_if<Instr>(&item)) {
            for (const Operand& op : i->operands) {
                if (const auto* l = std::get_if<LabelRef>(&op))
                    ++out[l->name];
                else if (const auto* s = std::get_if<LitSym>(&op))
                    ++out[s->name];
            }
        } else if (const auto* d = std::get_if<DataDirective>(&item)) {
            for (const DataValue& v : d->values)
                if (const auto* s = std::get_if<std::string>(&v))
                    ++out[*s];
        }
    }
    return out;
}

} // namespace xom::rewriter
