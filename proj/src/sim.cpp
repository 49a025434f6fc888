#include "xom/sim.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include "xom/errors.hpp"
#include "xom/util.hpp"

namespace xom::sim {

std::string to_string(AccessResult r) {
    switch (r) {
    case AccessResult::allowed: return "allowed";
    case AccessResult::mem_manage_fault: return "mem_manage_fault";
    case AccessResult::debug_monitor_exception: return "debug_monitor_exception";
    }
    return "?";
}

namespace {

// First-byte matching can disagree with the access's last byte when it
// crosses a region or comparator boundary; flag it instead of splitting.
void lint_straddle(const planner::ProtectionPlan& plan, const mpu::AccessEvent& event,
                   std::vector<std::string>& lints) {
    if (event.width <= 1)
        return;
    std::uint32_t last = event.address + event.width - 1;
    if (mpu::in_ppb(event.address) != mpu::in_ppb(last)) {
        lints.push_back("access straddles the PPB boundary");
        return;
    }
    mpu::AccessEvent tail = event;
    tail.address = last;
    auto head_mpu = mpu::evaluate_mpu(plan.mpu_regions, event);
    auto tail_mpu = mpu::evaluate_mpu(plan.mpu_regions, tail);
    if (head_mpu.matched_region != tail_mpu.matched_region)
        lints.push_back("access straddles an MPU region boundary");
    auto head_dwt = dwt::match_address(plan.dwt_config, event.kind, event.address);
    auto tail_dwt = dwt::match_address(plan.dwt_config, event.kind, last);
    if (head_dwt != tail_dwt)
        lints.push_back("access straddles a watched range boundary");
}

} // namespace

AccessOutcome adjudicate(const planner::ProtectionPlan& plan,
                         const mpu::AccessEvent& event) {
    AccessOutcome out;
    out.event = event;
    lint_straddle(plan, event, out.lints);

    mpu::MpuDecision decision = mpu::evaluate_mpu(plan.mpu_regions, event);
    out.region = decision.matched_region;
    if (!decision.allowed) {
        out.result = AccessResult::mem_manage_fault;
        return out;
    }
    if (event.kind != mpu::AccessKind::fetch) {
        dwt::MatchResult m = dwt::dwt_match(plan.dwt_config, event);
        for (auto& l : m.lints)
            out.lints.push_back(std::move(l));
        if (m.exception) {
            out.result = AccessResult::debug_monitor_exception;
            out.comparator = m.exception->comparator;
            return out;
        }
    }
    out.result = AccessResult::allowed;
    return out;
}

std::vector<AccessOutcome> run_trace(const planner::ProtectionPlan& plan,
                                     const Trace& trace) {
    std::vector<AccessOutcome> out;
    out.reserve(trace.size());
    for (const mpu::AccessEvent& e : trace)
        out.push_back(adjudicate(plan, e));
    return out;
}

namespace {

struct Scenario {
    std::string name;
    Trace events;
    AccessResult expected;
};

ScenarioReport run_scenario(const planner::ProtectionPlan& plan, const Scenario& s) {
    ScenarioReport report{s.name, s.expected, s.expected, true};
    for (const mpu::AccessEvent& e : s.events) {
        AccessOutcome o = adjudicate(plan, e);
        if (o.result != s.expected) {
            report.observed = o.result;
            report.pass = false;
            return report;
        }
    }
    return report;
}

} // namespace

std::vector<ScenarioReport> attack_suite(const planner::ProtectionPlan& plan) {
    const mpu::Mode mode = plan.execution_mode;
    const bool guarded = plan.option == planner::PlanOption::privileged_with_guards;
    // Register tampering traps via a guard comparator when the app runs
    // privileged, and via the PPB unprivileged denial otherwise.
    const AccessResult tamper = guarded ? AccessResult::debug_monitor_exception
                                        : AccessResult::mem_manage_fault;

    Trace reads, writes;
    for (const planner::AddressRange& chunk : plan.code_chunks)
        for (std::uint64_t a = chunk.base; a < chunk.end(); a += 4) {
            auto addr = static_cast<std::uint32_t>(a);
            reads.push_back({mode, mpu::AccessKind::read, addr, 4});
            writes.push_back({mode, mpu::AccessKind::write, addr, 4});
        }

    auto reg_write = [&](std::uint32_t addr) {
        return Trace{{mode, mpu::AccessKind::write, addr, 4}};
    };

    const Scenario scenarios[] = {
        {"code-disclosure-read-sweep", reads, AccessResult::debug_monitor_exception},
        {"code-injection-write-sweep", writes, AccessResult::mem_manage_fault},
        {"mpu-register-tamper", reg_write(0xE000ED94), tamper},
        {"dwt-register-tamper", reg_write(0xE0001000), tamper},
        {"demcr-tamper", reg_write(0xE000EDFC), tamper},
        {"vtor-overwrite", reg_write(0xE000ED08), tamper},
    };

    std::vector<ScenarioReport> out;
    for (const Scenario& s : scenarios)
        out.push_back(run_scenario(plan, s));
    return out;
}

Trace parse_trace(std::istream& in) {
    Trace out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        std::string mode, kind, addr;
        unsigned width = 0;
        if (!(ls >> mode))
            continue; // blank line
        if (!(ls >> kind >> addr >> width))
            throw ParseError(lineno, "expected `<P|U> <R|W|X> <hex address> <width>`");
        std::string extra;
        if (ls >> extra)
            throw ParseError(lineno, "trailing token '" + extra + "'");

        mpu::AccessEvent e;
        if (mode == "P")
            e.mode = mpu::Mode::privileged;
        else if (mode == "U")
            e.mode = mpu::Mode::unprivileged;
        else
            throw ParseError(lineno, "mode must be P or U");
        if (kind == "R")
            e.kind = mpu::AccessKind::read;
        else if (kind == "W")
            e.kind = mpu::AccessKind::write;
        else if (kind == "X")
            e.kind = mpu::AccessKind::fetch;
        else
            throw ParseError(lineno, "kind must be R, W or X");
        try {
            std::size_t pos = 0;
            unsigned long long v = std::stoull(addr, &pos, 16);
            if (pos != addr.size() || v > 0xFFFFFFFFull)
                throw std::invalid_argument("");
            e.address = static_cast<std::uint32_t>(v);
        } catch (const std::exception&) {
            throw ParseError(lineno, "bad address '" + addr + "'");
        }
        if (width != 1 && width != 2 && width != 4)
            throw ParseError(lineno, "width must be 1, 2 or 4");
        e.width = width;
        if (std::uint64_t(e.address) + width > (1ull << 32))
            throw ParseError(lineno, "access wraps the 32-bit address space");
        out.push_back(e);
    }
    return out;
}

std::string format_outcome_line(const AccessOutcome& o) {
    std::string s;
    s += o.event.mode == mpu::Mode::privileged ? 'P' : 'U';
    s += ' ';
    s += o.event.kind == mpu::AccessKind::read    ? 'R'
         : o.event.kind == mpu::AccessKind::write ? 'W'
                                                  : 'X';
    s += ' ';
    s += hex32(o.event.address);
    s += ' ';
    s += std::to_string(o.event.width);
    s += ' ';
    s += to_string(o.result);
    return s;
}

void write_outcomes(std::ostream& out, std::span<const AccessOutcome> outcomes) {
    for (const AccessOutcome& o : outcomes)
        out << format_outcome_line(o) << '\n';
}

} // namespace xom::sim
