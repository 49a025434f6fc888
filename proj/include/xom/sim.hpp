#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xom/planner.hpp"

namespace xom::sim {

enum class AccessResult { allowed, mem_manage_fault, debug_monitor_exception };

std::string to_string(AccessResult r);

struct AccessOutcome {
    mpu::AccessEvent event;
    AccessResult result = AccessResult::allowed;
    std::optional<int> region;     // deciding MPU region, when one matched
    std::optional<int> comparator; // trapping DWT comparator
    std::vector<std::string> lints;
};

/// Adjudicate one access: MPU/PPB first (denial is a MemManage fault), then
/// DWT matching for data accesses (a match is a debug monitor exception).
/// Faults never stop anything; this is an oracle, not a CPU.
AccessOutcome adjudicate(const planner::ProtectionPlan& plan,
                         const mpu::AccessEvent& event);

using Trace = std::vector<mpu::AccessEvent>;

std::vector<AccessOutcome> run_trace(const planner::ProtectionPlan& plan,
                                     const Trace& trace);

struct ScenarioReport {
    std::string name;
    AccessResult expected;
    AccessResult observed;
    bool pass = false;
};

/// Fixed attack scenarios from the threat model: code disclosure and
/// injection sweeps plus tampering with the MPU, DWT, DEMCR and VTOR
/// registers. Expectations depend on the plan's option.
std::vector<ScenarioReport> attack_suite(const planner::ProtectionPlan& plan);

// Trace file format, one event per line: `<P|U> <R|W|X> <hex address> <width>`.
// The outcome file mirrors each line with a result column appended.
Trace parse_trace(std::istream& in); // throws ParseError
std::string format_outcome_line(const AccessOutcome& outcome);
void write_outcomes(std::ostream& out, std::span<const AccessOutcome> outcomes);

} // namespace xom::sim
