#pragma once

#include <iosfwd>
#include <string>

namespace xom::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;  // usage, parse or config errors
inline constexpr int kExitReject = 2; // rejection, refusal or scenario failure

struct PlanArgs {
    std::string layout_path;
    std::string profile_path;
    std::string out_path;
};

struct CheckArgs {
    std::string plan_path;
    std::string trace_path;
    std::string out_path;
};

struct RewriteArgs {
    std::string in_path;
    std::string out_path;
    std::string report_path; // optional
};

struct AttackArgs {
    std::string plan_path;
};

int cmd_plan(const PlanArgs& args, std::ostream& out, std::ostream& err);
int cmd_check(const CheckArgs& args, std::ostream& out, std::ostream& err);
int cmd_rewrite(const RewriteArgs& args, std::ostream& out, std::ostream& err);
int cmd_attack(const AttackArgs& args, std::ostream& out, std::ostream& err);

} // namespace xom::cli
