// Command-line front end: plan protection configurations, replay access
// traces, rewrite assembly to remove constant islands, and run the attack
// scenario suite.

#include <iostream>

#include <CLI11.hpp>

#include "xom/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"execute-only memory planning and checking toolkit for "
                 "ARM M-profile firmware"};
    app.require_subcommand(1);

    xom::cli::PlanArgs plan_args;
    CLI::App* plan = app.add_subcommand(
        "plan", "compute a protection plan for a firmware layout");
    plan->add_option("--layout", plan_args.layout_path, "layout config file")
        ->required();
    plan->add_option("--profile", plan_args.profile_path, "device profile config file")
        ->required();
    plan->add_option("--out", plan_args.out_path, "plan file to write")->required();

    xom::cli::CheckArgs check_args;
    CLI::App* check =
        app.add_subcommand("check", "adjudicate a memory-access trace against a plan");
    check->add_option("--plan", check_args.plan_path, "plan file")->required();
    check->add_option("--trace", check_args.trace_path, "trace file")->required();
    check->add_option("--out", check_args.out_path, "outcome file to write")->required();

    xom::cli::RewriteArgs rewrite_args;
    CLI::App* rewrite =
        app.add_subcommand("rewrite", "remove constant islands from assembly");
    rewrite->add_option("--in", rewrite_args.in_path, "assembly input")->required();
    rewrite->add_option("--out", rewrite_args.out_path, "assembly output")->required();
    rewrite->add_option("--report", rewrite_args.report_path, "rewrite report (JSON)");

    xom::cli::AttackArgs attack_args;
    CLI::App* attack =
        app.add_subcommand("attack", "run the attack scenario suite against a plan");
    attack->add_option("--plan", attack_args.plan_path, "plan file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? xom::cli::kExitOk : xom::cli::kExitUsage;
    }

    if (plan->parsed())
        return xom::cli::cmd_plan(plan_args, std::cout, std::cerr);
    if (check->parsed())
        return xom::cli::cmd_check(check_args, std::cout, std::cerr);
    if (rewrite->parsed())
        return xom::cli::cmd_rewrite(rewrite_args, std::cout, std::cerr);
    return xom::cli::cmd_attack(attack_args, std::cout, std::cerr);
}
