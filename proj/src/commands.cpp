#include "xom/commands.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "xom/config.hpp"
#include "xom/errors.hpp"
#include "xom/rewriter.hpp"
#include "xom/sim.hpp"
#include "xom/util.hpp"

namespace xom::cli {

namespace {

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write '" + path + "'");
    out << text;
}

planner::ProtectionPlan load_plan(const std::string& path) {
    config::ConfigDocument doc = config::load_file(path);
    if (!doc.plan)
        throw ConfigError(path + ": no plan section");
    return *doc.plan;
}

} // namespace

int cmd_plan(const PlanArgs& args, std::ostream& out, std::ostream& err) {
    try {
        config::ConfigDocument profile_doc = config::load_file(args.profile_path);
        config::ConfigDocument layout_doc = config::load_file(args.layout_path);
        if (!profile_doc.profile)
            throw ConfigError(args.profile_path + ": no profile section");
        if (!layout_doc.layout)
            throw ConfigError(args.layout_path + ": no layout section");

        planner::ProtectionPlan plan =
            planner::plan(*profile_doc.profile, *layout_doc.layout);
        auto boot = planner::emit_boot_sequence(plan);

        config::ConfigDocument result;
        result.plan = plan;
        result.boot_sequence = boot;
        config::save_file(args.out_path, result);

        int code_comparators = 0, guard_comparators = 0;
        for (const dwt::Comparator& c : plan.dwt_config.comparators) {
            dwt::WatchKind f = std::holds_alternative<dwt::ComparatorV7>(c)
                                   ? std::get<dwt::ComparatorV7>(c).function
                                   : std::get<dwt::ComparatorPairV8>(c).function;
            (f == dwt::WatchKind::read ? code_comparators : guard_comparators) +=
                std::holds_alternative<dwt::ComparatorV7>(c) ? 1 : 2;
        }
        const auto& code = layout_doc.layout->code;
        out << "option: " << planner::to_string(plan.option) << "\n"
            << "execution mode: "
            << (plan.execution_mode == mpu::Mode::privileged ? "privileged"
                                                             : "unprivileged")
            << "\n"
            << "code: " << hex32(code.base) << " + " << code.size << " bytes in "
            << plan.code_chunks.size() << " chunk(s), required alignment "
            << plan.required_code_alignment << "\n"
            << "dwt comparators: " << code_comparators << " watching code, "
            << guard_comparators << " guarding registers\n"
            << "mpu regions: " << plan.mpu_regions.size() << "\n"
            << "plan written to " << args.out_path << "\n";
        return kExitOk;
    } catch (const RejectError& e) {
        err << "rejected: " << e.what() << "\n";
        return kExitReject;
    } catch (const InfeasibleError& e) {
        err << "infeasible: " << e.what() << "\n";
        return kExitReject;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

int cmd_check(const CheckArgs& args, std::ostream& out, std::ostream& err) {
    try {
        planner::ProtectionPlan plan = load_plan(args.plan_path);
        std::ifstream trace_in(args.trace_path);
        if (!trace_in)
            throw ConfigError("cannot open '" + args.trace_path + "'");
        sim::Trace trace = sim::parse_trace(trace_in);
        auto outcomes = sim::run_trace(plan, trace);
        std::ofstream outcome_out(args.out_path, std::ios::binary);
        if (!outcome_out)
            throw ConfigError("cannot write '" + args.out_path + "'");
        sim::write_outcomes(outcome_out, outcomes);
        out << outcomes.size() << " event(s) adjudicated, outcomes written to "
            << args.out_path << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

int cmd_rewrite(const RewriteArgs& args, std::ostream& out, std::ostream& err) {
    try {
        rewriter::AsmProgram prog = rewriter::parse(read_text_file(args.in_path));
        rewriter::RewriteResult result = rewriter::rewrite_program(prog);
        if (result.report.islands_remaining > 0) {
            err << "refusing to write output: " << result.report.islands_remaining
                << " constant island(s) remain after rewriting\n";
            return kExitReject;
        }
        write_text_file(args.out_path, rewriter::serialize(result.program));
        if (!args.report_path.empty()) {
            nlohmann::ordered_json j;
            j["loads_rewritten"] = result.report.loads_rewritten;
            j["tables_rewritten"] = result.report.tables_rewritten;
            j["bytes_before"] = result.report.bytes_before;
            j["bytes_after"] = result.report.bytes_after;
            j["islands_remaining"] = result.report.islands_remaining;
            write_text_file(args.report_path, j.dump(2) + "\n");
        }
        out << "rewrote " << result.report.loads_rewritten << " load(s) and "
            << result.report.tables_rewritten << " table(s); " << result.report.bytes_before
            << " -> " << result.report.bytes_after << " bytes\n";
        return kExitOk;
    } catch (const UnsupportedLiteralError& e) {
        err << "unsupported literal: " << e.what() << "\n";
        return kExitReject;
    } catch (const UnsupportedTableError& e) {
        err << "unsupported table: " << e.what() << "\n";
        return kExitReject;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

int cmd_attack(const AttackArgs& args, std::ostream& out, std::ostream& err) {
    try {
        planner::ProtectionPlan plan = load_plan(args.plan_path);
        auto reports = sim::attack_suite(plan);
        bool all_pass = true;
        for (const sim::ScenarioReport& r : reports) {
            out << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  expected "
                << sim::to_string(r.expected) << ", observed " << sim::to_string(r.observed)
                << "\n";
            all_pass = all_pass && r.pass;
        }
        return all_pass ? kExitOk : kExitReject;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

} // namespace xom::cli
