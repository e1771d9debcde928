// Command-line entry point: one subcommand per pipeline stage.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "actreach/pipeline.hpp"
#include "text_util.hpp"

namespace fs = std::filesystem;
using namespace actreach;

namespace {

struct Overrides {
    std::string config;
    std::string package_root;
    std::string output_dir;
    std::string replay;
    std::string scenario;
    std::string device_command;
    std::string exploration_log;
    std::optional<std::uint64_t> seed;
    std::optional<int> max_iterations;
    std::optional<std::size_t> budget;
    std::optional<std::size_t> jobs;
    std::optional<double> cancel_prob;
    std::optional<std::size_t> explore_budget;
    std::optional<std::size_t> result_cap;
};

PipelineConfig resolve_config(const Overrides& o) {
    PipelineConfig c = o.config.empty() ? PipelineConfig{} : load_config(o.config);
    if (!o.package_root.empty()) c.package_root = o.package_root;
    if (!o.output_dir.empty()) c.output_dir = o.output_dir;
    if (!o.replay.empty()) {
        c.replay_script = o.replay;
        c.model.reset();
    }
    if (!o.scenario.empty()) {
        c.scenario = o.scenario;
        c.device_command.clear();
    }
    if (!o.device_command.empty()) {
        c.device_command = o.device_command;
        c.scenario.clear();
    }
    if (!o.exploration_log.empty()) c.exploration_log = o.exploration_log;
    if (o.seed) c.rng_seed = *o.seed;
    if (o.max_iterations) c.max_iterations = *o.max_iterations;
    if (o.budget) c.tool_call_budget = *o.budget;
    if (o.jobs) c.jobs = *o.jobs;
    if (o.cancel_prob) c.cancel_prob = *o.cancel_prob;
    if (o.explore_budget) c.explore_budget = *o.explore_budget;
    if (o.result_cap) c.result_size_cap = *o.result_cap;
    check_config(c);
    return c;
}

std::string one_line(std::string s) {
    for (auto& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    return s;
}

int fail(std::string_view kind, const std::string& message, int code) {
    std::cerr << "error: " << kind << ": " << one_line(message) << "\n";
    return code;
}

std::vector<std::string> require_list(const fs::path& p, const std::string& what) {
    if (!fs::exists(p)) throw InputError("MissingInput", what + " not found at " + p.string());
    return read_activity_list(p);
}

// Targets named on the command line, or every unreachable activity.
std::vector<std::string> pick_targets(const PipelineConfig& c, const std::string& target, bool all) {
    if (all == !target.empty()) throw Error(ErrorCategory::Usage, "UsageError", "give either a target or --all");
    if (!all) return {normalize_class_name(target)};
    return require_list(OutputLayout{c.output_dir}.unreachable(), "unreachable list");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finds activities a GUI fuzzer cannot reach and instruments them into reach."};
    app.require_subcommand(1);
    Overrides o;
    app.add_option("--config", o.config, "Pipeline config (JSON)");
    app.add_option("--package", o.package_root, "Decoded package root (AndroidManifest.xml + smali*/)");
    app.add_option("--out", o.output_dir, "Output directory");
    app.add_option("--replay", o.replay, "Scripted model replay file");
    app.add_option("--scenario", o.scenario, "Simulated device scenario");
    app.add_option("--device-command", o.device_command, "External injector command");
    app.add_option("--log", o.exploration_log, "Baseline exploration log");
    app.add_option("--seed", o.seed, "Explorer seed");
    app.add_option("--max-iterations", o.max_iterations, "Validation loop cap (1-5)");
    app.add_option("--budget", o.budget, "Tool-call budget per agent session");
    app.add_option("--jobs", o.jobs, "Parallel targets for infer/validate --all");
    app.add_option("--cancel-prob", o.cancel_prob, "Probability the explorer dismisses a dialog");
    app.add_option("--explore-budget", o.explore_budget, "Explorer steps");
    app.add_option("--result-cap", o.result_cap, "Tool result size cap in bytes");

    auto* ingest = app.add_subcommand("ingest", "Parse the package and write a summary");
    std::string ctg_output;
    auto* ctg = app.add_subcommand("ctg", "Write the component transition graph");
    ctg->add_option("--output", ctg_output, "Destination (default <out>/ctg.tsv)");
    auto* unreachable = app.add_subcommand("unreachable", "List declared activities the baseline run missed");

    std::string record_file;
    bool wall = false;
    auto* serve = app.add_subcommand("mcp-serve", "Serve the code tools over stdio (JSON-RPC)");
    serve->add_option("--record", record_file, "Tool-call record file (default <out>/mcp_calls.jsonl)");
    serve->add_flag("--wall-clock", wall, "Timestamp records with UTC time instead of sequence numbers");

    std::string target;
    bool all = false;
    auto* infer = app.add_subcommand("infer", "Run the static agent for a target");
    infer->add_option("target", target, "Activity");
    infer->add_flag("--all", all, "Every unreachable activity");
    auto* instrument = app.add_subcommand("instrument", "Generate one instrumentation for a target");
    instrument->add_option("target", target, "Activity")->required();
    auto* validate = app.add_subcommand("validate", "Run the validate-refine loop");
    validate->add_option("target", target, "Activity");
    validate->add_flag("--all", all, "Every unreachable activity");

    auto* plan = app.add_subcommand("plan-widgets", "Place dialogs for validated targets");
    bool baseline = false;
    std::string explore_output;
    auto* explore_cmd = app.add_subcommand("explore", "Simulated exploration");
    explore_cmd->add_flag("--baseline", baseline, "Ignore dialogs");
    explore_cmd->add_option("--output", explore_output, "Destination log");

    std::string before_log, after_log;
    auto* report = app.add_subcommand("report", "Coverage before and after");
    report->add_option("--before", before_log, "Baseline log");
    report->add_option("--after", after_log, "Log with dialogs");

    std::string labels, reasons, ks = "1,3,5";
    auto* recall = app.add_subcommand("eval-recall", "recall@k of ranked unreachability reasons");
    recall->add_option("--labels", labels, "activity<TAB>truth<TAB>ranked lines")->required();
    recall->add_option("--reasons", reasons, "Reason taxonomy (default: built-in)");
    recall->add_option("--k", ks, "Comma-separated cut-offs");

    std::string records;
    auto* rates = app.add_subcommand("launch-rates", "Launch success per tool and reason");
    rates->add_option("--records", records, "target<TAB>category<TAB>0|1<TAB>tool lines")->required();

    auto* pipeline = app.add_subcommand("pipeline", "Run every stage");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("Usage", e.what(), 2);
    }

    try {
        if (recall->parsed()) {
            const auto taxonomy = reasons.empty() ? ReasonTaxonomy::defaults()
                                                  : ReasonTaxonomy::parse(detail::read_file(reasons));
            std::vector<std::size_t> cutoffs;
            for (const auto& k : detail::split(ks, ',')) {
                try {
                    cutoffs.push_back(std::stoul(k));
                } catch (const std::exception&) {
                    throw Error(ErrorCategory::Usage, "UsageError", "bad cut-off `" + k + "`");
                }
            }
            const auto table = evaluate_recall(parse_recall_labels(detail::read_file(labels), taxonomy), cutoffs);
            for (std::size_t i = 0; i < table.ks.size(); ++i) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.4f", table.mean[i]);
                std::cout << "recall@" << table.ks[i] << "\t" << buf << "\n";
            }
            return 0;
        }
        if (rates->parsed()) {
            for (const auto& [tool, r] : launch_success_rate(parse_launch_records(detail::read_file(records)))) {
                for (const auto& [cat, c] : r.per_category)
                    std::cout << tool << "\t" << cat << "\t" << c.successes << "/" << c.total << "\t"
                              << format_percent(c.rate()) << "\n";
                std::cout << tool << "\tweighted\t" << format_percent(r.weighted_average) << "\n";
            }
            return 0;
        }

        const auto config = resolve_config(o);
        const OutputLayout layout{config.output_dir};

        if (pipeline->parsed()) {
            const auto summary = run_pipeline(config);
            std::cout << format_report(summary.report);
            return 0;
        }
        if (report->parsed()) {
            const auto pkg = ingest_package(config.package_root);
            const auto read_log = [](const fs::path& p) {
                if (!fs::exists(p)) throw InputError("MissingInput", "exploration log not found at " + p.string());
                return parse_exploration_log(detail::read_file(p));
            };
            BeforeAfterReport r;
            r.package_name = pkg.package_name;
            r.before = make_coverage_report(pkg.declared_activities,
                                            read_log(before_log.empty() ? layout.baseline_log() : fs::path(before_log)));
            r.after = make_coverage_report(pkg.declared_activities,
                                           read_log(after_log.empty() ? layout.after_log() : fs::path(after_log)));
            if (fs::exists(layout.validated())) r.validated = read_activity_list(layout.validated());
            const auto text = format_report(r);
            detail::write_file(layout.coverage_report(), text);
            std::cout << text;
            return 0;
        }
        if (explore_cmd->parsed()) {
            ActivityDialogs dialogs;
            if (!baseline) {
                if (!fs::exists(layout.dialogs()))
                    throw InputError("MissingInput", "dialogs not found at " + layout.dialogs().string());
                dialogs = import_dialogs(detail::read_file(layout.dialogs()));
            }
            const auto log = explore(config, dialogs);
            const fs::path dest = !explore_output.empty() ? fs::path(explore_output)
                                  : baseline              ? layout.baseline_log()
                                                          : layout.after_log();
            detail::write_file(dest, format_exploration_log(log));
            std::cout << format_exploration_log(log);
            return 0;
        }

        const auto pkg = ingest_package(config.package_root);
        if (ingest->parsed()) {
            const auto summary = package_summary(pkg);
            detail::write_file(layout.package_summary(), summary.dump(2) + "\n");
            std::cout << summary.dump(2) << "\n";
        } else if (ctg->parsed()) {
            const fs::path dest = ctg_output.empty() ? layout.ctg() : fs::path(ctg_output);
            detail::write_file(dest, export_ctg(pkg.ctg));
            std::cout << pkg.ctg.edges.size() << " edges, " << pkg.ctg.unresolved_sites.size() << " unresolved sites\n";
        } else if (unreachable->parsed()) {
            ExplorationLog log;
            if (!config.exploration_log.empty()) {
                log = baseline_exploration(config);
            } else if (fs::exists(layout.baseline_log())) {
                log = parse_exploration_log(detail::read_file(layout.baseline_log()));
            } else {
                log = baseline_exploration(config);
                detail::write_file(layout.baseline_log(), format_exploration_log(log));
            }
            const auto list = compute_unreachable(pkg, log);
            detail::write_file(layout.unreachable(), format_activity_list(list));
            for (const auto& a : list) std::cout << to_java_name(a) << "\n";
        } else if (serve->parsed()) {
            Toolbox toolbox(pkg, config.result_size_cap);
            ToolCallRecorder recorder(record_file.empty() ? layout.mcp_log() : fs::path(record_file),
                                      wall ? wall_clock() : logical_clock());
            McpServer server(toolbox, recorder);
            server.serve(std::cin, std::cout);
        } else if (infer->parsed()) {
            const auto targets = pick_targets(config, target, all);
            auto client = make_client(config);
            for (const auto& r : infer_targets(config, pkg, *client, targets))
                std::cout << to_java_name(r.target) << "\t" << r.tool_call_count << " tool calls"
                          << (r.partial ? "\tpartial" : "") << "\n";
        } else if (instrument->parsed()) {
            auto client = make_client(config);
            const auto a = instrument_target(config, *client, target);
            std::cout << (layout.artifact_dir(a.target) / ("iter" + std::to_string(a.iteration) + ".js")).string() << "\n";
        } else if (validate->parsed()) {
            const auto targets = pick_targets(config, target, all);
            auto client = make_client(config);
            const auto loops = validate_targets(config, pkg, *client, targets);
            if (all) {
                write_validated(config, loops);
            } else {
                // Merge a single result into the existing list.
                std::set<std::string> reached;
                if (fs::exists(layout.validated()))
                    for (const auto& a : read_activity_list(layout.validated())) reached.insert(a);
                const auto& l = loops.front();
                if (l.status == LoopStatus::Reached) reached.insert(l.target);
                else reached.erase(l.target);
                detail::write_file(layout.validated(),
                                   format_activity_list(std::vector<std::string>(reached.begin(), reached.end())));
            }
            for (const auto& l : loops) {
                std::cout << to_java_name(l.target) << "\t" << to_string(l.status) << "\t" << l.iterations_used
                          << " iteration(s)";
                if (!l.error.empty()) std::cout << "\t" << one_line(l.error);
                std::cout << "\n";
            }
        } else if (plan->parsed()) {
            const auto validated = require_list(layout.validated(), "validated list");
            const auto unreachable_list = require_list(layout.unreachable(), "unreachable list");
            const auto dialogs = find_dialog_for_target(validated, pkg.ctg, pkg.main_activities, unreachable_list,
                                                        pkg.declared_activities);
            detail::write_file(layout.dialogs(), export_dialogs(dialogs));
            std::cout << export_dialogs(dialogs);
        }
        return 0;
    } catch (const Error& e) {
        return fail(e.kind(), e.what(), exit_code_for(e.category()));
    } catch (const fs::filesystem_error& e) {
        return fail("IOError", e.what(), 3);
    } catch (const std::exception& e) {
        return fail("InternalError", e.what(), 3);
    }
}
