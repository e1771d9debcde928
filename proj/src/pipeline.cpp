#include "actreach/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "actreach/error.hpp"
#include "text_util.hpp"

namespace actreach {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

PipelineConfig config_from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw InputError("ConfigError", "config must be a JSON object");
    auto path = [&](const char* key) -> fs::path {
        if (!j.contains(key) || j[key].is_null()) return {};
        const fs::path p = j[key].get<std::string>();
        return p.is_absolute() ? p : base_dir / p;
    };
    try {
        PipelineConfig c;
        c.package_root = path("package_root");
        c.exploration_log = path("exploration_log");
        c.replay_script = path("replay_script");
        if (j.contains("model") && !j["model"].is_null()) {
            const auto& m = j["model"];
            ModelEndpointConfig e;
            e.endpoint = m.at("endpoint").get<std::string>();
            e.model = m.value("model", "");
            e.api_key_env = m.value("api_key_env", "");
            e.timeout_seconds = m.value("timeout_seconds", 120);
            c.model = e;
        }
        c.max_iterations = j.value("max_iterations", kMaxIterations);
        c.tool_call_budget = j.value("tool_call_budget", kDefaultToolCallBudget);
        c.result_size_cap = j.value("result_size_cap", kDefaultResultCap);
        c.scenario = path("scenario");
        c.device_command = j.value("device_command", "");
        if (j.contains("output_dir")) c.output_dir = path("output_dir");
        c.rng_seed = j.value("rng_seed", std::uint64_t{0});
        c.explore_budget = j.value("explore_budget", std::size_t{2000});
        c.cancel_prob = j.value("cancel_prob", 0.0);
        c.jobs = j.value("jobs", std::size_t{1});
        return c;
    } catch (const json::exception& e) {
        throw InputError("ConfigError", std::string("bad config: ") + e.what());
    }
}

PipelineConfig load_config(const fs::path& path) {
    try {
        return config_from_json(json::parse(detail::read_file(path)), path.parent_path());
    } catch (const json::parse_error& e) {
        throw InputError("ConfigError", path.string() + ": " + e.what());
    }
}

void check_config(const PipelineConfig& c) {
    auto fail = [](const std::string& why) { return InputError("ConfigError", why); };
    if (c.package_root.empty()) throw fail("package_root is not set");
    if (c.max_iterations < 1 || c.max_iterations > kMaxIterations) throw fail("max_iterations must be between 1 and 5");
    if (c.tool_call_budget < 1) throw fail("tool_call_budget must be at least 1");
    if (c.result_size_cap < 64) throw fail("result_size_cap must be at least 64 bytes");
    if (!c.replay_script.empty() && c.model) throw fail("set either replay_script or model, not both");
    if (!c.scenario.empty() && !c.device_command.empty()) throw fail("set either scenario or device_command, not both");
    if (c.cancel_prob < 0.0 || c.cancel_prob > 1.0) throw fail("cancel_prob must be within [0, 1]");
    if (c.jobs < 1) throw fail("jobs must be at least 1");
}

// ---------------------------------------------------------------------------
// Layout and helpers
// ---------------------------------------------------------------------------

namespace {

std::string file_stem(const std::string& target) { return to_java_name(normalize_class_name(target)); }

std::string relative_to(const fs::path& p, const fs::path& root) { return fs::relative(p, root).generic_string(); }

OutputLayout layout_of(const PipelineConfig& c) { return {c.output_dir}; }

std::unique_ptr<Device> make_device(const PipelineConfig& c, const AppPackage& pkg, const std::string& target) {
    if (!c.scenario.empty()) return std::make_unique<SimulatedDevice>(load_scenario(c.scenario), &pkg.index);
    if (!c.device_command.empty())
        return std::make_unique<ExternalCommandDevice>(c.device_command, pkg.package_name,
                                                       layout_of(c).artifact_dir(target));
    throw InputError("ConfigError", "no device configured (scenario or device_command)");
}

void write_json(const fs::path& p, const json& j) { detail::write_file(p, j.dump(2) + "\n"); }

}  // namespace

fs::path OutputLayout::episodic(const std::string& target) const {
    return root / "episodic" / (file_stem(target) + ".jsonl");
}
fs::path OutputLayout::report(const std::string& target) const {
    return root / "reports" / (file_stem(target) + ".json");
}
fs::path OutputLayout::artifact_dir(const std::string& target) const { return root / "artifacts" / file_stem(target); }
fs::path OutputLayout::loop(const std::string& target) const { return root / "loops" / (file_stem(target) + ".json"); }

std::unique_ptr<ModelClient> make_client(const PipelineConfig& c) {
    if (!c.replay_script.empty()) {
        try {
            return std::make_unique<ScriptedClient>(json::parse(detail::read_file(c.replay_script)));
        } catch (const json::parse_error& e) {
            throw InputError("ReplayFormat", c.replay_script.string() + ": " + e.what());
        }
    }
    if (c.model) {
        HttpClientConfig h;
        h.endpoint = c.model->endpoint;
        h.model = c.model->model;
        h.timeout_seconds = c.model->timeout_seconds;
        if (!c.model->api_key_env.empty()) {
            const char* key = std::getenv(c.model->api_key_env.c_str());
            if (!key) throw InputError("ConfigError", "environment variable " + c.model->api_key_env + " is not set");
            h.api_key = key;
        }
        return std::make_unique<HttpChatClient>(h);
    }
    throw InputError("ConfigError", "no model client configured (replay_script or model)");
}

json package_summary(const AppPackage& pkg) {
    json j;
    j["package"] = pkg.package_name;
    j["declared_activities"] = pkg.declared_activities;
    j["main_activities"] = pkg.main_activities;
    j["class_count"] = pkg.index.classes().size();
    j["method_count"] = pkg.index.method_count();
    j["ctg_edges"] = pkg.ctg.edges.size();
    j["unresolved_launch_sites"] = pkg.ctg.unresolved_sites.size();
    return j;
}

std::vector<std::string> read_activity_list(const fs::path& path) {
    std::vector<std::string> out;
    for (const auto& line : detail::split_lines(detail::read_file(path))) {
        const auto t = detail::trim(line);
        if (t.empty() || t.starts_with('#')) continue;
        out.push_back(normalize_class_name(t));
    }
    return out;
}

std::string format_activity_list(const std::vector<std::string>& activities) {
    std::string out;
    for (const auto& a : activities) out += a + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

ActivationConditionReport infer_target(const PipelineConfig& config, const AppPackage& pkg, ModelClient& client,
                                       const std::string& target) {
    const auto layout = layout_of(config);
    const auto desc = normalize_class_name(target);
    const auto episodic = layout.episodic(desc);
    fs::create_directories(episodic.parent_path());
    ToolCallRecorder recorder(episodic);
    Toolbox toolbox(pkg, config.result_size_cap);
    StaticAgentOptions options;
    options.tool_call_budget = config.tool_call_budget;
    options.episodic_ref = relative_to(episodic, layout.root);
    auto report = run_static_agent(client, toolbox, recorder, pkg, desc, options);
    write_json(layout.report(desc), to_json(report));
    return report;
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    const auto workers = std::max<std::size_t>(1, std::min(jobs, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            while (true) {
                const auto i = next.fetch_add(1);
                if (i >= n) return;
                {
                    std::lock_guard lock(failure_mutex);
                    if (failure) return;
                }
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

std::vector<ActivationConditionReport> infer_targets(const PipelineConfig& config, const AppPackage& pkg,
                                                     ModelClient& client, const std::vector<std::string>& targets) {
    std::vector<ActivationConditionReport> reports(targets.size());
    parallel_for(targets.size(), config.jobs,
                 [&](std::size_t i) { reports[i] = infer_target(config, pkg, client, targets[i]); });
    return reports;
}

namespace {

ActivationConditionReport load_report(const OutputLayout& layout, const std::string& target) {
    const auto p = layout.report(target);
    if (!fs::exists(p)) throw InputError("MissingReport", "no activation-condition report for " + target + " (run infer first)");
    try {
        return report_from_json(json::parse(detail::read_file(p)));
    } catch (const json::parse_error& e) {
        throw InputError("ReportFormat", p.string() + ": " + e.what());
    }
}

EpisodicMemory load_episodic(const OutputLayout& layout, const std::string& target) {
    const auto p = layout.episodic(target);
    if (!fs::exists(p)) return {normalize_class_name(target), {}};
    return EpisodicMemory::load(p, target);
}

void write_artifact(const OutputLayout& layout, const InstrumentationArtifact& a) {
    const auto dir = layout.artifact_dir(a.target);
    const auto stem = "iter" + std::to_string(a.iteration);
    write_json(dir / (stem + ".json"), to_json(a));
    detail::write_file(dir / (stem + ".js"), a.script_text);
}

}  // namespace

InstrumentationArtifact instrument_target(const PipelineConfig& config, ModelClient& client, const std::string& target) {
    const auto layout = layout_of(config);
    const auto desc = normalize_class_name(target);
    const auto report = load_report(layout, desc);
    const auto episodic = load_episodic(layout, desc);
    DynAgentOptions options;
    options.tool_call_budget = config.tool_call_budget;
    auto artifact = run_dyn_agent(client, episodic, report, std::nullopt, std::nullopt, options);
    write_artifact(layout, artifact);
    return artifact;
}

LoopResult validate_target(const PipelineConfig& config, const AppPackage& pkg, ModelClient& client,
                           const std::string& target) {
    const auto layout = layout_of(config);
    const auto desc = normalize_class_name(target);
    const auto report = load_report(layout, desc);
    const auto episodic = load_episodic(layout, desc);
    auto device = make_device(config, pkg, desc);
    LoopOptions options;
    options.max_iterations = config.max_iterations;
    options.agent.tool_call_budget = config.tool_call_budget;
    auto result = validation_loop(report, *device, client, episodic, desc, options);
    for (const auto& it : result.iterations) write_artifact(layout, it.artifact);
    write_json(layout.loop(desc), to_json(result));
    return result;
}

std::vector<LoopResult> validate_targets(const PipelineConfig& config, const AppPackage& pkg, ModelClient& client,
                                         const std::vector<std::string>& targets) {
    std::vector<LoopResult> results(targets.size());
    parallel_for(targets.size(), config.jobs,
                 [&](std::size_t i) { results[i] = validate_target(config, pkg, client, targets[i]); });
    return results;
}

std::vector<std::string> write_validated(const PipelineConfig& config, const std::vector<LoopResult>& loops) {
    std::vector<std::string> reached;
    for (const auto& l : loops)
        if (l.status == LoopStatus::Reached) reached.push_back(l.target);
    std::sort(reached.begin(), reached.end());
    detail::write_file(layout_of(config).validated(), format_activity_list(reached));
    return reached;
}

ExplorationLog explore(const PipelineConfig& config, const ActivityDialogs& dialogs) {
    if (config.scenario.empty()) throw InputError("ConfigError", "simulated exploration needs a scenario");
    ExploreOptions options;
    options.budget = config.explore_budget;
    options.cancel_prob = config.cancel_prob;
    options.seed = config.rng_seed;
    return simulated_explore(load_scenario(config.scenario), dialogs, options);
}

ExplorationLog baseline_exploration(const PipelineConfig& config) {
    if (!config.exploration_log.empty()) return parse_exploration_log(detail::read_file(config.exploration_log));
    return explore(config, {});
}

std::vector<std::string> compute_unreachable(const AppPackage& pkg, const ExplorationLog& baseline) {
    return unreachable_set(pkg.declared_activities, baseline.visited).unreachable;
}

std::string format_report(const BeforeAfterReport& r) {
    auto section = [](const std::string& name, const std::vector<std::string>& items) {
        std::string out = "[" + name + "]\n";
        for (const auto& a : items) out += to_java_name(a) + "\n";
        return out;
    };
    std::string out;
    out += "package\t" + r.package_name + "\n";
    out += "declared\t" + std::to_string(r.before.declared_count) + "\n";
    out += "before_visited\t" + std::to_string(r.before.visited_count) + "\n";
    out += "before_coverage\t" + format_percent(r.before.activity_coverage) + "\n";
    out += "after_visited\t" + std::to_string(r.after.visited_count) + "\n";
    out += "after_coverage\t" + format_percent(r.after.activity_coverage) + "\n";
    out += "validated\t" + std::to_string(r.validated.size()) + "\n";
    out += section("validated", r.validated);
    out += section("unreachable_before", r.before.unreachable);
    out += section("unreachable_after", r.after.unreachable);
    return out;
}

PipelineSummary run_pipeline(const PipelineConfig& config) {
    check_config(config);
    const auto layout = layout_of(config);
    fs::create_directories(layout.root);

    const auto pkg = ingest_package(config.package_root);
    write_json(layout.package_summary(), package_summary(pkg));
    detail::write_file(layout.ctg(), export_ctg(pkg.ctg));

    const auto baseline = baseline_exploration(config);
    detail::write_file(layout.baseline_log(), format_exploration_log(baseline));
    const auto unreachable = compute_unreachable(pkg, baseline);
    detail::write_file(layout.unreachable(), format_activity_list(unreachable));

    auto client = make_client(config);
    infer_targets(config, pkg, *client, unreachable);

    PipelineSummary summary;
    summary.loops = validate_targets(config, pkg, *client, unreachable);
    const auto validated = write_validated(config, summary.loops);

    summary.dialogs =
        find_dialog_for_target(validated, pkg.ctg, pkg.main_activities, unreachable, pkg.declared_activities);
    detail::write_file(layout.dialogs(), export_dialogs(summary.dialogs));

    const auto after = explore(config, summary.dialogs);
    detail::write_file(layout.after_log(), format_exploration_log(after));

    summary.report.package_name = pkg.package_name;
    summary.report.before = make_coverage_report(pkg.declared_activities, baseline);
    summary.report.after = make_coverage_report(pkg.declared_activities, after);
    summary.report.validated = validated;
    detail::write_file(layout.coverage_report(), format_report(summary.report));
    return summary;
}

}  // namespace actreach
