#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "actreach/agents.hpp"
#include "actreach/app_package.hpp"
#include "actreach/coverage.hpp"
#include "actreach/model_client.hpp"
#include "actreach/validation.hpp"
#include "actreach/widgets.hpp"

namespace actreach {

struct ModelEndpointConfig {
    std::string endpoint;
    std::string model;
    std::string api_key_env;  // name of the environment variable holding the key
    int timeout_seconds = 120;
};

struct PipelineConfig {
    std::filesystem::path package_root;
    std::filesystem::path exploration_log;  // optional; otherwise a simulated baseline run
    std::filesystem::path replay_script;    // scripted client ...
    std::optional<ModelEndpointConfig> model;  // ... or a live endpoint
    int max_iterations = kMaxIterations;
    std::size_t tool_call_budget = kDefaultToolCallBudget;
    std::size_t result_size_cap = kDefaultResultCap;
    std::filesystem::path scenario;  // simulated device ...
    std::string device_command;      // ... or an external injector
    std::filesystem::path output_dir = "out";
    std::uint64_t rng_seed = 0;
    std::size_t explore_budget = 2000;
    double cancel_prob = 0.0;
    std::size_t jobs = 1;
};

/// Relative paths are resolved against `base_dir`.
PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

/// Throws InputError "ConfigError" when an invariant does not hold.
void check_config(const PipelineConfig& config);

/// File names inside the output directory.
struct OutputLayout {
    std::filesystem::path root;

    std::filesystem::path package_summary() const { return root / "package.json"; }
    std::filesystem::path ctg() const { return root / "ctg.tsv"; }
    std::filesystem::path baseline_log() const { return root / "exploration_baseline.txt"; }
    std::filesystem::path after_log() const { return root / "exploration_after.txt"; }
    std::filesystem::path unreachable() const { return root / "unreachable.txt"; }
    std::filesystem::path episodic(const std::string& target) const;
    std::filesystem::path report(const std::string& target) const;
    std::filesystem::path artifact_dir(const std::string& target) const;
    std::filesystem::path loop(const std::string& target) const;
    std::filesystem::path validated() const { return root / "validated.txt"; }
    std::filesystem::path dialogs() const { return root / "dialogs.tsv"; }
    std::filesystem::path coverage_report() const { return root / "report.txt"; }
    std::filesystem::path mcp_log() const { return root / "mcp_calls.jsonl"; }
};

std::unique_ptr<ModelClient> make_client(const PipelineConfig& config);

nlohmann::json package_summary(const AppPackage& pkg);

/// Activities, one descriptor per line.
std::vector<std::string> read_activity_list(const std::filesystem::path& path);
std::string format_activity_list(const std::vector<std::string>& activities);

/// Writes the episodic file and the report for one target.
ActivationConditionReport infer_target(const PipelineConfig& config, const AppPackage& pkg, ModelClient& client,
                                       const std::string& target);

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads. The first exception
/// is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

std::vector<ActivationConditionReport> infer_targets(const PipelineConfig& config, const AppPackage& pkg,
                                                     ModelClient& client, const std::vector<std::string>& targets);

/// Single Generate step, written under the target's artifact directory.
InstrumentationArtifact instrument_target(const PipelineConfig& config, ModelClient& client, const std::string& target);

/// Loads the report and episodic file from disk, runs the loop against a
/// fresh device and writes artifacts plus the loop result.
LoopResult validate_target(const PipelineConfig& config, const AppPackage& pkg, ModelClient& client,
                           const std::string& target);

std::vector<LoopResult> validate_targets(const PipelineConfig& config, const AppPackage& pkg, ModelClient& client,
                                         const std::vector<std::string>& targets);

/// Writes `validated.txt` from loop results (Reached only, sorted).
std::vector<std::string> write_validated(const PipelineConfig& config, const std::vector<LoopResult>& loops);

/// Simulated walk over the configured scenario.
ExplorationLog explore(const PipelineConfig& config, const ActivityDialogs& dialogs);

/// The configured exploration log if any, else a simulated run without
/// dialogs.
ExplorationLog baseline_exploration(const PipelineConfig& config);

/// Unreachable declared activities given a baseline log.
std::vector<std::string> compute_unreachable(const AppPackage& pkg, const ExplorationLog& baseline);

struct BeforeAfterReport {
    std::string package_name;
    CoverageReport before;
    CoverageReport after;
    std::vector<std::string> validated;
};

std::string format_report(const BeforeAfterReport& report);

struct PipelineSummary {
    BeforeAfterReport report;
    std::vector<LoopResult> loops;
    ActivityDialogs dialogs;
};

/// ingest → ctg → baseline → unreachable → infer → validate → plan → explore → report.
PipelineSummary run_pipeline(const PipelineConfig& config);

}  // namespace actreach
