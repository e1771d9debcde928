#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "actreach/agents.hpp"
#include "actreach/coverage.hpp"
#include "actreach/plan.hpp"
#include "actreach/smali.hpp"
#include "actreach/widgets.hpp"

namespace actreach {

enum class OutcomeKind { Success, InstrumentationException, AppCrash, NoTransition };

std::string_view to_string(OutcomeKind kind);

struct ValidationOutcome {
    OutcomeKind kind = OutcomeKind::NoTransition;
    std::string message;  // exception message or crash trace
    std::optional<std::string> observed_activity;
    std::string raw_log;

    bool operator==(const ValidationOutcome&) const = default;
};

nlohmann::json to_json(const ValidationOutcome& outcome);

/// Something that can inject an artifact and report what happened.
class Device {
public:
    virtual ~Device() = default;
    virtual ValidationOutcome validate(const InstrumentationArtifact& artifact, std::string_view target) = 0;
};

struct GuardCondition {
    enum class Kind { Return, Extra, Flag };
    Kind kind = Kind::Return;
    MethodRef method;     // Return
    std::string key;      // Extra
    Literal literal;      // Return, Extra
    std::string flag;     // Flag (never satisfiable by instrumentation)

    bool operator==(const GuardCondition&) const = default;
};

/// Declarative device model. File format, tab-separated, one section header
/// per line (`ACTIVITIES`, `MAINS`, `TRANSITIONS`, `GUARDS`), `#` comments:
///
///     ACTIVITIES   <activity>
///     MAINS        <activity>
///     TRANSITIONS  <source> <target>
///     GUARDS       <target> return <class> <signature> <literal>
///                  <target> extra <key> <type> <value>
///                  <target> flag <name>
///
/// A transition into a guarded activity is never taken by the explorer.
struct DeviceScenario {
    std::vector<std::string> activities;
    std::vector<std::string> mains;
    std::vector<std::pair<std::string, std::string>> transitions;
    std::map<std::string, std::vector<GuardCondition>> guards;

    bool has_activity(std::string_view a) const;
    bool is_guarded(std::string_view a) const;
};

/// Throws InputError "ScenarioFormat".
DeviceScenario parse_scenario(std::string_view text);
DeviceScenario load_scenario(const std::filesystem::path& path);

/// Decides outcomes from the plan alone. With an index, a hook on a method
/// the index lacks (and not marked external) raises an instrumentation
/// exception; without one, hooks are checked against scenario guards only.
class SimulatedDevice : public Device {
public:
    explicit SimulatedDevice(DeviceScenario scenario, const CodeIndex* index = nullptr);

    ValidationOutcome validate(const InstrumentationArtifact& artifact, std::string_view target) override;
    ValidationOutcome evaluate(const InstrumentationPlan& plan, std::string_view target) const;

    const DeviceScenario& scenario() const { return scenario_; }

private:
    DeviceScenario scenario_;
    const CodeIndex* index_;
};

/// Contract for a real device: the command is run as
/// `<command> <script.js> <package> <target>` and must print lines
/// `OUTCOME <Success|InstrumentationException|AppCrash|NoTransition>`,
/// optionally `ACTIVITY <name>` and `MESSAGE <text>` (repeatable). Anything
/// else is kept as raw log. A non-zero exit or no OUTCOME line is
/// DeviceUnavailable.
class ExternalCommandDevice : public Device {
public:
    ExternalCommandDevice(std::string command, std::string package_name, std::filesystem::path work_dir);

    ValidationOutcome validate(const InstrumentationArtifact& artifact, std::string_view target) override;

    /// Parses an injector's stdout.
    static ValidationOutcome parse_output(std::string_view output);

private:
    std::string command_;
    std::string package_name_;
    std::filesystem::path work_dir_;
};

inline constexpr std::size_t kFeedbackCap = 8 * 1024;

/// `[<kind>]` tag line, then the message, capped at 8 KiB.
std::string compose_feedback(const ValidationOutcome& outcome);

inline constexpr int kMaxIterations = 5;

enum class LoopStatus { Reached, UnreachableByTool };

std::string_view to_string(LoopStatus status);

struct LoopIteration {
    InstrumentationArtifact artifact;
    ValidationOutcome outcome;
    std::string feedback;  // empty when the outcome is Success
};

struct LoopResult {
    std::string target;
    int iterations_used = 0;  // == iterations.size()
    std::vector<LoopIteration> iterations;
    std::optional<ValidationOutcome> final;
    LoopStatus status = LoopStatus::UnreachableByTool;
    std::string error;  // agent-layer error that stopped the loop
    bool static_report_partial = false;
};

nlohmann::json to_json(const LoopResult& result);

struct LoopOptions {
    int max_iterations = kMaxIterations;  // 1..5
    DynAgentOptions agent;
};

/// Generate, validate, then Refine with feedback until success or the cap.
/// Agent-layer errors end the loop as UnreachableByTool with `error` set.
LoopResult validation_loop(const ActivationConditionReport& report, Device& device, ModelClient& client,
                           const EpisodicMemory& episodic, std::string_view target, const LoopOptions& options = {});

struct ExploreOptions {
    std::size_t budget = 200;  // steps
    double cancel_prob = 0.0;
    std::uint64_t seed = 0;
};

/// Seeded random walk. Starts at a random main. Each step picks uniformly
/// among the current activity's unguarded transitions, a restart at a random
/// main, and (where a dialog is planted) the injected dialog button. The
/// dialog is dismissed with probability `cancel_prob`; otherwise a uniformly
/// chosen target opens, bypassing its guards.
ExplorationLog simulated_explore(const DeviceScenario& scenario, const ActivityDialogs& dialogs,
                                 const ExploreOptions& options);

}  // namespace actreach
