#include "actreach/validation.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <sys/wait.h>

#include "actreach/error.hpp"
#include "actreach/script.hpp"
#include "text_util.hpp"

namespace actreach {

using nlohmann::json;

std::string_view to_string(OutcomeKind kind) {
    switch (kind) {
    case OutcomeKind::Success: return "Success";
    case OutcomeKind::InstrumentationException: return "InstrumentationException";
    case OutcomeKind::AppCrash: return "AppCrash";
    case OutcomeKind::NoTransition: return "NoTransition";
    }
    return "NoTransition";
}

std::string_view to_string(LoopStatus status) {
    return status == LoopStatus::Reached ? "Reached" : "UnreachableByTool";
}

json to_json(const ValidationOutcome& o) {
    json j = {{"kind", std::string(to_string(o.kind))}, {"message", o.message}, {"raw_log", o.raw_log}};
    j["observed_activity"] = o.observed_activity ? json(*o.observed_activity) : json(nullptr);
    return j;
}

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

bool DeviceScenario::has_activity(std::string_view a) const {
    return std::find(activities.begin(), activities.end(), normalize_class_name(a)) != activities.end();
}

bool DeviceScenario::is_guarded(std::string_view a) const {
    const auto it = guards.find(normalize_class_name(a));
    return it != guards.end() && !it->second.empty();
}

DeviceScenario parse_scenario(std::string_view text) {
    DeviceScenario s;
    enum class Part { None, Activities, Mains, Transitions, Guards } part = Part::None;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& why) {
        return InputError("ScenarioFormat", "line " + std::to_string(line_no) + ": " + why);
    };
    for (const auto& raw : detail::split_lines(text)) {
        ++line_no;
        const auto line = detail::trim(raw);
        if (line.empty() || line.starts_with('#')) continue;
        if (line == "ACTIVITIES") { part = Part::Activities; continue; }
        if (line == "MAINS") { part = Part::Mains; continue; }
        if (line == "TRANSITIONS") { part = Part::Transitions; continue; }
        if (line == "GUARDS") { part = Part::Guards; continue; }

        auto fields = detail::split(line, '\t');
        for (auto& f : fields) f = std::string(detail::trim(f));
        switch (part) {
        case Part::None: throw fail("data before the first section header");
        case Part::Activities:
        case Part::Mains: {
            if (fields.size() != 1) throw fail("expected one activity per line");
            const auto a = normalize_class_name(fields[0]);
            auto& list = part == Part::Activities ? s.activities : s.mains;
            if (std::find(list.begin(), list.end(), a) == list.end()) list.push_back(a);
            break;
        }
        case Part::Transitions:
            if (fields.size() != 2) throw fail("expected source<TAB>target");
            s.transitions.emplace_back(normalize_class_name(fields[0]), normalize_class_name(fields[1]));
            break;
        case Part::Guards: {
            if (fields.size() < 3) throw fail("guard needs target, kind and arguments");
            GuardCondition g;
            const auto target = normalize_class_name(fields[0]);
            try {
                if (fields[1] == "return") {
                    if (fields.size() != 5) throw fail("expected target<TAB>return<TAB>class<TAB>signature<TAB>literal");
                    g.kind = GuardCondition::Kind::Return;
                    g.method = {normalize_class_name(fields[2]), fields[3]};
                    g.literal = parse_plan("hook " + g.method.owner + " " + g.method.signature + " " + fields[4])
                                    .hooks.at(0)
                                    .forced_return;
                } else if (fields[1] == "extra") {
                    if (fields.size() != 5) throw fail("expected target<TAB>extra<TAB>key<TAB>type<TAB>value");
                    g.kind = GuardCondition::Kind::Extra;
                    g.key = fields[2];
                    const auto value = fields[3] == "string" && !fields[4].starts_with('"') ? json(fields[4]).dump()
                                                                                           : fields[4];
                    const auto plan = parse_plan("intent " + target + "\nextra k " + fields[3] + " " + value);
                    g.literal = plan.intent->extras.at(0).second;
                } else if (fields[1] == "flag") {
                    if (fields.size() != 3) throw fail("expected target<TAB>flag<TAB>name");
                    g.kind = GuardCondition::Kind::Flag;
                    g.flag = fields[2];
                } else {
                    throw fail("unknown guard kind `" + fields[1] + "`");
                }
            } catch (const PlanParseError& e) {
                throw fail(std::string("bad guard literal: ") + e.what());
            }
            s.guards[target].push_back(std::move(g));
            break;
        }
        }
    }
    auto known = [&](const std::string& a) {
        return std::find(s.activities.begin(), s.activities.end(), a) != s.activities.end();
    };
    for (const auto& m : s.mains)
        if (!known(m)) throw InputError("ScenarioFormat", "main " + m + " is not listed under ACTIVITIES");
    for (const auto& [a, b] : s.transitions)
        if (!known(a) || !known(b)) throw InputError("ScenarioFormat", "transition " + a + " -> " + b + " names an unknown activity");
    for (const auto& [t, _] : s.guards)
        if (!known(t)) throw InputError("ScenarioFormat", "guarded target " + t + " is not listed under ACTIVITIES");
    return s;
}

DeviceScenario load_scenario(const std::filesystem::path& path) { return parse_scenario(detail::read_file(path)); }

// ---------------------------------------------------------------------------
// SimulatedDevice
// ---------------------------------------------------------------------------

namespace {

// Whether a forced return literal fits the method's declared return type.
bool return_compatible(std::string_view ret, const Literal& lit) {
    if (lit.type == "skip-body") return ret == "V";
    if (ret == "V") return false;
    if (ret == "Z") return lit.type == "boolean";
    if (ret == "I" || ret == "S" || ret == "B" || ret == "C") return lit.type == "int";
    if (ret == "J") return lit.type == "int" || lit.type == "long";
    if (ret == "F" || ret == "D") return lit.type == "int" || lit.type == "float" || lit.type == "double";
    if (ret == "Ljava/lang/String;" || ret == "Ljava/lang/CharSequence;" || ret == "Ljava/lang/Object;")
        return lit.type == "string" || lit.type == "null";
    return lit.type == "null";
}

// Compares two literals, allowing an int literal to stand in for a long.
bool same_value(const Literal& want, const Literal& got) {
    if (want.type == got.type) return want.value == got.value;
    const bool integral = (want.type == "int" || want.type == "long") && (got.type == "int" || got.type == "long");
    return integral && want.value == got.value;
}

bool same_type(const Literal& want, const Literal& got) {
    if (want.type == got.type) return true;
    return want.type == "long" && got.type == "int";
}

std::string crash_trace(const std::string& exception, const std::string& target) {
    return exception + "\n\tat " + to_java_name(target) + ".onCreate(" + simple_class_name(target) +
           ".java)\n\tat android.app.Activity.performCreate(Activity.java)";
}

}  // namespace

SimulatedDevice::SimulatedDevice(DeviceScenario scenario, const CodeIndex* index)
    : scenario_(std::move(scenario)), index_(index) {}

ValidationOutcome SimulatedDevice::validate(const InstrumentationArtifact& artifact, std::string_view target) {
    return evaluate(artifact.plan, target);
}

ValidationOutcome SimulatedDevice::evaluate(const InstrumentationPlan& plan, std::string_view target_name) const {
    const auto target = normalize_class_name(target_name);
    ValidationOutcome out;
    std::string log;

    for (const auto& h : plan.hooks) {
        const auto java = to_java_name(h.method.owner);
        if (index_ && !h.external) {
            if (!index_->find_class(h.method.owner)) {
                out.kind = OutcomeKind::InstrumentationException;
                out.message = "Error: java.lang.ClassNotFoundException: Didn't find class \"" + java + "\"";
                out.raw_log = log + out.message + "\n";
                return out;
            }
            if (!index_->find_method(h.method)) {
                out.kind = OutcomeKind::InstrumentationException;
                out.message = "Error: " + java + "." + std::string(method_name(h.method.signature)) +
                              "(): specified overload not found: " + h.method.signature;
                out.raw_log = log + out.message + "\n";
                return out;
            }
        }
        if (!return_compatible(return_type(h.method.signature), h.forced_return)) {
            out.kind = OutcomeKind::InstrumentationException;
            out.message = "Error: implementation for " + java + "." + std::string(method_name(h.method.signature)) +
                          " returned a value incompatible with " + return_type(h.method.signature) + " (" +
                          h.forced_return.type + ")";
            out.raw_log = log + out.message + "\n";
            return out;
        }
        log += "hooked " + h.method.str() + "\n";
    }

    if (!plan.launch) {
        out.kind = OutcomeKind::NoTransition;
        out.message = "transition did not occur: the script never starts an activity";
        out.raw_log = log + "no startActivity issued\n";
        return out;
    }

    const auto launched = plan.intent ? plan.intent->target : target;
    log += "startActivity " + to_java_name(launched) + "\n";
    if (!scenario_.has_activity(launched)) {
        out.kind = OutcomeKind::AppCrash;
        out.message = "android.content.ActivityNotFoundException: Unable to find explicit activity class {" +
                      to_java_name(launched) + "}; have you declared this activity in your AndroidManifest.xml?";
        out.raw_log = log + out.message + "\n";
        return out;
    }
    if (launched != target) {
        out.kind = OutcomeKind::NoTransition;
        out.observed_activity = launched;
        out.message = "transition did not occur: " + to_java_name(launched) + " opened instead of " + to_java_name(target);
        out.raw_log = log + "resumed " + to_java_name(launched) + "\n";
        return out;
    }

    const auto it = scenario_.guards.find(target);
    const std::vector<GuardCondition> none;
    const auto& guards = it == scenario_.guards.end() ? none : it->second;

    auto find_extra = [&](const std::string& key) -> const Literal* {
        if (!plan.intent) return nullptr;
        for (const auto& [k, v] : plan.intent->extras)
            if (k == key) return &v;
        return nullptr;
    };

    // Crashes come first: the activity reads its extras in onCreate.
    for (const auto& g : guards) {
        if (g.kind != GuardCondition::Kind::Extra) continue;
        const auto* got = find_extra(g.key);
        if (!got) {
            out.kind = OutcomeKind::AppCrash;
            out.message = crash_trace("java.lang.IllegalStateException: required intent extra \"" + g.key +
                                          "\" (" + g.literal.type + ") is missing",
                                      target);
            out.raw_log = log + "FATAL EXCEPTION: main\n" + out.message + "\n";
            return out;
        }
        if (!same_type(g.literal, *got)) {
            out.kind = OutcomeKind::AppCrash;
            out.message = crash_trace("java.lang.ClassCastException: intent extra \"" + g.key + "\" is " + got->type +
                                          ", expected " + g.literal.type,
                                      target);
            out.raw_log = log + "FATAL EXCEPTION: main\n" + out.message + "\n";
            return out;
        }
    }

    for (const auto& g : guards) {
        std::string reason;
        switch (g.kind) {
        case GuardCondition::Kind::Extra: {
            const auto* got = find_extra(g.key);
            if (!same_value(g.literal, *got))
                reason = "intent extra \"" + g.key + "\" has a value the activity rejects";
            break;
        }
        case GuardCondition::Kind::Return: {
            const HookSpec* hook = nullptr;
            for (const auto& h : plan.hooks)
                if (h.method == g.method) hook = &h;
            if (!hook || !same_value(g.literal, hook->forced_return))
                reason = "a check in " + to_java_name(target) + " finished the activity";
            break;
        }
        case GuardCondition::Kind::Flag:
            reason = to_java_name(target) + " is disabled (" + g.flag + ")";
            break;
        }
        if (!reason.empty()) {
            out.kind = OutcomeKind::NoTransition;
            out.message = "transition did not occur: " + reason;
            out.raw_log = log + "activity finished before resume\n";
            return out;
        }
    }

    out.kind = OutcomeKind::Success;
    out.observed_activity = target;
    out.message = "resumed " + to_java_name(target);
    out.raw_log = log + "resumed " + to_java_name(target) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// ExternalCommandDevice
// ---------------------------------------------------------------------------

namespace {

std::string shell_quote(std::string_view s) {
    std::string out = "'";
    for (const char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

}  // namespace

ExternalCommandDevice::ExternalCommandDevice(std::string command, std::string package_name,
                                             std::filesystem::path work_dir)
    : command_(std::move(command)), package_name_(std::move(package_name)), work_dir_(std::move(work_dir)) {}

ValidationOutcome ExternalCommandDevice::parse_output(std::string_view output) {
    ValidationOutcome out;
    bool have_outcome = false;
    std::vector<std::string> message;
    for (const auto& line : detail::split_lines(output)) {
        if (line.starts_with("OUTCOME ")) {
            const auto kind = std::string(detail::trim(std::string_view(line).substr(8)));
            if (kind == "Success") out.kind = OutcomeKind::Success;
            else if (kind == "InstrumentationException") out.kind = OutcomeKind::InstrumentationException;
            else if (kind == "AppCrash") out.kind = OutcomeKind::AppCrash;
            else if (kind == "NoTransition") out.kind = OutcomeKind::NoTransition;
            else throw DeviceUnavailable("injector reported unknown outcome `" + kind + "`");
            have_outcome = true;
        } else if (line.starts_with("ACTIVITY ")) {
            out.observed_activity = normalize_class_name(detail::trim(std::string_view(line).substr(9)));
        } else if (line.starts_with("MESSAGE ")) {
            message.push_back(line.substr(8));
        } else {
            out.raw_log += line + "\n";
        }
    }
    if (!have_outcome) throw DeviceUnavailable("injector printed no OUTCOME line");
    out.message = detail::join(message, "\n");
    return out;
}

ValidationOutcome ExternalCommandDevice::validate(const InstrumentationArtifact& artifact, std::string_view target) {
    const auto script = work_dir_ / (simple_class_name(normalize_class_name(target)) + "-iter" +
                                     std::to_string(artifact.iteration) + ".js");
    detail::write_file(script, artifact.script_text);
    const auto cmd = command_ + " " + shell_quote(script.string()) + " " + shell_quote(package_name_) + " " +
                     shell_quote(to_java_name(normalize_class_name(target)));
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) throw DeviceUnavailable("cannot start injector: " + command_);
    std::string output;
    char buf[4096];
    while (const auto n = std::fread(buf, 1, sizeof buf, pipe)) output.append(buf, n);
    const int status = ::pclose(pipe);
    if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0)
        throw DeviceUnavailable("injector exited abnormally: " + command_);
    return parse_output(output);
}

// ---------------------------------------------------------------------------
// Loop
// ---------------------------------------------------------------------------

std::string compose_feedback(const ValidationOutcome& outcome) {
    std::string text = "[" + std::string(to_string(outcome.kind)) + "]\n";
    if (outcome.message.empty() && outcome.kind == OutcomeKind::NoTransition) text += "transition did not occur";
    else text += outcome.message;
    if (outcome.observed_activity) text += "\nforeground activity: " + to_java_name(*outcome.observed_activity);
    return truncate_result(std::move(text), kFeedbackCap);
}

json to_json(const LoopResult& r) {
    json iterations = json::array();
    for (const auto& it : r.iterations)
        iterations.push_back({{"artifact", to_json(it.artifact)}, {"outcome", to_json(it.outcome)}, {"feedback", it.feedback}});
    return {{"target", r.target},
            {"iterations_used", r.iterations_used},
            {"status", std::string(to_string(r.status))},
            {"final", r.final ? to_json(*r.final) : json(nullptr)},
            {"error", r.error},
            {"static_report_partial", r.static_report_partial},
            {"iterations", iterations}};
}

LoopResult validation_loop(const ActivationConditionReport& report, Device& device, ModelClient& client,
                           const EpisodicMemory& episodic, std::string_view target, const LoopOptions& options) {
    if (options.max_iterations < 1 || options.max_iterations > kMaxIterations)
        throw InputError("InvalidArgument", "max_iterations must be between 1 and 5");
    LoopResult result;
    result.target = normalize_class_name(target);
    result.static_report_partial = report.partial;

    std::optional<InstrumentationArtifact> prior;
    std::optional<std::string> feedback;
    for (int i = 1; i <= options.max_iterations; ++i) {
        InstrumentationArtifact artifact;
        try {
            artifact = run_dyn_agent(client, episodic, report, prior, feedback, options.agent);
        } catch (const Error& e) {
            if (e.category() == ErrorCategory::Device) throw;
            result.error = std::string(e.kind()) + ": " + e.what();
            break;
        }
        LoopIteration step{artifact, device.validate(artifact, result.target), {}};
        if (step.outcome.kind == OutcomeKind::Success) {
            result.status = LoopStatus::Reached;
            result.iterations.push_back(std::move(step));
            break;
        }
        step.feedback = compose_feedback(step.outcome);
        feedback = step.feedback;
        prior = artifact;
        result.iterations.push_back(std::move(step));
    }
    result.iterations_used = static_cast<int>(result.iterations.size());
    if (!result.iterations.empty()) result.final = result.iterations.back().outcome;
    return result;
}

// ---------------------------------------------------------------------------
// Explorer
// ---------------------------------------------------------------------------

ExplorationLog simulated_explore(const DeviceScenario& scenario, const ActivityDialogs& dialogs,
                                 const ExploreOptions& options) {
    ExplorationLog log;
    log.source_tool = "simulated";
    if (scenario.mains.empty()) return log;

    // mt19937_64 output is fixed by the standard; the distributions are not,
    // so draws are done by hand.
    std::mt19937_64 rng(options.seed);
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
    auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

    std::map<std::string, std::vector<std::string>> moves;
    for (const auto& [from, to] : scenario.transitions) {
        if (scenario.is_guarded(to)) continue;
        auto& v = moves[from];
        if (std::find(v.begin(), v.end(), to) == v.end()) v.push_back(to);
    }

    auto current = scenario.mains[pick(scenario.mains.size())];
    log.visit(current);
    for (std::size_t step = 0; step < options.budget; ++step) {
        const auto m = moves.find(current);
        const std::size_t n = m == moves.end() ? 0 : m->second.size();
        const auto d = dialogs.find(current);
        const bool has_dialog = d != dialogs.end() && !d->second.empty();
        const auto k = pick(n + 1 + (has_dialog ? 1 : 0));
        if (k < n) {
            current = m->second[k];
        } else if (k == n) {
            current = scenario.mains[pick(scenario.mains.size())];
        } else {
            if (unit() < options.cancel_prob) continue;
            auto it = d->second.begin();
            std::advance(it, pick(d->second.size()));
            current = *it;
        }
        log.visit(current);
    }
    return log;
}

}  // namespace actreach
