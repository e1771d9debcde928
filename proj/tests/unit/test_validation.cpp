#include <filesystem>

#include "doctest.h"

#include "actreach/app_package.hpp"
#include "actreach/error.hpp"
#include "actreach/validation.hpp"
#include "support.hpp"

using namespace actreach;
using nlohmann::json;

namespace {

const char* kScenario = R"(# small model
ACTIVITIES
a.Main
a.Mid
a.T
a.Locked
a.Flagged

MAINS
a.Main

TRANSITIONS
a.Main	a.Mid
a.Mid	a.T
a.Main	a.Locked
a.Main	a.Flagged

GUARDS
a.Locked	return	a.Base	check()Z	false
a.Locked	extra	id	int	3
a.Flagged	flag	feature_off
)";

OutcomeKind kind_of(const SimulatedDevice& d, const std::string& plan, const std::string& target) {
    return d.evaluate(parse_plan(plan), target).kind;
}

std::string dyn_text(const std::string& plan) {
    return "### PSEUDOCODE\n```\nsteps\n```\n### PLAN\n```\n" + plan + "\n```\n### SCRIPT\n```js\nJava.perform(function () {});\n```\n";
}

// Dyn session that fails `fails` times before a working plan.
json planted_session(int fails, bool ever_succeeds) {
    json turns = json::array();
    for (int i = 0; i < fails; ++i) turns.push_back({{"text", dyn_text("intent a.T\nlaunch false")}});
    if (ever_succeeds) turns.push_back({{"text", dyn_text("intent a.T\nlaunch true")}});
    return {{"sessions", {{"dyn:a.T", turns}}}};
}

const ActivationConditionReport kReport{"La/T;", "F", "B", "G", "FINAL", "", 0, false};

class ThrowingDevice : public Device {
public:
    ValidationOutcome validate(const InstrumentationArtifact&, std::string_view) override {
        throw DeviceUnavailable("unplugged");
    }
};

}  // namespace

TEST_CASE("scenario file parses into sections") {
    const auto s = parse_scenario(kScenario);
    CHECK(s.activities.size() == 5);
    CHECK(s.mains == std::vector<std::string>{"La/Main;"});
    CHECK(s.transitions.size() == 4);
    CHECK(s.is_guarded("a.Locked"));
    CHECK_FALSE(s.is_guarded("La/T;"));
    REQUIRE(s.guards.at("La/Locked;").size() == 2);
    CHECK(s.guards.at("La/Locked;")[0].method == MethodRef{"La/Base;", "check()Z"});
    CHECK(s.guards.at("La/Locked;")[1].literal == int_literal(3));
    CHECK(s.guards.at("La/Flagged;")[0].flag == "feature_off");

    const auto demo = load_scenario(testsupport::demo_dir() / "scenario.tsv");
    CHECK(demo.activities.size() == 6);
    CHECK(demo.mains.size() == 2);
}

TEST_CASE("scenario format errors") {
    auto kind = [](const std::string& text) -> std::string {
        try {
            parse_scenario(text);
        } catch (const InputError& e) {
            return e.kind();
        }
        return "";
    };
    CHECK(kind("a.B\n") == "ScenarioFormat");
    CHECK(kind("ACTIVITIES\na.B\tx\n") == "ScenarioFormat");
    CHECK(kind("ACTIVITIES\na.B\nMAINS\na.C\n") == "ScenarioFormat");
    CHECK(kind("ACTIVITIES\na.B\nTRANSITIONS\na.B\ta.Z\n") == "ScenarioFormat");
    CHECK(kind("ACTIVITIES\na.B\nGUARDS\na.B\tweird\tx\n") == "ScenarioFormat");
    CHECK(kind("ACTIVITIES\na.B\nGUARDS\na.B\textra\tk\tint\tabc\n") == "ScenarioFormat");
    CHECK(kind("ACTIVITIES\na.B\nGUARDS\na.Z\tflag\tf\n") == "ScenarioFormat");
    CHECK(kind("ACTIVITIES\na.B\nGUARDS\na.B\treturn\ta.C\n") == "ScenarioFormat");
    CHECK(kind("ACTIVITIES\na.B\n").empty());
}

TEST_CASE("simulated device outcomes") {
    const SimulatedDevice d(parse_scenario(kScenario));
    CHECK(kind_of(d, "intent a.T\nlaunch true", "a.T") == OutcomeKind::Success);
    CHECK(kind_of(d, "launch true", "a.T") == OutcomeKind::Success);
    CHECK(kind_of(d, "intent a.T\nlaunch false", "a.T") == OutcomeKind::NoTransition);
    CHECK(kind_of(d, "intent a.Nope\nlaunch true", "a.T") == OutcomeKind::AppCrash);

    const auto other = d.evaluate(parse_plan("intent a.Mid\nlaunch true"), "a.T");
    CHECK(other.kind == OutcomeKind::NoTransition);
    CHECK(other.observed_activity == "La/Mid;");

    const std::string hook = "hook a.Base check()Z false\n";
    CHECK(kind_of(d, hook + "intent a.Locked\nextra id int 3\nlaunch true", "a.Locked") == OutcomeKind::Success);
    CHECK(kind_of(d, hook + "intent a.Locked\nextra id long 3\nlaunch true", "a.Locked") == OutcomeKind::AppCrash);
    CHECK(kind_of(d, hook + "intent a.Locked\nlaunch true", "a.Locked") == OutcomeKind::AppCrash);
    CHECK(kind_of(d, hook + "intent a.Locked\nextra id int 4\nlaunch true", "a.Locked") == OutcomeKind::NoTransition);
    CHECK(kind_of(d, "intent a.Locked\nextra id int 3\nlaunch true", "a.Locked") == OutcomeKind::NoTransition);
    CHECK(kind_of(d, "hook a.Base check()Z true\nintent a.Locked\nextra id int 3\nlaunch true", "a.Locked") ==
          OutcomeKind::NoTransition);
    CHECK(kind_of(d, "hook a.Base check()Z 1\nintent a.Locked\nlaunch true", "a.Locked") ==
          OutcomeKind::InstrumentationException);
    CHECK(kind_of(d, "hook a.Base log()V skip-body\nintent a.T\nlaunch true", "a.T") == OutcomeKind::Success);
    CHECK(kind_of(d, "intent a.Flagged\nlaunch true", "a.Flagged") == OutcomeKind::NoTransition);

    const auto crash = d.evaluate(parse_plan(hook + "intent a.Locked\nlaunch true"), "a.Locked");
    CHECK(crash.message.find("\"id\"") != std::string::npos);
    CHECK(crash.message.find("at a.Locked.onCreate") != std::string::npos);
}

TEST_CASE("simulated device checks hooks against the code index") {
    const auto pkg = ingest_package(testsupport::demo_dir() / "app");
    const SimulatedDevice d(load_scenario(testsupport::demo_dir() / "scenario.tsv"), &pkg.index);
    const std::string target = "com.acme.notes.SdCardExportActivity";
    CHECK(kind_of(d, "hook com.acme.notes.ExportBaseActivity checkSdCardMissing()Z false\nintent " + target +
                         "\nlaunch true",
                  target) == OutcomeKind::Success);
    CHECK(kind_of(d, "hook com.acme.notes.Ghost checkSdCardMissing()Z false\nlaunch true", target) ==
          OutcomeKind::InstrumentationException);
    const auto missing = d.evaluate(parse_plan("hook com.acme.notes.ExportBaseActivity isMissing()Z false\nlaunch true"), target);
    CHECK(missing.kind == OutcomeKind::InstrumentationException);
    CHECK(missing.message.find("overload not found") != std::string::npos);
    CHECK(kind_of(d, "hook android.os.Environment getExternalStorageState()Ljava/lang/String; \"mounted\" external\n"
                     "hook com.acme.notes.ExportBaseActivity checkSdCardMissing()Z false\nlaunch true",
                  target) == OutcomeKind::Success);
}

TEST_CASE("external injector output") {
    const auto o = ExternalCommandDevice::parse_output(
        "frida attached\nOUTCOME AppCrash\nACTIVITY com.a.B\nMESSAGE java.lang.NullPointerException\nMESSAGE \tat x\n");
    CHECK(o.kind == OutcomeKind::AppCrash);
    CHECK(o.observed_activity == "Lcom/a/B;");
    CHECK(o.message == "java.lang.NullPointerException\n\tat x");
    CHECK(o.raw_log == "frida attached\n");
    CHECK_THROWS_AS(ExternalCommandDevice::parse_output("hello\n"), DeviceUnavailable);
    CHECK_THROWS_AS(ExternalCommandDevice::parse_output("OUTCOME Maybe\n"), DeviceUnavailable);

    const auto dir = testsupport::scratch_dir("injector");
    testsupport::write_text(dir / "ok.sh", "#!/bin/sh\ntest -f \"$1\" || exit 9\necho \"OUTCOME Success\"\necho \"ACTIVITY $3\"\necho \"pkg $2\"\n");
    testsupport::write_text(dir / "fail.sh", "#!/bin/sh\nexit 3\n");
    InstrumentationArtifact art;
    art.iteration = 2;
    art.script_text = "Java.perform(function () {});\n";
    ExternalCommandDevice ok("sh " + (dir / "ok.sh").string(), "com.a", dir);
    const auto r = ok.validate(art, "com.a.It's");
    CHECK(r.kind == OutcomeKind::Success);
    CHECK(r.observed_activity == "Lcom/a/It's;");
    CHECK(r.raw_log == "pkg com.a\n");
    CHECK(std::filesystem::exists(dir / "It's-iter2.js"));
    ExternalCommandDevice bad("sh " + (dir / "fail.sh").string(), "com.a", dir);
    CHECK_THROWS_AS(bad.validate(art, "com.a.B"), DeviceUnavailable);
}

TEST_CASE("feedback text") {
    ValidationOutcome o;
    o.kind = OutcomeKind::NoTransition;
    CHECK(compose_feedback(o) == "[NoTransition]\ntransition did not occur");
    o.observed_activity = "La/Mid;";
    CHECK(compose_feedback(o).ends_with("foreground activity: a.Mid"));
    o.kind = OutcomeKind::AppCrash;
    o.message = std::string(20000, 'x');
    const auto long_text = compose_feedback(o);
    CHECK(long_text.starts_with("[AppCrash]\nxxx"));
    CHECK(long_text.find("[truncated") != std::string::npos);
    CHECK(long_text.size() < kFeedbackCap + 100);
}

TEST_CASE("loop stops at the first success") {
    for (const int k : {1, 2, 3, 4, 5}) {
        CAPTURE(k);
        SimulatedDevice device(parse_scenario(kScenario));
        ScriptedClient client(planted_session(k - 1, true));
        const auto r = validation_loop(kReport, device, client, EpisodicMemory{"La/T;", {}}, "a.T");
        CHECK(r.iterations_used == k);
        CHECK(r.status == LoopStatus::Reached);
        REQUIRE(r.final);
        CHECK(r.final->kind == OutcomeKind::Success);
        CHECK(r.iterations.back().feedback.empty());
        for (int i = 0; i + 1 < k; ++i) CHECK(r.iterations[i].feedback.starts_with("[NoTransition]"));
        if (k > 1) CHECK(r.iterations[1].artifact.phase == DynPhase::Refine);
        CHECK(client.remaining("dyn:a.T") == 0);
    }
}

TEST_CASE("loop gives up after the cap") {
    SimulatedDevice device(parse_scenario(kScenario));
    ScriptedClient client(planted_session(8, false));
    const auto r = validation_loop(kReport, device, client, EpisodicMemory{"La/T;", {}}, "a.T");
    CHECK(r.iterations_used == 5);
    CHECK(r.status == LoopStatus::UnreachableByTool);
    CHECK(r.error.empty());
    CHECK(client.remaining("dyn:a.T") == 3);
    CHECK(to_json(r)["iterations"].size() == 5);

    ScriptedClient short_client(planted_session(8, false));
    LoopOptions two;
    two.max_iterations = 2;
    CHECK(validation_loop(kReport, device, short_client, EpisodicMemory{"La/T;", {}}, "a.T", two).iterations_used == 2);

    for (const int bad : {0, 6}) {
        LoopOptions o;
        o.max_iterations = bad;
        CHECK_THROWS_AS(validation_loop(kReport, device, short_client, EpisodicMemory{"La/T;", {}}, "a.T", o), InputError);
    }
}

TEST_CASE("agent errors end the loop, device errors propagate") {
    SimulatedDevice device(parse_scenario(kScenario));
    ScriptedClient erroring(
        json{{"sessions", {{"dyn:a.T", {{{"text", dyn_text("launch false")}}, {{"error", "quota"}}}}}}});
    const auto r = validation_loop(kReport, device, erroring, EpisodicMemory{"La/T;", {}}, "a.T");
    CHECK(r.iterations_used == 1);
    CHECK(r.status == LoopStatus::UnreachableByTool);
    CHECK(r.error.find("quota") != std::string::npos);

    ThrowingDevice unplugged;
    ScriptedClient client(planted_session(0, true));
    CHECK_THROWS_AS(validation_loop(kReport, unplugged, client, EpisodicMemory{"La/T;", {}}, "a.T"), DeviceUnavailable);
}

TEST_CASE("explorer is seeded and respects guards and dialogs") {
    const auto s = parse_scenario(kScenario);
    const ActivityDialogs dialogs{{"La/Main;", {"La/Locked;"}}};
    const auto a = simulated_explore(s, dialogs, {500, 0.0, 11});
    const auto b = simulated_explore(s, dialogs, {500, 0.0, 11});
    CHECK(a.visited == b.visited);
    CHECK(a.visited.front() == "La/Main;");

    const auto open = std::set<std::string>(a.visited.begin(), a.visited.end());
    CHECK(open == testsupport::bfs_reachable(s, dialogs, true));
    const auto shut = simulated_explore(s, dialogs, {500, 1.0, 11});
    CHECK(std::set<std::string>(shut.visited.begin(), shut.visited.end()) == testsupport::bfs_reachable(s, dialogs, false));
    CHECK_FALSE(shut.contains("a.Flagged"));

    DeviceScenario no_mains = s;
    no_mains.mains.clear();
    CHECK(simulated_explore(no_mains, dialogs, {}).visited.empty());
}
