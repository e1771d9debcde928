#include <atomic>
#include <cstdlib>
#include <filesystem>

#include "doctest.h"

#include "actreach/error.hpp"
#include "actreach/pipeline.hpp"
#include "support.hpp"

using namespace actreach;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

PipelineConfig demo_config(const std::string& out_name) {
    auto c = load_config(testsupport::demo_dir() / "config.json");
    c.output_dir = testsupport::scratch_dir(out_name);
    return c;
}

std::string config_error(const PipelineConfig& c) {
    try {
        check_config(c);
    } catch (const InputError& e) {
        return e.kind();
    }
    return "";
}

// Every regular file below `root`, keyed by relative path.
std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = testsupport::read_text(e.path());
    return out;
}

}  // namespace

TEST_CASE("config paths resolve against the config directory") {
    const auto c = config_from_json(json::parse(R"({"package_root": "app", "scenario": "/abs/s.tsv",
        "model": {"endpoint": "http://x/v1/chat/completions", "model": "m", "api_key_env": "K"},
        "max_iterations": 3, "jobs": 4, "cancel_prob": 0.5, "rng_seed": 9})"),
                                    "/base");
    CHECK(c.package_root == fs::path("/base/app"));
    CHECK(c.scenario == fs::path("/abs/s.tsv"));
    REQUIRE(c.model);
    CHECK(c.model->api_key_env == "K");
    CHECK(c.model->timeout_seconds == 120);
    CHECK(c.max_iterations == 3);
    CHECK(c.jobs == 4);
    CHECK(c.rng_seed == 9);
    CHECK(c.output_dir == fs::path("out"));
    CHECK(c.replay_script.empty());

    CHECK_THROWS_AS(config_from_json(json::array(), "/"), InputError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"max_iterations": "five"})"), "/"), InputError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"model": {}})"), "/"), InputError);
    const auto dir = testsupport::scratch_dir("config");
    testsupport::write_text(dir / "c.json", "{");
    CHECK_THROWS_AS(load_config(dir / "c.json"), InputError);
}

TEST_CASE("config invariants") {
    const auto good = demo_config("check");
    CHECK(config_error(good).empty());
    auto c = good;
    c.package_root.clear();
    CHECK(config_error(c) == "ConfigError");
    c = good;
    c.max_iterations = 6;
    CHECK(config_error(c) == "ConfigError");
    c = good;
    c.model = ModelEndpointConfig{"http://x", "m", "", 5};
    CHECK(config_error(c) == "ConfigError");
    c = good;
    c.device_command = "inject";
    CHECK(config_error(c) == "ConfigError");
    c = good;
    c.cancel_prob = 1.5;
    CHECK(config_error(c) == "ConfigError");
    c = good;
    c.jobs = 0;
    CHECK(config_error(c) == "ConfigError");
    c = good;
    c.result_size_cap = 10;
    CHECK(config_error(c) == "ConfigError");
}

TEST_CASE("client selection") {
    auto c = demo_config("client");
    CHECK(dynamic_cast<ScriptedClient*>(make_client(c).get()));
    c.replay_script.clear();
    CHECK_THROWS_AS(make_client(c), InputError);
    c.model = ModelEndpointConfig{"http://127.0.0.1:1/v1/chat/completions", "m", "ACTREACH_TEST_UNSET_KEY", 5};
    ::unsetenv("ACTREACH_TEST_UNSET_KEY");
    CHECK_THROWS_AS(make_client(c), InputError);
    ::setenv("ACTREACH_TEST_UNSET_KEY", "k", 1);
    CHECK(dynamic_cast<HttpChatClient*>(make_client(c).get()));
}

TEST_CASE("activity lists and parallel_for") {
    const std::vector<std::string> acts{"La/B;", "La/C;"};
    const auto dir = testsupport::scratch_dir("lists");
    testsupport::write_text(dir / "l.txt", "# x\n" + format_activity_list(acts) + "\n");
    CHECK(read_activity_list(dir / "l.txt") == acts);

    std::atomic<int> sum = 0;
    parallel_for(100, 4, [&](std::size_t i) { sum += static_cast<int>(i); });
    CHECK(sum == 4950);
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                        if (i == 7) throw InputError("X", "boom");
                    }),
                    InputError);
}

TEST_CASE("demo pipeline lifts coverage to every declared activity") {
    const auto c = demo_config("pipeline");
    const auto s = run_pipeline(c);
    CHECK(s.report.package_name == "com.acme.notes");
    CHECK(s.report.before.declared_count == 6);
    CHECK(s.report.before.visited_count == 3);
    CHECK(s.report.before.activity_coverage == doctest::Approx(0.5));
    CHECK(s.report.after.visited_count == 6);
    CHECK(s.report.after.activity_coverage == doctest::Approx(1.0));
    CHECK(s.report.validated.size() == 3);
    REQUIRE(s.loops.size() == 3);
    for (const auto& l : s.loops) CHECK(l.status == LoopStatus::Reached);

    const auto text = testsupport::read_text(c.output_dir / "report.txt");
    CHECK(text.find("before_coverage\t50%") != std::string::npos);
    CHECK(text.find("after_coverage\t100%") != std::string::npos);
    CHECK(import_dialogs(testsupport::read_text(c.output_dir / "dialogs.tsv")) == s.dialogs);
    CHECK(s.dialogs.at("Lcom/acme/notes/SettingsActivity;") ==
          std::set<std::string>{"Lcom/acme/notes/SdCardExportActivity;"});
}

TEST_CASE("always dismissing the dialog leaves coverage at the baseline") {
    auto c = demo_config("cancel");
    c.cancel_prob = 1.0;
    const auto s = run_pipeline(c);
    CHECK(s.report.after.visited_count == s.report.before.visited_count);
    CHECK(s.report.after.unreachable == s.report.before.unreachable);
}

TEST_CASE("same config and seed give identical outputs") {
    auto a = demo_config("det-a");
    auto b = demo_config("det-b");
    run_pipeline(a);
    run_pipeline(b);
    const auto ta = tree(a.output_dir);
    const auto tb = tree(b.output_dir);
    CHECK(ta == tb);
    CHECK(ta.count("report.txt"));
    CHECK(ta.count("dialogs.tsv"));
    CHECK(ta.count("episodic/com.acme.notes.NoteDetailActivity.jsonl"));
}
