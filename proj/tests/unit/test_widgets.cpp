#include <algorithm>
#include <random>

#include "doctest.h"

#include "actreach/widgets.hpp"
#include "support.hpp"

using namespace actreach;

namespace {

Ctg ctg_of(std::initializer_list<std::pair<const char*, const char*>> edges) {
    Ctg c;
    for (const auto& [from, to] : edges) {
        const auto s = normalize_class_name(from);
        c.edges.insert({s, MethodRef{s, "go()V"}, normalize_class_name(to)});
    }
    return c;
}

ActivityDialogs place(const testsupport::DialogInstance& i) {
    return find_dialog_for_target(i.instrumentations, i.ctg, i.mains, i.unreachables, i.declared);
}

bool contains(const std::vector<std::string>& v, const std::string& x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

TEST_CASE("dialogs go on reachable launchers, else on the mains") {
    const std::vector<std::string> declared{"a.M1", "a.M2", "a.R", "a.U1", "a.U2", "a.U3", "a.U4"};
    const std::vector<std::string> mains{"a.M1", "a.M2"};
    const std::vector<std::string> unreachables{"a.U1", "a.U2", "a.U3", "a.U4"};
    const auto ctg = ctg_of({{"a.R", "a.U1"}, {"a.U2", "a.U3"}, {"a.M1", "a.U4"}, {"a.R", "a.R"}});
    const auto d = find_dialog_for_target({"a.U1", "a.U2", "a.U3", "a.U4", "a.R"}, ctg, mains, unreachables, declared);

    const ActivityDialogs want{{"La/R;", {"La/U1;"}},
                               {"La/M1;", {"La/U2;", "La/U3;", "La/U4;"}},
                               {"La/M2;", {"La/U2;", "La/U3;", "La/U4;"}}};
    CHECK(d == want);
}

TEST_CASE("a main fallback with no mains raises") {
    const auto ctg = ctg_of({});
    CHECK_THROWS_AS(find_dialog_for_target({"a.U"}, ctg, {}, {"a.U"}, {"a.U", "a.R"}), EmptyMains);
    CHECK_THROWS_AS(find_dialog_for_target({"a.U"}, ctg, {}, {"a.U"}, {"a.U", "a.R"}), Error);
    CHECK(find_dialog_for_target({"a.U"}, ctg_of({{"a.R", "a.U"}}), {}, {"a.U"}, {"a.U", "a.R"}) ==
          ActivityDialogs{{"La/R;", {"La/U;"}}});
    CHECK(find_dialog_for_target({"a.R"}, ctg, {}, {"a.U"}, {"a.U", "a.R"}).empty());
}

TEST_CASE("placement matches the oracle on random instances") {
    std::mt19937_64 rng(2024);
    int raised = 0;
    for (int round = 0; round < 200; ++round) {
        const auto inst = testsupport::random_dialog_instance(rng, true);
        std::map<std::string, std::vector<std::string>> want;
        const bool ok = testsupport::oracle_dialogs(inst, want);
        CAPTURE(round);
        if (!ok) {
            CHECK_THROWS_AS(place(inst), EmptyMains);
            ++raised;
            continue;
        }
        const auto got = place(inst);
        std::map<std::string, std::vector<std::string>> flat;
        for (const auto& [s, t] : got) flat[s] = {t.begin(), t.end()};
        CHECK(flat == want);
    }
    CHECK(raised > 0);
}

TEST_CASE("placement invariants") {
    std::mt19937_64 rng(77);
    for (int round = 0; round < 200; ++round) {
        auto inst = testsupport::random_dialog_instance(rng, false);
        const auto d = place(inst);
        CAPTURE(round);

        // Every instrumented, unreachable target gets a host.
        for (const auto& t : inst.instrumentations) {
            if (!contains(inst.unreachables, t)) continue;
            bool hosted = false;
            for (const auto& [s, ts] : d) hosted = hosted || ts.count(t);
            CHECK(hosted);
        }
        // No host is itself unreachable.
        for (const auto& [s, ts] : d) CHECK_FALSE(contains(inst.unreachables, s));

        // A target with a reachable non-main launcher stays off the mains.
        for (const auto& [s, ts] : d) {
            for (const auto& t : ts) {
                bool realistic = false;
                for (const auto& src : inst.ctg.sources(t))
                    realistic = realistic || (!contains(inst.unreachables, src) && !contains(inst.mains, src));
                if (realistic) {
                    CHECK_FALSE(contains(inst.mains, s));
                }
            }
        }

        CHECK(place(inst) == d);
        std::reverse(inst.instrumentations.begin(), inst.instrumentations.end());
        std::reverse(inst.declared.begin(), inst.declared.end());
        CHECK(place(inst) == d);
    }
}

TEST_CASE("dialogs export and import") {
    const ActivityDialogs d{{"La/M;", {"La/X;", "La/Y;"}}, {"La/R;", {"La/Z;"}}};
    const auto text = export_dialogs(d);
    CHECK(text == "La/M;\tLa/X;,La/Y;\nLa/R;\tLa/Z;\n");
    CHECK(import_dialogs(text) == d);
    CHECK(import_dialogs("# c\na.M\ta.X, a.Y\n\na.R\ta.Z\n") == d);
    CHECK_THROWS_AS(import_dialogs("a.M\n"), InputError);
    CHECK_THROWS_AS(import_dialogs("a.M\ta.X,,a.Y\n"), InputError);
    CHECK(import_dialogs("").empty());
}
