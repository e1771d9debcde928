#include <sstream>

#include "doctest.h"

#include "actreach/app_package.hpp"
#include "actreach/ctg.hpp"
#include "support.hpp"

using namespace actreach;

namespace {

std::set<CtgEdge> expected_edges() {
    std::set<CtgEdge> out;
    std::istringstream in(testsupport::read_text(testsupport::fixtures() / "corpus/expected_edges.tsv"));
    std::string src, ref, tgt;
    while (std::getline(in, src, '\t') && std::getline(in, ref, '\t') && std::getline(in, tgt))
        out.insert({src, *parse_method_ref(ref), tgt});
    return out;
}

std::set<std::string> callers_of(const std::vector<LaunchSite>& sites) {
    std::set<std::string> out;
    for (const auto& s : sites) out.insert(s.caller.str());
    return out;
}

AppPackage small_package(const std::string& body) {
    ManifestInfo m;
    m.package_name = "t.app";
    m.declared_activities = {"Lt/app/A;", "Lt/app/B;"};
    m.main_activities = {"Lt/app/A;"};
    auto a = parse_smali(".class public Lt/app/A;\n.super Landroid/app/Activity;\n\n.method public go()V\n" + body +
                         "    return-void\n.end method\n");
    auto b = parse_smali(".class public Lt/app/B;\n.super Landroid/app/Activity;\n");
    return make_package(m, {a, b});
}

}  // namespace

TEST_CASE("corpus edges are recovered exactly") {
    const auto pkg = ingest_package(testsupport::fixtures() / "corpus");
    const auto want = expected_edges();
    REQUIRE(want.size() == 8);
    CHECK(pkg.ctg.edges == want);

    std::set<std::string> unresolved_want;
    std::istringstream in(testsupport::read_text(testsupport::fixtures() / "corpus/expected_unresolved.txt"));
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) unresolved_want.insert(line);
    CHECK(callers_of(pkg.ctg.unresolved_sites) == unresolved_want);
}

TEST_CASE("launch sites cover both launch APIs") {
    const auto pkg = ingest_package(testsupport::fixtures() / "corpus");
    const auto sites = find_launch_sites(pkg.index);
    std::size_t for_result = 0;
    for (const auto& s : sites) {
        CHECK(s.resolution == Resolution::Unresolved);
        CHECK_FALSE(s.resolved_target);
        if (s.api == LaunchApi::StartActivityForResult) ++for_result;
    }
    CHECK(sites.size() == 9);
    CHECK(for_result == 1);
}

TEST_CASE("resolution records how the target was found") {
    const auto pkg = ingest_package(testsupport::fixtures() / "corpus");
    std::map<std::string, Resolution> by_caller;
    for (const auto& s : pkg.launch_sites) by_caller[s.caller.str() + "@" + s.resolved_target.value_or("-")] = s.resolution;
    CHECK(by_caller.at("Lcom/example/corpus/HomeActivity;->openDetail()V@Lcom/example/corpus/DetailActivity;") ==
          Resolution::ConstClass);
    CHECK(by_caller.at("Lcom/example/corpus/HomeActivity;->openSettings()V@Lcom/example/corpus/SettingsActivity;") ==
          Resolution::SetClassName);
    CHECK(by_caller.at("Lcom/example/corpus/SettingsActivity;->openAbout()V@Lcom/example/corpus/AboutActivity;") ==
          Resolution::ConstClass);
    CHECK(by_caller.at("Lcom/example/corpus/HomeActivity;->launchGiven(Landroid/content/Intent;)V@-") ==
          Resolution::Unresolved);
}

TEST_CASE("a fragment's launch resolves but has no activity to attribute") {
    const auto pkg = ingest_package(testsupport::fixtures() / "corpus");
    bool found = false;
    for (const auto& s : pkg.ctg.unresolved_sites) {
        if (s.caller.owner != "Lcom/example/corpus/ShareFragment;") continue;
        found = true;
        CHECK(s.resolution == Resolution::ConstClass);
        CHECK(s.resolved_target == "Lcom/example/corpus/DetailActivity;");
    }
    CHECK(found);
}

TEST_CASE("intent register reassigned before launch stays unresolved") {
    const auto pkg = small_package(
        "    new-instance v0, Landroid/content/Intent;\n"
        "    const-class v1, Lt/app/B;\n"
        "    invoke-direct {v0, p0, v1}, Landroid/content/Intent;-><init>(Landroid/content/Context;Ljava/lang/Class;)V\n"
        "    invoke-virtual {p0}, Lt/app/A;->makeIntent()Landroid/content/Intent;\n"
        "    move-result-object v0\n"
        "    invoke-virtual {p0, v0}, Lt/app/A;->startActivity(Landroid/content/Intent;)V\n");
    CHECK(pkg.ctg.edges.empty());
    REQUIRE(pkg.ctg.unresolved_sites.size() == 1);
    CHECK(pkg.ctg.unresolved_sites[0].resolution == Resolution::Unresolved);
}

TEST_CASE("setClassName with a non-constant name is unresolved") {
    const auto pkg = small_package(
        "    new-instance v0, Landroid/content/Intent;\n"
        "    invoke-direct {v0}, Landroid/content/Intent;-><init>()V\n"
        "    invoke-virtual {p0}, Lt/app/A;->pickName()Ljava/lang/String;\n"
        "    move-result-object v1\n"
        "    invoke-virtual {v0, p0, v1}, Landroid/content/Intent;->setClassName(Landroid/content/Context;Ljava/lang/String;)Landroid/content/Intent;\n"
        "    invoke-virtual {p0, v0}, Lt/app/A;->startActivity(Landroid/content/Intent;)V\n");
    CHECK(pkg.ctg.edges.empty());
    CHECK(pkg.ctg.unresolved_sites.size() == 1);
}

TEST_CASE("a target outside the manifest is kept as unresolved with its name") {
    const auto pkg = small_package(
        "    new-instance v0, Landroid/content/Intent;\n"
        "    const-class v1, Lt/app/Hidden;\n"
        "    invoke-direct {v0, p0, v1}, Landroid/content/Intent;-><init>(Landroid/content/Context;Ljava/lang/Class;)V\n"
        "    invoke-virtual {p0, v0}, Lt/app/A;->startActivity(Landroid/content/Intent;)V\n");
    CHECK(pkg.ctg.edges.empty());
    REQUIRE(pkg.ctg.unresolved_sites.size() == 1);
    CHECK(pkg.ctg.unresolved_sites[0].resolved_target == "Lt/app/Hidden;");
}

TEST_CASE("k9 launch from Accounts") {
    const auto pkg = ingest_package(testsupport::fixtures() / "k9");
    REQUIRE(pkg.ctg.edges.size() == 1);
    const auto& e = *pkg.ctg.edges.begin();
    CHECK(e.source_activity == "Lcom/fsck/k9/activity/Accounts;");
    CHECK(e.target_activity == "Lcom/fsck/k9/activity/MessageList;");
    CHECK(pkg.ctg.sources("Lcom/fsck/k9/activity/MessageList;") ==
          std::vector<std::string>{"Lcom/fsck/k9/activity/Accounts;"});
    CHECK(pkg.ctg.sources("Lcom/fsck/k9/activity/ChooseAccount;").empty());
}

TEST_CASE("edge sources are owners or declared ancestors") {
    const auto pkg = ingest_package(testsupport::fixtures() / "corpus");
    for (const auto& e : pkg.ctg.edges) {
        const auto chain = pkg.index.superclass_chain(e.source_activity);
        CHECK(std::find(chain.begin(), chain.end(), e.source_method.owner) != chain.end());
        CHECK(pkg.is_declared(e.source_activity));
    }
}

TEST_CASE("launching activities and methods by target") {
    const auto pkg = ingest_package(testsupport::fixtures() / "corpus");
    const auto about = get_launching_activities_and_methods(pkg.ctg, "com.example.corpus.AboutActivity");
    REQUIRE(about.size() == 4);
    CHECK(std::is_sorted(about.begin(), about.end()));
    CHECK(about[0].first == "Lcom/example/corpus/HomeActivity;");
    CHECK(get_launching_activities_and_methods(pkg.ctg, "com.example.corpus.HomeActivity").empty());
}

TEST_CASE("export and import are inverse") {
    const auto pkg = ingest_package(testsupport::fixtures() / "corpus");
    const auto text = export_ctg(pkg.ctg);
    const auto back = import_ctg(text);
    CHECK(back.edges == pkg.ctg.edges);
    CHECK(back.unresolved_sites == pkg.ctg.unresolved_sites);
    CHECK(export_ctg(back) == text);
    CHECK_THROWS_AS(import_ctg("only\ttwo\n"), InputError);
    CHECK_THROWS_AS(import_ctg("a\tnot-a-ref\tb\n"), InputError);
}

TEST_CASE("build_ctg is pure over its inputs") {
    const auto pkg = ingest_package(testsupport::fixtures() / "corpus");
    CHECK(build_ctg(pkg).edges == build_ctg(pkg).edges);
}
