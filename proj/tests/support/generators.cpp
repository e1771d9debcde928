#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "support.hpp"

namespace testsupport {

using actreach::MethodRef;

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("actreach-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

CommandResult run_command(const std::string& command) {
    CommandResult r;
    FILE* pipe = popen((command + " 2>&1").c_str(), "r");
    if (!pipe) {
        r.status = -1;
        return r;
    }
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::vector<std::filesystem::path> smali_files(const std::filesystem::path& root) {
    std::vector<std::filesystem::path> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root))
        if (e.is_regular_file() && e.path().extension() == ".smali") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::pair<std::size_t, std::string>> planted_kinds(const std::string& text) {
    std::vector<std::pair<std::size_t, std::string>> out;
    std::istringstream in(text);
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        const auto at = line.rfind("# @");
        if (at == std::string::npos) continue;
        auto kind = line.substr(at + 3);
        while (!kind.empty() && (kind.back() == ' ' || kind.back() == '\r')) kind.pop_back();
        out.emplace_back(n, kind);
    }
    return out;
}

namespace {

std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

const std::array<const char*, 5> kSignatures = {"()V", "(I)V", "(Ljava/lang/String;)Z", "(IJ)I",
                                                "(Landroid/content/Intent;)Ljava/lang/String;"};

const std::array<MethodRef, 3> kFramework = {
    MethodRef{"Landroid/util/Log;", "d(Ljava/lang/String;Ljava/lang/String;)I"},
    MethodRef{"Ljava/lang/Object;", "<init>()V"},
    MethodRef{"Landroid/app/Activity;", "finish()V"},
};

}  // namespace

GeneratedPackage random_package(std::mt19937_64& rng, std::size_t max_classes) {
    GeneratedPackage out;
    const std::size_t n_classes = 1 + pick(rng, max_classes);
    const std::string pkg = "Lgen/p" + std::to_string(rng() % 100000) + "/";

    std::vector<std::string> names;
    std::vector<std::vector<std::string>> sigs(n_classes);
    std::vector<MethodRef> all;
    for (std::size_t c = 0; c < n_classes; ++c) {
        names.push_back(pkg + "C" + std::to_string(c) + (pick(rng, 5) == 0 ? "$Inner" : "") + ";");
        const std::size_t n_methods = 1 + pick(rng, 5);
        for (std::size_t m = 0; m < n_methods; ++m) {
            sigs[c].push_back("m" + std::to_string(m) + kSignatures[pick(rng, kSignatures.size())]);
            all.push_back({names[c], sigs[c].back()});
        }
    }

    for (std::size_t c = 0; c < n_classes; ++c) {
        std::ostringstream s;
        s << ".class public " << names[c] << "\n";
        s << ".super " << (c > 0 && pick(rng, 3) == 0 ? names[pick(rng, c)] : std::string("Ljava/lang/Object;"))
          << "\n";
        s << ".source \"C" << c << ".java\"\n\n";
        if (pick(rng, 2)) s << ".field private count:I\n\n";
        for (const auto& sig : sigs[c]) {
            const MethodRef self{names[c], sig};
            auto& planted = out.planted_calls[self];
            s << ".method public " << sig << "\n";
            s << "    .locals 3\n\n";
            const std::size_t n_ins = pick(rng, 12);
            for (std::size_t i = 0; i < n_ins; ++i) {
                switch (pick(rng, 7)) {
                case 0:
                case 1: {
                    const auto& t = all[pick(rng, all.size())];
                    s << "    invoke-virtual {p0, v0}, " << t.str() << "\n";
                    planted.push_back(t);
                    break;
                }
                case 2: {
                    const auto& t = all[pick(rng, all.size())];
                    s << "    invoke-static/range {v0 .. v2}, " << t.str() << "\n";
                    planted.push_back(t);
                    break;
                }
                case 3: {
                    const auto& t = kFramework[pick(rng, kFramework.size())];
                    s << "    invoke-direct {p0}, " << t.str() << "\n";
                    planted.push_back(t);
                    break;
                }
                case 4: {
                    // In-index class, method that does not exist.
                    const MethodRef ghost{names[pick(rng, n_classes)], "ghost()V"};
                    s << "    invoke-super {p0}, " << ghost.str() << "\n";
                    planted.push_back(ghost);
                    break;
                }
                case 5:
                    s << "    const-string v1, \"call " << all[pick(rng, all.size())].str() << ", # not code\"\n";
                    break;
                default:
                    s << "    :lbl_" << i << "\n    if-eqz v0, :lbl_" << i << "\n";
                    break;
                }
                if (pick(rng, 3) == 0) s << "    move-result v0\n";
                s << "\n";
            }
            s << "    return-void\n.end method\n\n";
        }
        out.files.push_back(s.str());
    }
    return out;
}

DialogInstance random_dialog_instance(std::mt19937_64& rng, bool allow_empty_mains) {
    DialogInstance inst;
    const std::size_t n = 2 + pick(rng, 14);
    for (std::size_t i = 0; i < n; ++i) inst.declared.push_back("Lapp/A" + std::to_string(i) + ";");

    for (const auto& a : inst.declared) {
        if (pick(rng, 4) == 0) inst.mains.push_back(a);
    }
    if (inst.mains.empty() && !(allow_empty_mains && pick(rng, 10) == 0))
        inst.mains.push_back(inst.declared[pick(rng, n)]);

    for (const auto& a : inst.declared) {
        const bool is_main = std::find(inst.mains.begin(), inst.mains.end(), a) != inst.mains.end();
        if (!is_main && pick(rng, 2) == 0) inst.unreachables.push_back(a);
    }
    // Instrumented targets: mostly unreachable ones, some already reachable.
    for (const auto& a : inst.declared) {
        if (pick(rng, 3) != 0) inst.instrumentations.push_back(a);
    }
    std::shuffle(inst.instrumentations.begin(), inst.instrumentations.end(), rng);

    const std::size_t n_edges = pick(rng, 3 * n);
    for (std::size_t e = 0; e < n_edges; ++e) {
        const auto& src = inst.declared[pick(rng, n)];
        const auto& tgt = inst.declared[pick(rng, n)];
        inst.ctg.edges.insert({src, MethodRef{src, "go" + std::to_string(pick(rng, 3)) + "()V"}, tgt});
    }
    return inst;
}

}  // namespace testsupport
