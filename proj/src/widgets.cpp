#include "actreach/widgets.hpp"

#include <algorithm>

#include "actreach/smali.hpp"
#include "text_util.hpp"

namespace actreach {

namespace {

std::set<std::string> normalized(const std::vector<std::string>& names) {
    std::set<std::string> out;
    for (const auto& n : names) out.insert(normalize_class_name(n));
    return out;
}

}  // namespace

ActivityDialogs find_dialog_for_target(const std::vector<std::string>& instrumentations, const Ctg& ctg,
                                       const std::vector<std::string>& mains,
                                       const std::vector<std::string>& unreachables,
                                       const std::vector<std::string>& declared) {
    const auto unreachable = normalized(unreachables);
    const auto main_set = normalized(mains);
    std::set<std::string> non_main_reachables;
    for (const auto& a : normalized(declared)) {
        if (!unreachable.count(a) && !main_set.count(a)) non_main_reachables.insert(a);
    }

    ActivityDialogs dialogs;
    auto attach_to_mains = [&](const std::string& target) {
        if (main_set.empty()) throw EmptyMains(target);
        for (const auto& m : main_set) dialogs[m].insert(target);
    };
    for (const auto& raw : instrumentations) {
        const auto target = normalize_class_name(raw);
        if (!unreachable.count(target)) continue;
        const auto sources = ctg.sources(target);
        if (sources.empty()) {
            attach_to_mains(target);
            continue;
        }
        bool found_reachable = false;
        for (const auto& source : sources) {
            if (non_main_reachables.count(source)) {
                dialogs[source].insert(target);
                found_reachable = true;
            }
        }
        if (!found_reachable) attach_to_mains(target);
    }
    return dialogs;
}

std::string export_dialogs(const ActivityDialogs& dialogs) {
    std::string out;
    for (const auto& [source, targets] : dialogs) {
        out += source + "\t" + detail::join(std::vector<std::string>(targets.begin(), targets.end()), ",") + "\n";
    }
    return out;
}

ActivityDialogs import_dialogs(std::string_view text) {
    ActivityDialogs dialogs;
    std::size_t line_no = 0;
    for (const auto& line : detail::split_lines(text)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty() || t.starts_with('#')) continue;
        const auto fields = detail::split(t, '\t');
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
            throw InputError("DialogsFormat", "line " + std::to_string(line_no) + ": expected source<TAB>targets");
        auto& set = dialogs[normalize_class_name(fields[0])];
        for (const auto& target : detail::split(fields[1], ',')) {
            if (detail::trim(target).empty())
                throw InputError("DialogsFormat", "line " + std::to_string(line_no) + ": empty target");
            set.insert(normalize_class_name(detail::trim(target)));
        }
    }
    return dialogs;
}

}  // namespace actreach
