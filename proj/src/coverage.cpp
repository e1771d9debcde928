#include "actreach/coverage.hpp"

#include <algorithm>
#include <cmath>

#include "actreach/error.hpp"
#include "actreach/smali.hpp"
#include "text_util.hpp"

namespace actreach {

void ExplorationLog::visit(std::string_view activity) {
    auto n = normalize_class_name(activity);
    if (!contains(n)) visited.push_back(std::move(n));
}

bool ExplorationLog::contains(std::string_view activity) const {
    const auto n = normalize_class_name(activity);
    return std::find(visited.begin(), visited.end(), n) != visited.end();
}

ExplorationLog parse_exploration_log(std::string_view text) {
    ExplorationLog log;
    for (const auto& line : detail::split_lines(text)) {
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        log.visit(t);
    }
    return log;
}

std::string format_exploration_log(const ExplorationLog& log) {
    std::string out;
    if (!log.source_tool.empty()) out += "# tool: " + log.source_tool + "\n";
    for (const auto& a : log.visited) out += to_java_name(a) + "\n";
    return out;
}

UnreachableResult unreachable_set(const std::vector<std::string>& declared, const std::vector<std::string>& visited) {
    std::set<std::string> d;
    for (const auto& a : declared) d.insert(normalize_class_name(a));
    std::set<std::string> v;
    UnreachableResult out;
    for (const auto& a : visited) {
        auto n = normalize_class_name(a);
        if (!v.insert(n).second) continue;
        if (!d.contains(n)) ++out.ignored_visits;
    }
    std::set<std::string> emitted;
    for (const auto& a : declared) {
        auto n = normalize_class_name(a);
        if (!v.contains(n) && emitted.insert(n).second) out.unreachable.push_back(n);
    }
    return out;
}

CoverageRatio activity_coverage(const std::vector<std::string>& declared, const std::vector<std::string>& visited) {
    std::set<std::string> d;
    for (const auto& a : declared) d.insert(normalize_class_name(a));
    if (d.empty()) return {0.0, true};
    std::size_t hit = 0;
    std::set<std::string> seen;
    for (const auto& a : visited) {
        auto n = normalize_class_name(a);
        if (d.contains(n) && seen.insert(n).second) ++hit;
    }
    return {static_cast<double>(hit) / static_cast<double>(d.size()), false};
}

std::string format_percent(double ratio) {
    return std::to_string(static_cast<long long>(std::lround(ratio * 100.0))) + "%";
}

CoverageReport make_coverage_report(const std::vector<std::string>& declared, const ExplorationLog& log) {
    CoverageReport r;
    std::set<std::string> d;
    for (const auto& a : declared) d.insert(normalize_class_name(a));
    r.declared_count = d.size();
    for (const auto& a : log.visited) {
        if (d.contains(a)) ++r.visited_count;
    }
    r.activity_coverage = activity_coverage(declared, log.visited).value;
    r.unreachable = unreachable_set(declared, log.visited).unreachable;
    return r;
}

std::vector<CodeCoverageEntry> parse_code_coverage(std::string_view text) {
    std::vector<CodeCoverageEntry> out;
    std::size_t line_no = 0;
    for (const auto& line : detail::split_lines(text)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto f = detail::split(t, '\t');
        try {
            if (f.size() != 3) throw std::invalid_argument("field count");
            CodeCoverageEntry e{f[0], std::stoul(f[1]), std::stoul(f[2])};
            if (e.covered > e.total) throw std::invalid_argument("covered > total");
            out.push_back(std::move(e));
        } catch (const std::exception&) {
            throw InputError("CoverageFormat", "coverage line " + std::to_string(line_no) + ": " + line);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

ReasonTaxonomy::ReasonTaxonomy(std::vector<Reason> reasons) : reasons_(std::move(reasons)) {
    if (reasons_.empty()) throw InputError("TaxonomyFormat", "reason taxonomy is empty");
    std::set<std::string> ids;
    for (const auto& r : reasons_) {
        if (r.id.empty() || r.id.find('+') != std::string::npos || r.id.find(',') != std::string::npos)
            throw InputError("TaxonomyFormat", "invalid reason id `" + r.id + "`");
        if (!ids.insert(r.id).second) throw InputError("TaxonomyFormat", "duplicate reason id `" + r.id + "`");
    }
}

ReasonTaxonomy ReasonTaxonomy::defaults() {
    return ReasonTaxonomy({
        {"server-input", "Third-party server input", "Launch depends on data returned by a remote server."},
        {"alternate-entry", "Alternate entry", "Reached from an entry point other than the main activity."},
        {"external-resources", "External resources", "Needs another device, an SD card or information the tester lacks."},
        {"disabled-feature", "Disabled for version or user", "Feature is switched off for this build, region or account."},
        {"error-triggered", "Triggered by errors", "Shown only when an error path is taken."},
        {"specific-hw-sw", "Specific hardware or software", "Requires a sensor, peripheral or companion app."},
        {"environment", "Environment", "Depends on device environment such as location or connectivity."},
        {"usage-pattern", "Usage pattern", "Requires a particular history of user interactions."},
        {"caller-activity", "Caller activity", "Only reachable after another unreached activity launches it."},
        {"no-entry-point", "No entry point", "No code path launches the activity."},
    });
}

ReasonTaxonomy ReasonTaxonomy::parse(std::string_view text) {
    std::vector<Reason> reasons;
    std::size_t line_no = 0;
    for (const auto& line : detail::split_lines(text)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto f = detail::split(t, '\t');
        if (f.size() != 3)
            throw InputError("TaxonomyFormat", "taxonomy line " + std::to_string(line_no) + ": expected 3 fields");
        reasons.push_back({f[0], f[1], f[2]});
    }
    return ReasonTaxonomy(std::move(reasons));
}

bool ReasonTaxonomy::contains(std::string_view id) const {
    return std::any_of(reasons_.begin(), reasons_.end(), [&](const Reason& r) { return r.id == id; });
}

bool ReasonTaxonomy::is_valid_category(std::string_view category) const {
    if (category.empty()) return false;
    for (const auto& part : detail::split(category, '+')) {
        if (!contains(part)) return false;
    }
    return true;
}

std::vector<LaunchOutcomeRecord> parse_launch_records(std::string_view text) {
    std::vector<LaunchOutcomeRecord> out;
    std::size_t line_no = 0;
    for (const auto& line : detail::split_lines(text)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto f = detail::split(t, '\t');
        if (f.size() != 4 || (f[2] != "0" && f[2] != "1"))
            throw InputError("LaunchRecordFormat", "launch record line " + std::to_string(line_no) + ": " + line);
        out.push_back({normalize_class_name(f[0]), f[1], f[2] == "1", f[3]});
    }
    return out;
}

std::map<std::string, ToolLaunchRates> launch_success_rate(const std::vector<LaunchOutcomeRecord>& records) {
    if (records.empty()) throw InputError("EmptyInput", "no launch outcome records");
    std::map<std::string, ToolLaunchRates> out;
    for (const auto& r : records) {
        auto& cat = out[r.tool].per_category[r.category];
        ++cat.total;
        if (r.success) ++cat.successes;
    }
    for (auto& [_, tool] : out) {
        double weighted = 0.0;
        std::size_t total = 0;
        for (const auto& [__, cat] : tool.per_category) {
            weighted += cat.rate() * static_cast<double>(cat.total);
            total += cat.total;
        }
        tool.weighted_average = weighted / static_cast<double>(total);
    }
    return out;
}

double recall_at_k(const std::vector<std::string>& ranked, const std::set<std::string>& truth, std::size_t k) {
    if (truth.empty()) throw InputError("EmptyTruth", "ground-truth reason set is empty");
    if (k < 1) throw InputError("InvalidK", "k must be >= 1");
    std::set<std::string> hits;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
        if (truth.contains(ranked[i])) hits.insert(ranked[i]);
    }
    return static_cast<double>(hits.size()) / static_cast<double>(truth.size());
}

std::vector<RecallLabel> parse_recall_labels(std::string_view text, const ReasonTaxonomy& taxonomy) {
    std::vector<RecallLabel> out;
    std::size_t line_no = 0;
    for (const auto& line : detail::split_lines(text)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto f = detail::split(t, '\t');
        const auto where = "labels line " + std::to_string(line_no);
        if (f.size() != 3) throw InputError("LabelsFormat", where + ": expected 3 fields");
        RecallLabel label{normalize_class_name(f[0]), {}, {}};
        for (const auto& id : detail::split(f[1], ',')) {
            auto s = std::string(detail::trim(id));
            if (s.empty()) continue;
            if (!taxonomy.contains(s)) throw InputError("LabelsFormat", where + ": unknown reason `" + s + "`");
            label.truth.insert(s);
        }
        for (const auto& id : detail::split(f[2], ',')) {
            auto s = std::string(detail::trim(id));
            if (s.empty()) continue;
            if (!taxonomy.contains(s)) throw InputError("LabelsFormat", where + ": unknown reason `" + s + "`");
            label.ranked.push_back(s);
        }
        if (label.truth.empty()) throw InputError("EmptyTruth", where + ": no ground-truth reasons");
        out.push_back(std::move(label));
    }
    return out;
}

RecallTable evaluate_recall(const std::vector<RecallLabel>& labels, const std::vector<std::size_t>& ks) {
    RecallTable table;
    table.ks = ks;
    table.mean.assign(ks.size(), 0.0);
    for (const auto& label : labels) {
        std::vector<double> row;
        for (std::size_t i = 0; i < ks.size(); ++i) {
            row.push_back(recall_at_k(label.ranked, label.truth, ks[i]));
            table.mean[i] += row.back();
        }
        table.per_label.push_back(std::move(row));
    }
    if (!labels.empty()) {
        for (auto& m : table.mean) m /= static_cast<double>(labels.size());
    }
    return table;
}

}  // namespace actreach
