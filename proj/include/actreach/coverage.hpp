#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace actreach {

/// Visited activities, normalized to descriptors, first-visit order.
struct ExplorationLog {
    std::vector<std::string> visited;
    std::string source_tool;
    double duration_seconds = 0.0;

    /// Appends `activity` unless already present.
    void visit(std::string_view activity);
    bool contains(std::string_view activity) const;
};

/// One activity per line, `#` comments, dotted or descriptor names.
ExplorationLog parse_exploration_log(std::string_view text);
std::string format_exploration_log(const ExplorationLog& log);

struct UnreachableResult {
    std::vector<std::string> unreachable;  // declared order
    std::size_t ignored_visits = 0;        // visited entries outside the declared set
};

UnreachableResult unreachable_set(const std::vector<std::string>& declared, const std::vector<std::string>& visited);

struct CoverageRatio {
    double value = 0.0;
    bool degenerate = false;  // declared set empty
};

CoverageRatio activity_coverage(const std::vector<std::string>& declared, const std::vector<std::string>& visited);

/// Rounds a ratio to the integer-percent convention, e.g. 0.333 -> "33%".
std::string format_percent(double ratio);

struct CoverageReport {
    std::size_t declared_count = 0;
    std::size_t visited_count = 0;  // visited ∩ declared
    double activity_coverage = 0.0;
    std::vector<std::string> unreachable;
};

CoverageReport make_coverage_report(const std::vector<std::string>& declared, const ExplorationLog& log);

/// Optional class/method/line figures read from `kind<TAB>covered<TAB>total`.
struct CodeCoverageEntry {
    std::string kind;
    std::size_t covered = 0;
    std::size_t total = 0;
};

std::vector<CodeCoverageEntry> parse_code_coverage(std::string_view text);

// ---------------------------------------------------------------------------
// Reason taxonomy and launch outcomes
// ---------------------------------------------------------------------------

struct Reason {
    std::string id;
    std::string label;
    std::string description;
};

class ReasonTaxonomy {
public:
    /// Throws InputError on duplicate ids or an empty list.
    explicit ReasonTaxonomy(std::vector<Reason> reasons);

    /// Ten reasons shipped with the tool.
    static ReasonTaxonomy defaults();
    /// `id<TAB>label<TAB>description` lines, `#` comments.
    static ReasonTaxonomy parse(std::string_view text);

    const std::vector<Reason>& reasons() const { return reasons_; }
    bool contains(std::string_view id) const;

    /// A category is one or more reason ids joined by '+'.
    bool is_valid_category(std::string_view category) const;

private:
    std::vector<Reason> reasons_;
};

struct LaunchOutcomeRecord {
    std::string target;
    std::string category;
    bool success = false;
    std::string tool;
};

/// `target<TAB>category<TAB>0|1<TAB>tool` lines.
std::vector<LaunchOutcomeRecord> parse_launch_records(std::string_view text);

struct CategoryRate {
    std::size_t successes = 0;
    std::size_t total = 0;
    double rate() const { return total ? static_cast<double>(successes) / static_cast<double>(total) : 0.0; }
};

struct ToolLaunchRates {
    std::map<std::string, CategoryRate> per_category;
    double weighted_average = 0.0;
};

/// Per tool label. Throws InputError("EmptyInput") on an empty record list.
std::map<std::string, ToolLaunchRates> launch_success_rate(const std::vector<LaunchOutcomeRecord>& records);

/// |truth ∩ top-k(ranked)| / |truth|. Throws InputError("EmptyTruth") if truth
/// is empty and InputError("InvalidK") if k < 1.
double recall_at_k(const std::vector<std::string>& ranked, const std::set<std::string>& truth, std::size_t k);

struct RecallLabel {
    std::string activity;
    std::set<std::string> truth;
    std::vector<std::string> ranked;
};

/// `activity<TAB>truth,ids<TAB>ranked,ids` lines. Ids are checked against the taxonomy.
std::vector<RecallLabel> parse_recall_labels(std::string_view text, const ReasonTaxonomy& taxonomy);

struct RecallTable {
    std::vector<std::size_t> ks;
    std::vector<std::vector<double>> per_label;  // [label][k]
    std::vector<double> mean;                    // [k]
};

RecallTable evaluate_recall(const std::vector<RecallLabel>& labels, const std::vector<std::size_t>& ks);

}  // namespace actreach
