#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "actreach/smali.hpp"

namespace actreach {

struct AppPackage;

enum class LaunchApi { StartActivity, StartActivityForResult };
enum class Resolution { ConstClass, SetClassName, Unresolved };

std::string_view to_string(LaunchApi api);
std::string_view to_string(Resolution r);

struct LaunchSite {
    MethodRef caller;
    std::size_t line_no = 0;
    LaunchApi api = LaunchApi::StartActivity;
    std::optional<std::string> resolved_target;
    Resolution resolution = Resolution::Unresolved;

    auto operator<=>(const LaunchSite&) const = default;
    bool operator==(const LaunchSite&) const = default;
};

struct CtgEdge {
    std::string source_activity;
    MethodRef source_method;
    std::string target_activity;

    auto operator<=>(const CtgEdge&) const = default;
    bool operator==(const CtgEdge&) const = default;
};

/// Component transition graph.
struct Ctg {
    std::set<CtgEdge> edges;
    std::vector<LaunchSite> unresolved_sites;

    /// Distinct source activities of edges into `target`, sorted.
    std::vector<std::string> sources(std::string_view target) const;
};

/// One site per invoke of startActivity/startActivityForResult (any overload),
/// in class, method, line order. Resolution is left Unresolved.
std::vector<LaunchSite> find_launch_sites(const CodeIndex& index);

/// Backward scan inside the caller's body for the intent's component.
LaunchSite resolve_intent_target(const CodeIndex& index, LaunchSite site);

/// Attributes resolved sites to declared activities. Sites with no activity
/// owner, or whose target is not declared, go to unresolved_sites.
Ctg build_ctg(const CodeIndex& index, const std::vector<std::string>& declared_activities,
              const std::vector<LaunchSite>& resolved_sites);

/// find + resolve + build in one go.
Ctg build_ctg(const AppPackage& pkg);

/// Sorted (activity, method) pairs whose edges reach `target`.
std::vector<std::pair<std::string, MethodRef>> get_launching_activities_and_methods(const Ctg& ctg,
                                                                                    std::string_view target);

/// `source<TAB>method<TAB>target` lines, then an `UNRESOLVED` section.
std::string export_ctg(const Ctg& ctg);
Ctg import_ctg(std::string_view text);

}  // namespace actreach
