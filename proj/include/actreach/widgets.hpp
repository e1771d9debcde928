#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "actreach/ctg.hpp"
#include "actreach/error.hpp"

namespace actreach {

/// source activity -> targets offered by its injected dialog (plus Cancel).
using ActivityDialogs = std::map<std::string, std::set<std::string>>;

class EmptyMains : public Error {
public:
    explicit EmptyMains(const std::string& target)
        : Error(ErrorCategory::InputFormat, "EmptyMains", "no main activity to host a dialog for " + target) {}
};

/// Places each instrumented, unreachable target on the reachable non-main
/// activities that launch it in the CTG, or on every main when none does.
/// Reachable non-mains are declared − unreachables − mains.
ActivityDialogs find_dialog_for_target(const std::vector<std::string>& instrumentations, const Ctg& ctg,
                                       const std::vector<std::string>& mains,
                                       const std::vector<std::string>& unreachables,
                                       const std::vector<std::string>& declared);

/// `source<TAB>t1,t2,...` lines.
std::string export_dialogs(const ActivityDialogs& dialogs);
/// Throws InputError "DialogsFormat".
ActivityDialogs import_dialogs(std::string_view text);

}  // namespace actreach
