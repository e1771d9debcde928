#include <algorithm>
#include <deque>

#include "support.hpp"

namespace testsupport {

using actreach::MethodRef;

bool oracle_dialogs(const DialogInstance& inst, std::map<std::string, std::vector<std::string>>& out) {
    out.clear();
    auto in = [](const std::vector<std::string>& v, const std::string& x) {
        return std::find(v.begin(), v.end(), x) != v.end();
    };
    auto add = [&](const std::string& where, const std::string& what) {
        auto& v = out[where];
        if (!in(v, what)) v.push_back(what);
    };

    for (const auto& target : inst.instrumentations) {
        if (!in(inst.unreachables, target)) continue;

        std::vector<std::string> sources;
        for (const auto& e : inst.ctg.edges)
            if (e.target_activity == target && !in(sources, e.source_activity)) sources.push_back(e.source_activity);

        std::vector<std::string> usable;
        for (const auto& s : sources) {
            const bool reachable = in(inst.declared, s) && !in(inst.unreachables, s);
            if (reachable && !in(inst.mains, s)) usable.push_back(s);
        }

        if (usable.empty()) {
            if (inst.mains.empty()) {
                out.clear();
                return false;
            }
            for (const auto& m : inst.mains) add(m, target);
        } else {
            for (const auto& s : usable) add(s, target);
        }
    }
    for (auto& [_, v] : out) std::sort(v.begin(), v.end());
    return true;
}

std::map<MethodRef, std::set<MethodRef>> brute_force_callers(const actreach::CodeIndex& index) {
    std::vector<const actreach::SmaliMethod*> methods;
    for (const auto& [_, cls] : index.classes())
        for (const auto& m : cls.methods) methods.push_back(&m);

    std::map<MethodRef, std::set<MethodRef>> out;
    for (const auto* callee : methods) {
        for (const auto* caller : methods) {
            for (const auto& ins : caller->instructions) {
                const auto* inv = std::get_if<actreach::InvokeOperands>(&ins.operands);
                if (inv && inv->method == callee->ref()) {
                    out[callee->ref()].insert(caller->ref());
                    break;
                }
            }
        }
    }
    return out;
}

std::set<std::string> bfs_reachable(const actreach::DeviceScenario& scenario, const actreach::ActivityDialogs& dialogs,
                                     bool dialogs_usable) {
    std::set<std::string> seen(scenario.mains.begin(), scenario.mains.end());
    std::deque<std::string> queue(scenario.mains.begin(), scenario.mains.end());
    while (!queue.empty()) {
        const auto at = queue.front();
        queue.pop_front();
        std::vector<std::string> next;
        for (const auto& [src, dst] : scenario.transitions)
            if (src == at && !scenario.is_guarded(dst)) next.push_back(dst);
        if (dialogs_usable) {
            if (auto it = dialogs.find(at); it != dialogs.end()) next.insert(next.end(), it->second.begin(), it->second.end());
        }
        for (const auto& n : next)
            if (seen.insert(n).second) queue.push_back(n);
    }
    return seen;
}

}  // namespace testsupport
