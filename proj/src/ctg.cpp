#include "actreach/ctg.hpp"

#include <algorithm>

#include "actreach/app_package.hpp"
#include "actreach/error.hpp"
#include "text_util.hpp"

namespace actreach {

namespace {

constexpr std::string_view kIntent = "Landroid/content/Intent;";
constexpr std::string_view kClassType = "Ljava/lang/Class;";

// `move-object vA, vB` and its /from16, /16 forms.
std::optional<std::pair<std::string, std::string>> parse_move_object(std::string_view raw) {
    auto code = detail::trim(raw);
    if (!code.starts_with("move-object")) return std::nullopt;
    const auto space = code.find_first_of(" \t");
    if (space == std::string_view::npos) return std::nullopt;
    auto ops = detail::split(code.substr(space), ',');
    if (ops.size() != 2) return std::nullopt;
    return std::pair{std::string(detail::trim(ops[0])), std::string(detail::trim(ops[1]))};
}

std::optional<std::string> written_register(const Instruction& ins) {
    if (const auto* c = std::get_if<ConstOperands>(&ins.operands)) return c->dest;
    if (const auto* m = std::get_if<MoveResultOperands>(&ins.operands)) return m->dest;
    if (const auto* n = std::get_if<NewInstanceOperands>(&ins.operands)) return n->dest;
    if (auto mv = parse_move_object(ins.raw_text)) return mv->first;
    return std::nullopt;
}

// Finds the constant loaded into `reg` before position `from` (exclusive).
std::optional<std::string> find_const(const std::vector<Instruction>& body, std::size_t from, std::string reg,
                                      ConstOperands::Type type) {
    for (std::size_t j = from; j-- > 0;) {
        const auto& ins = body[j];
        auto written = written_register(ins);
        if (!written || *written != reg) continue;
        if (const auto* c = std::get_if<ConstOperands>(&ins.operands)) {
            if (c->type == type) return c->literal;
            return std::nullopt;
        }
        if (auto mv = parse_move_object(ins.raw_text)) {
            reg = mv->second;
            continue;
        }
        return std::nullopt;
    }
    return std::nullopt;
}

// Blank lines, comments and debug directives between an invoke and its move-result.
bool is_filler(std::string_view raw) {
    const auto t = detail::trim(raw);
    return t.empty() || t.starts_with('#') || t.starts_with(".line") || t.starts_with(".local") ||
           t.starts_with(".end local") || t.starts_with(".restart local") || t.starts_with(".prologue");
}

std::optional<std::size_t> class_param_register(const InvokeOperands& inv) {
    const auto params = parameter_types(inv.method.signature);
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i] == kClassType) return i + 1;  // +1 for the receiver
    }
    return std::nullopt;
}

}  // namespace

std::string_view to_string(LaunchApi api) {
    return api == LaunchApi::StartActivity ? "startActivity" : "startActivityForResult";
}

std::string_view to_string(Resolution r) {
    switch (r) {
    case Resolution::ConstClass: return "ConstClass";
    case Resolution::SetClassName: return "SetClassName";
    case Resolution::Unresolved: return "Unresolved";
    }
    return "Unresolved";
}

std::vector<std::string> Ctg::sources(std::string_view target) const {
    std::set<std::string> out;
    for (const auto& e : edges) {
        if (e.target_activity == target) out.insert(e.source_activity);
    }
    return {out.begin(), out.end()};
}

std::vector<LaunchSite> find_launch_sites(const CodeIndex& index) {
    std::vector<LaunchSite> sites;
    for (const auto& [_, cls] : index.classes()) {
        for (const auto& m : cls.methods) {
            for (const auto& ins : m.instructions) {
                const auto* inv = std::get_if<InvokeOperands>(&ins.operands);
                if (!inv) continue;
                const auto name = inv->method.name();
                if (name == "startActivity") sites.push_back({m.ref(), ins.line_no, LaunchApi::StartActivity, std::nullopt, Resolution::Unresolved});
                else if (name == "startActivityForResult")
                    sites.push_back({m.ref(), ins.line_no, LaunchApi::StartActivityForResult, std::nullopt, Resolution::Unresolved});
            }
        }
    }
    return sites;
}

LaunchSite resolve_intent_target(const CodeIndex& index, LaunchSite site) {
    site.resolution = Resolution::Unresolved;
    site.resolved_target.reset();

    const auto* method = index.find_method(site.caller);
    if (!method) return site;
    const auto& body = method->instructions;
    const auto at = std::find_if(body.begin(), body.end(), [&](const Instruction& i) { return i.line_no == site.line_no; });
    if (at == body.end()) return site;
    const auto* launch = std::get_if<InvokeOperands>(&at->operands);
    if (!launch) return site;

    const bool is_static = launch->opcode.starts_with("invoke-static");
    const std::size_t intent_pos = is_static ? 0 : 1;
    if (launch->registers.size() <= intent_pos) return site;
    std::string intent_reg = launch->registers[intent_pos];

    for (std::size_t j = static_cast<std::size_t>(at - body.begin()); j-- > 0;) {
        const auto& ins = body[j];
        if (const auto* inv = std::get_if<InvokeOperands>(&ins.operands)) {
            if (inv->method.owner != kIntent || inv->registers.empty() || inv->registers[0] != intent_reg) continue;
            const auto name = inv->method.name();
            if (name == "setClassName" && inv->registers.size() >= 3) {
                if (auto lit = find_const(body, j, inv->registers[2], ConstOperands::Type::String)) {
                    site.resolved_target = normalize_class_name(*lit);
                    site.resolution = Resolution::SetClassName;
                }
                return site;
            }
            if (name == "setClass" || name == "<init>") {
                const auto pos = class_param_register(*inv);
                if (!pos) {
                    if (name == "<init>") return site;
                    continue;
                }
                if (*pos >= inv->registers.size()) return site;
                if (auto lit = find_const(body, j, inv->registers[*pos], ConstOperands::Type::Class)) {
                    site.resolved_target = normalize_class_name(*lit);
                    site.resolution = Resolution::ConstClass;
                }
                return site;
            }
            continue;
        }
        const auto written = written_register(ins);
        if (!written || *written != intent_reg) continue;
        if (std::holds_alternative<MoveResultOperands>(ins.operands)) {
            // Builder-style calls return the same intent: follow the receiver.
            std::size_t k = j;
            while (k > 0 && is_filler(body[k - 1].raw_text)) --k;
            if (k > 0) {
                if (const auto* prev = std::get_if<InvokeOperands>(&body[k - 1].operands)) {
                    if (prev->method.owner == kIntent && return_type(prev->method.signature) == kIntent &&
                        !prev->registers.empty()) {
                        intent_reg = prev->registers[0];
                        continue;
                    }
                }
            }
            return site;
        }
        if (auto mv = parse_move_object(ins.raw_text)) {
            intent_reg = mv->second;
            continue;
        }
        return site;  // new-instance or unrelated write: construction reached unresolved
    }
    return site;
}

namespace {

// Declared activities that run `site_method`: the owner itself and declared
// subclasses inheriting it without override; failing that, the nearest
// declared ancestor of the owner.
std::vector<std::string> attribute_site(const CodeIndex& index, const std::vector<std::string>& declared,
                                        const MethodRef& site_method) {
    std::vector<std::string> out;
    for (const auto& activity : declared) {
        const auto chain = index.superclass_chain(activity);
        const auto pos = std::find(chain.begin(), chain.end(), site_method.owner);
        if (pos == chain.end()) continue;
        bool overridden = false;
        for (auto it = chain.begin(); it != pos; ++it) {
            const auto* cls = index.find_class(*it);
            if (cls && cls->find_method(site_method.signature)) {
                overridden = true;
                break;
            }
        }
        if (!overridden) out.push_back(activity);
    }
    if (!out.empty()) return out;

    const auto chain = index.superclass_chain(site_method.owner);
    for (std::size_t i = 1; i < chain.size(); ++i) {
        if (std::find(declared.begin(), declared.end(), chain[i]) != declared.end()) return {chain[i]};
    }
    // The direct superclass may be declared without smali of its own.
    if (!chain.empty()) {
        const auto* cls = index.find_class(chain.back());
        if (cls && std::find(declared.begin(), declared.end(), cls->super_name) != declared.end())
            return {cls->super_name};
    }
    return {};
}

}  // namespace

Ctg build_ctg(const CodeIndex& index, const std::vector<std::string>& declared_activities,
              const std::vector<LaunchSite>& resolved_sites) {
    Ctg ctg;
    for (const auto& site : resolved_sites) {
        const bool target_declared =
            site.resolved_target && std::find(declared_activities.begin(), declared_activities.end(),
                                              *site.resolved_target) != declared_activities.end();
        if (site.resolution == Resolution::Unresolved || !target_declared) {
            ctg.unresolved_sites.push_back(site);
            continue;
        }
        const auto sources = attribute_site(index, declared_activities, site.caller);
        if (sources.empty()) {
            ctg.unresolved_sites.push_back(site);
            continue;
        }
        for (const auto& source : sources) ctg.edges.insert({source, site.caller, *site.resolved_target});
    }
    return ctg;
}

Ctg build_ctg(const AppPackage& pkg) {
    std::vector<LaunchSite> sites;
    for (auto& site : find_launch_sites(pkg.index)) sites.push_back(resolve_intent_target(pkg.index, site));
    return build_ctg(pkg.index, pkg.declared_activities, sites);
}

std::vector<std::pair<std::string, MethodRef>> get_launching_activities_and_methods(const Ctg& ctg,
                                                                                    std::string_view target) {
    const auto normalized = normalize_class_name(target);
    std::vector<std::pair<std::string, MethodRef>> out;
    for (const auto& e : ctg.edges) {
        if (e.target_activity == normalized) out.emplace_back(e.source_activity, e.source_method);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::string export_ctg(const Ctg& ctg) {
    std::string out;
    for (const auto& e : ctg.edges) {
        out += e.source_activity + "\t" + e.source_method.str() + "\t" + e.target_activity + "\n";
    }
    for (const auto& s : ctg.unresolved_sites) {
        out += "UNRESOLVED\t" + s.caller.str() + "\t" + std::to_string(s.line_no) + "\t" +
               std::string(to_string(s.api)) + "\t" + std::string(to_string(s.resolution)) + "\t" +
               s.resolved_target.value_or("-") + "\n";
    }
    return out;
}

Ctg import_ctg(std::string_view text) {
    Ctg ctg;
    std::size_t line_no = 0;
    for (const auto& line : detail::split_lines(text)) {
        ++line_no;
        if (detail::trim(line).empty() || line.starts_with("#")) continue;
        const auto fields = detail::split(line, '\t');
        auto bad = [&] { return InputError("CtgFormat", "ctg line " + std::to_string(line_no) + ": " + line); };
        if (fields[0] == "UNRESOLVED") {
            if (fields.size() != 6) throw bad();
            LaunchSite site;
            auto ref = parse_method_ref(fields[1]);
            if (!ref) throw bad();
            site.caller = *ref;
            try {
                site.line_no = std::stoul(fields[2]);
            } catch (const std::exception&) {
                throw bad();
            }
            site.api = fields[3] == "startActivityForResult" ? LaunchApi::StartActivityForResult : LaunchApi::StartActivity;
            site.resolution = fields[4] == "ConstClass"     ? Resolution::ConstClass
                              : fields[4] == "SetClassName" ? Resolution::SetClassName
                                                            : Resolution::Unresolved;
            if (fields[5] != "-") site.resolved_target = fields[5];
            ctg.unresolved_sites.push_back(std::move(site));
            continue;
        }
        if (fields.size() != 3) throw bad();
        auto ref = parse_method_ref(fields[1]);
        if (!ref) throw bad();
        ctg.edges.insert({fields[0], *ref, fields[2]});
    }
    return ctg;
}

}  // namespace actreach
