#include "actreach/app_package.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "actreach/error.hpp"
#include "text_util.hpp"

namespace actreach {

namespace pt = boost::property_tree;

namespace {

std::string attr(const pt::ptree& node, const std::string& name) {
    if (auto attrs = node.get_child_optional("<xmlattr>")) {
        if (auto v = attrs->get_optional<std::string>(name)) return *v;
    }
    return {};
}

bool has_launcher_filter(const pt::ptree& node) {
    for (const auto& [tag, child] : node) {
        if (tag != "intent-filter") continue;
        bool main = false;
        bool launcher = false;
        for (const auto& [ftag, f] : child) {
            if (ftag == "action" && attr(f, "android:name") == "android.intent.action.MAIN") main = true;
            if (ftag == "category" && attr(f, "android:name") == "android.intent.category.LAUNCHER") launcher = true;
        }
        if (main && launcher) return true;
    }
    return false;
}

void add_unique(std::vector<std::string>& list, const std::string& item) {
    if (std::find(list.begin(), list.end(), item) == list.end()) list.push_back(item);
}

}  // namespace

std::string expand_activity_name(std::string_view package_name, std::string_view name) {
    std::string n(detail::trim(name));
    if (n.starts_with(".")) n = std::string(package_name) + n;
    else if (n.find('.') == std::string::npos && !(n.starts_with("L") && n.ends_with(";")))
        n = std::string(package_name) + "." + n;
    return normalize_class_name(n);
}

ManifestInfo parse_manifest(std::string_view xml) {
    const auto body = detail::trim(xml.starts_with("\xEF\xBB\xBF") ? xml.substr(3) : xml);
    if (body.empty() || body.front() != '<')
        throw InputError("BinaryManifest",
                         "AndroidManifest.xml is not plain XML (binary AAPT format?); decode the APK with "
                         "`apktool d` first");

    pt::ptree tree;
    std::istringstream in{std::string(body)};
    try {
        pt::read_xml(in, tree);
    } catch (const pt::xml_parser_error& e) {
        throw ManifestParseError("line " + std::to_string(e.line()), e.message());
    }

    const auto manifest = tree.get_child_optional("manifest");
    if (!manifest) throw ManifestParseError("/", "missing <manifest> root element");

    ManifestInfo info;
    info.package_name = attr(*manifest, "package");
    if (info.package_name.empty()) throw ManifestParseError("manifest", "missing package attribute");

    const auto application = manifest->get_child_optional("application");
    if (!application) return info;

    std::size_t activity_no = 0;
    std::size_t alias_no = 0;
    for (const auto& [tag, node] : *application) {
        if (tag == "activity") {
            ++activity_no;
            const std::string name = attr(node, "android:name");
            if (name.empty())
                throw ManifestParseError("manifest/application/activity[" + std::to_string(activity_no) + "]",
                                         "missing android:name");
            const auto desc = expand_activity_name(info.package_name, name);
            add_unique(info.declared_activities, desc);
            if (has_launcher_filter(node)) add_unique(info.main_activities, desc);
        } else if (tag == "activity-alias") {
            ++alias_no;
            const std::string target = attr(node, "android:targetActivity");
            if (target.empty())
                throw ManifestParseError("manifest/application/activity-alias[" + std::to_string(alias_no) + "]",
                                         "missing android:targetActivity");
            const auto desc = expand_activity_name(info.package_name, target);
            add_unique(info.declared_activities, desc);
            if (has_launcher_filter(node)) add_unique(info.main_activities, desc);
        }
    }
    return info;
}

bool AppPackage::is_declared(std::string_view activity) const {
    const auto n = normalize_class_name(activity);
    return std::find(declared_activities.begin(), declared_activities.end(), n) != declared_activities.end();
}

bool AppPackage::is_main(std::string_view activity) const {
    const auto n = normalize_class_name(activity);
    return std::find(main_activities.begin(), main_activities.end(), n) != main_activities.end();
}

AppPackage make_package(ManifestInfo manifest, std::vector<SmaliClass> classes) {
    AppPackage pkg;
    pkg.package_name = std::move(manifest.package_name);
    pkg.declared_activities = std::move(manifest.declared_activities);
    pkg.main_activities = std::move(manifest.main_activities);
    pkg.index = CodeIndex::build(std::move(classes));
    for (auto& site : find_launch_sites(pkg.index)) pkg.launch_sites.push_back(resolve_intent_target(pkg.index, site));
    pkg.ctg = build_ctg(pkg.index, pkg.declared_activities, pkg.launch_sites);
    return pkg;
}

AppPackage ingest_package(const std::filesystem::path& root) {
    const auto manifest_path = root / "AndroidManifest.xml";
    if (!std::filesystem::is_regular_file(manifest_path)) throw MissingManifest(root.string());
    auto manifest = parse_manifest(detail::read_file(manifest_path));
    auto classes = load_smali_tree(root);
    if (classes.empty()) throw EmptySmaliTree(root.string());
    return make_package(std::move(manifest), std::move(classes));
}

ActivityCheck check_activity_exists(const AppPackage& pkg, std::string_view name) {
    ActivityCheck check;
    check.exists = pkg.is_declared(name);
    check.missing_class = check.exists && !check_class_exists(pkg.index, name);
    return check;
}

const std::vector<std::string>& get_activities(const AppPackage& pkg) { return pkg.declared_activities; }

}  // namespace actreach
