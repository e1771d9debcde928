#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "actreach/ctg.hpp"
#include "actreach/smali.hpp"

namespace actreach {

struct ManifestInfo {
    std::string package_name;
    std::vector<std::string> declared_activities;  // descriptors, manifest order, deduplicated
    std::vector<std::string> main_activities;      // MAIN + LAUNCHER
};

/// Parses plain-XML AndroidManifest text (apktool output).
ManifestInfo parse_manifest(std::string_view xml);

/// Expands `.Foo` / `Foo` against the package name and normalizes to a descriptor.
std::string expand_activity_name(std::string_view package_name, std::string_view name);

struct AppPackage {
    std::string package_name;
    std::vector<std::string> declared_activities;
    std::vector<std::string> main_activities;
    CodeIndex index;
    Ctg ctg;
    std::vector<LaunchSite> launch_sites;  // resolved

    bool is_declared(std::string_view activity) const;
    bool is_main(std::string_view activity) const;
};

/// Reads `root/AndroidManifest.xml` and every `root/smali*` tree, then builds
/// the code index and the CTG.
AppPackage ingest_package(const std::filesystem::path& root);

/// Builds a package from already-parsed parts.
AppPackage make_package(ManifestInfo manifest, std::vector<SmaliClass> classes);

struct ActivityCheck {
    bool exists = false;
    bool missing_class = false;  // declared in the manifest, but no smali class
};

ActivityCheck check_activity_exists(const AppPackage& pkg, std::string_view name);

const std::vector<std::string>& get_activities(const AppPackage& pkg);

}  // namespace actreach
