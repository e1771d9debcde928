#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "actreach/app_package.hpp"
#include "actreach/ctg.hpp"
#include "actreach/smali.hpp"
#include "actreach/validation.hpp"
#include "actreach/widgets.hpp"

namespace testsupport {

inline std::filesystem::path fixtures() { return ACTREACH_FIXTURES; }
inline std::filesystem::path demo_dir() { return ACTREACH_DEMO; }
inline std::filesystem::path data_dir() { return ACTREACH_DATA; }
inline std::string cli_path() { return ACTREACH_CLI; }

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Fresh, empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

/// Output and exit status of a shell command (stderr merged).
struct CommandResult {
    int status = 0;
    std::string output;
};
CommandResult run_command(const std::string& command);

/// Every `.smali` file below `root`, sorted.
std::vector<std::filesystem::path> smali_files(const std::filesystem::path& root);

/// `# @Kind` markers planted in fixture text: (1-based line, kind name).
std::vector<std::pair<std::size_t, std::string>> planted_kinds(const std::string& text);

// ---------------------------------------------------------------------------
// Random smali packages
// ---------------------------------------------------------------------------

struct GeneratedPackage {
    std::vector<std::string> files;  // smali source text, one class each
    /// Planted invoke targets per method, in order (duplicates kept).
    std::map<actreach::MethodRef, std::vector<actreach::MethodRef>> planted_calls;
};

GeneratedPackage random_package(std::mt19937_64& rng, std::size_t max_classes);

// ---------------------------------------------------------------------------
// Dialog placement instances
// ---------------------------------------------------------------------------

struct DialogInstance {
    std::vector<std::string> declared;
    std::vector<std::string> mains;
    std::vector<std::string> unreachables;
    std::vector<std::string> instrumentations;
    actreach::Ctg ctg;
};

DialogInstance random_dialog_instance(std::mt19937_64& rng, bool allow_empty_mains);

/// Straight reading of the placement rules, kept apart from the library code.
/// Returns false (and leaves `out` empty) where the library must raise EmptyMains.
bool oracle_dialogs(const DialogInstance& inst, std::map<std::string, std::vector<std::string>>& out);

// ---------------------------------------------------------------------------
// Other oracles
// ---------------------------------------------------------------------------

/// Callers computed by scanning every method body for every other method.
std::map<actreach::MethodRef, std::set<actreach::MethodRef>> brute_force_callers(const actreach::CodeIndex& index);

/// Activities reachable from the mains via unguarded transitions, plus dialog
/// buttons when `dialogs_usable`.
std::set<std::string> bfs_reachable(const actreach::DeviceScenario& scenario, const actreach::ActivityDialogs& dialogs,
                                    bool dialogs_usable);

}  // namespace testsupport
