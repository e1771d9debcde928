#include "actreach/error.hpp"

namespace actreach {

int exit_code_for(ErrorCategory category) {
    switch (category) {
    case ErrorCategory::Usage: return 2;
    case ErrorCategory::InputFormat: return 3;
    case ErrorCategory::ModelClient: return 4;
    case ErrorCategory::Device: return 5;
    }
    return 1;
}

Error::Error(ErrorCategory category, std::string kind, const std::string& message)
    : std::runtime_error(message), category_(category), kind_(std::move(kind)) {}

ParseError::ParseError(std::size_t line, const std::string& message, const std::string& file)
    : Error(ErrorCategory::InputFormat, "ParseError",
            (file.empty() ? "line " : file + ":") + std::to_string(line) + ": " + message),
      line_(line),
      detail_(message) {}

DuplicateClass::DuplicateClass(const std::string& descriptor)
    : Error(ErrorCategory::InputFormat, "DuplicateClass", "duplicate class " + descriptor),
      descriptor_(descriptor) {}

MissingManifest::MissingManifest(const std::string& root)
    : Error(ErrorCategory::InputFormat, "MissingManifest",
            "no AndroidManifest.xml under " + root) {}

ManifestParseError::ManifestParseError(const std::string& element_path, const std::string& message)
    : Error(ErrorCategory::InputFormat, "ManifestParseError", element_path + ": " + message),
      element_path_(element_path) {}

EmptySmaliTree::EmptySmaliTree(const std::string& root)
    : Error(ErrorCategory::InputFormat, "EmptySmaliTree", "no .smali files under " + root + "/smali*") {}

ClientError::ClientError(const std::string& message, std::string transcript)
    : Error(ErrorCategory::ModelClient, "ClientError", message), transcript_(std::move(transcript)) {}

PlanParseError::PlanParseError(std::size_t line, const std::string& text, const std::string& message)
    : Error(ErrorCategory::ModelClient, "PlanParseError",
            "plan line " + std::to_string(line) + " (" + text + "): " + message),
      line_(line) {}

}  // namespace actreach
