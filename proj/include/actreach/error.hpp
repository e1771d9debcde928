#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace actreach {

/// Coarse failure class; the CLI maps each to a process exit code.
enum class ErrorCategory {
    Usage,        // 2
    InputFormat,  // 3
    ModelClient,  // 4
    Device,       // 5
};

int exit_code_for(ErrorCategory category);

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, std::string kind, const std::string& message);

    ErrorCategory category() const { return category_; }
    const std::string& kind() const { return kind_; }

private:
    ErrorCategory category_;
    std::string kind_;
};

/// Malformed smali directive structure.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& message, const std::string& file = {});
    std::size_t line() const { return line_; }
    const std::string& detail() const { return detail_; }

private:
    std::size_t line_;
    std::string detail_;
};

class DuplicateClass : public Error {
public:
    explicit DuplicateClass(const std::string& descriptor);
    const std::string& descriptor() const { return descriptor_; }

private:
    std::string descriptor_;
};

class MissingManifest : public Error {
public:
    explicit MissingManifest(const std::string& root);
};

class ManifestParseError : public Error {
public:
    ManifestParseError(const std::string& element_path, const std::string& message);
    const std::string& element_path() const { return element_path_; }

private:
    std::string element_path_;
};

class EmptySmaliTree : public Error {
public:
    explicit EmptySmaliTree(const std::string& root);
};

class InputError : public Error {
public:
    InputError(std::string kind, const std::string& message)
        : Error(ErrorCategory::InputFormat, std::move(kind), message) {}
};

class ClientError : public Error {
public:
    ClientError(const std::string& message, std::string transcript = {});
    const std::string& transcript() const { return transcript_; }

private:
    std::string transcript_;
};

class MalformedResponse : public Error {
public:
    explicit MalformedResponse(const std::string& message)
        : Error(ErrorCategory::ModelClient, "MalformedResponse", message) {}
};

class PlanParseError : public Error {
public:
    PlanParseError(std::size_t line, const std::string& text, const std::string& message);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class DeviceUnavailable : public Error {
public:
    explicit DeviceUnavailable(const std::string& message)
        : Error(ErrorCategory::Device, "DeviceUnavailable", message) {}
};

}  // namespace actreach
