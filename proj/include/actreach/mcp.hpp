#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "actreach/app_package.hpp"
#include "actreach/error.hpp"

namespace actreach {

using ToolArgs = std::map<std::string, std::string>;

struct ToolParameter {
    std::string name;
    std::string description;
};

struct ToolDescriptor {
    std::string name;
    std::string description;
    std::vector<ToolParameter> parameters;  // all string-typed, all required

    nlohmann::json input_schema() const;
};

class UnknownTool : public Error {
public:
    explicit UnknownTool(const std::string& name)
        : Error(ErrorCategory::InputFormat, "UnknownTool", "unknown tool: " + name) {}
};

class MissingArgument : public Error {
public:
    MissingArgument(const std::string& tool, const std::string& arg)
        : Error(ErrorCategory::InputFormat, "MissingArgument", tool + ": missing required argument `" + arg + "`") {}
};

struct ToolResult {
    std::string text;
    bool is_error = false;
};

inline constexpr std::size_t kDefaultResultCap = 64 * 1024;

/// The semantic-memory tool surface over one ingested package. Stateless and
/// read-only with respect to the package.
class Toolbox {
public:
    explicit Toolbox(const AppPackage& pkg, std::size_t result_cap = kDefaultResultCap);

    /// Nine entries; the launching-sites tool appears twice (smali and CTG
    /// flavours) and both dispatch to the same handler.
    static const std::vector<ToolDescriptor>& descriptors();

    /// Throws UnknownTool / MissingArgument.
    ToolResult call(std::string_view name, const ToolArgs& args) const;

    std::size_t result_cap() const { return result_cap_; }

private:
    const AppPackage& pkg_;
    std::size_t result_cap_;
};

/// Appends an explicit marker when `text` exceeds `cap` bytes.
std::string truncate_result(std::string text, std::size_t cap);

struct ToolCallRecord {
    std::uint64_t seq = 0;
    std::string tool_name;
    ToolArgs args;
    std::string result;
    std::string timestamp;

    bool operator==(const ToolCallRecord&) const = default;
};

nlohmann::json to_json(const ToolCallRecord& record);
ToolCallRecord record_from_json(const nlohmann::json& j);

/// One JSON object per line.
std::vector<ToolCallRecord> read_record_file(const std::filesystem::path& path);
std::vector<ToolCallRecord> parse_record_lines(std::string_view text);

/// Produces the timestamp stored with each record.
using RecordClock = std::function<std::string(std::uint64_t seq)>;

/// `logical:<seq>`; keeps record files byte-identical across runs.
RecordClock logical_clock();
/// UTC wall-clock time, ISO 8601 with milliseconds.
RecordClock wall_clock();

/// Append-only tool-call log, optionally mirrored to a line-delimited file
/// (truncated on construction).
class ToolCallRecorder {
public:
    explicit ToolCallRecorder(RecordClock clock = logical_clock());
    ToolCallRecorder(const std::filesystem::path& file, RecordClock clock = logical_clock());

    const ToolCallRecord& append(std::string tool_name, ToolArgs args, std::string result);
    const std::vector<ToolCallRecord>& records() const { return records_; }

private:
    RecordClock clock_;
    std::vector<ToolCallRecord> records_;
    std::unique_ptr<std::ofstream> sink_;
};

/// Executes a tool call and records it. Errors are recorded as `ERROR: ...`
/// and rethrown.
ToolResult dispatch_tool_call(const Toolbox& toolbox, ToolCallRecorder& recorder, std::string_view name,
                              const ToolArgs& args);

/// Converts a JSON `arguments` object to string arguments.
ToolArgs args_from_json(const nlohmann::json& arguments);

/// JSON-RPC 2.0 server over newline-delimited messages.
class McpServer {
public:
    McpServer(const Toolbox& toolbox, ToolCallRecorder& recorder);

    /// Handles one message; nullopt for notifications.
    std::optional<std::string> handle_message(std::string_view line);

    /// Serves until `in` reaches EOF.
    void serve(std::istream& in, std::ostream& out);

private:
    nlohmann::json handle_request(const nlohmann::json& request);

    const Toolbox& toolbox_;
    ToolCallRecorder& recorder_;
};

namespace rpc {
inline constexpr int kParseError = -32700;
inline constexpr int kInvalidRequest = -32600;
inline constexpr int kMethodNotFound = -32601;
inline constexpr int kInvalidParams = -32602;
inline constexpr int kInternalError = -32603;
}  // namespace rpc

}  // namespace actreach
