#include "actreach/mcp.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "text_util.hpp"

namespace actreach {

using nlohmann::json;

namespace {

constexpr std::string_view kServerName = "actreach";
constexpr std::string_view kServerVersion = "0.1.0";
constexpr std::string_view kProtocolVersion = "2024-11-05";

const ToolParameter kClassName{"class_name", "Class name, dotted (com.foo.Bar) or descriptor (Lcom/foo/Bar;) form"};
const ToolParameter kMethodSig{"method_sig",
                               "Method signature such as onCreate(Landroid/os/Bundle;)V; a bare name matches all overloads"};
const ToolParameter kTargetActivity{"target_activity", "Activity name, dotted or descriptor form"};

std::string require(std::string_view tool, const ToolArgs& args, const std::string& name,
                    std::initializer_list<const char*> aliases = {}) {
    if (auto it = args.find(name); it != args.end()) return it->second;
    for (const char* alias : aliases) {
        if (auto it = args.find(alias); it != args.end()) return it->second;
    }
    throw MissingArgument(std::string(tool), name);
}

std::string lines_or(const std::vector<std::string>& lines, std::string_view empty) {
    if (lines.empty()) return std::string(empty);
    return detail::join(lines, "\n");
}

std::string method_label(std::string_view cls, std::string_view sig) {
    return normalize_class_name(cls) + "->" + std::string(sig);
}

}  // namespace

json ToolDescriptor::input_schema() const {
    json props = json::object();
    json required = json::array();
    for (const auto& p : parameters) {
        props[p.name] = {{"type", "string"}, {"description", p.description}};
        required.push_back(p.name);
    }
    return {{"type", "object"}, {"properties", props}, {"required", required}};
}

Toolbox::Toolbox(const AppPackage& pkg, std::size_t result_cap) : pkg_(pkg), result_cap_(result_cap) {}

const std::vector<ToolDescriptor>& Toolbox::descriptors() {
    static const std::vector<ToolDescriptor> tools = {
        {"get_activities", "List every activity declared in the app manifest.", {}},
        {"check_activity_exists", "Report whether the app declares the given activity.", {kClassName}},
        {"check_class_exists", "Report whether a class is present in the decompiled smali code.", {kClassName}},
        {"get_methods_inside_class", "List the signatures of all methods defined in a class.", {kClassName}},
        {"get_method_body", "Return the complete smali text of a method.", {kClassName, kMethodSig}},
        {"get_methods_invoked",
         "List the methods invoked from a method body (forward control-flow step).",
         {kClassName, kMethodSig}},
        {"get_caller_methods",
         "List the methods whose bodies invoke the given method (backward data/control-flow step).",
         {kClassName, kMethodSig}},
        {"get_launching_activities_and_methods",
         "Activity/method pairs that start the target activity through startActivity, found in the smali code.",
         {kTargetActivity}},
        {"get_launching_activities_and_methods",
         "Source activities and method signatures that launch the target activity, read from the component "
         "transition graph.",
         {kTargetActivity}},
    };
    return tools;
}

std::string truncate_result(std::string text, std::size_t cap) {
    if (text.size() <= cap) return text;
    const std::size_t total = text.size();
    text.resize(cap);
    text += "\n[truncated: " + std::to_string(cap) + " of " + std::to_string(total) + " bytes shown]";
    return text;
}

ToolResult Toolbox::call(std::string_view name, const ToolArgs& args) const {
    std::string text;
    if (name == "get_activities") {
        std::vector<std::string> names;
        for (const auto& a : get_activities(pkg_)) names.push_back(to_java_name(a));
        text = lines_or(names, "(no activities declared)");
    } else if (name == "check_activity_exists") {
        const auto cls = require(name, args, "class_name", {"activity_name", "target_activity"});
        const auto check = check_activity_exists(pkg_, cls);
        text = check.exists ? "true" : "false";
        if (check.missing_class) text += "\nwarning: declared in the manifest but no smali class was found";
    } else if (name == "check_class_exists") {
        const auto cls = require(name, args, "class_name");
        text = check_class_exists(pkg_.index, cls) ? "true" : "false";
    } else if (name == "get_methods_inside_class") {
        const auto cls = require(name, args, "class_name");
        const auto list = get_methods_inside_class(pkg_.index, cls);
        text = list.found ? lines_or(list.signatures, "(no methods)")
                          : "NOT_FOUND: class " + normalize_class_name(cls);
    } else if (name == "get_method_body" || name == "get_methods_invoked" || name == "get_caller_methods") {
        const auto cls = require(name, args, "class_name");
        const auto sig = require(name, args, "method_sig");
        const auto methods = resolve_methods(pkg_.index, cls, sig);
        if (methods.empty()) {
            text = "NOT_FOUND: method " + method_label(cls, sig);
        } else {
            std::vector<std::string> blocks;
            for (const auto* m : methods) {
                if (name == "get_method_body") {
                    blocks.push_back(m->body_text());
                    continue;
                }
                const auto refs = name == "get_methods_invoked" ? get_methods_invoked(pkg_.index, m->ref())
                                                                : get_caller_methods(pkg_.index, m->ref());
                std::vector<std::string> lines;
                for (const auto& r : refs) lines.push_back(r.str());
                auto body = lines_or(lines, "(none)");
                blocks.push_back(methods.size() > 1 ? "# " + m->ref().str() + "\n" + body : body);
            }
            text = detail::join(blocks, "\n\n");
        }
    } else if (name == "get_launching_activities_and_methods") {
        const auto target = require(name, args, "target_activity", {"activity_name", "class_name"});
        std::vector<std::string> lines;
        for (const auto& [activity, method] : get_launching_activities_and_methods(pkg_.ctg, target))
            lines.push_back(activity + "\t" + method.str());
        text = lines_or(lines, "(none: no launch site starts " + normalize_class_name(target) + ")");
    } else {
        throw UnknownTool(std::string(name));
    }
    return {truncate_result(std::move(text), result_cap_), false};
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

json to_json(const ToolCallRecord& r) {
    return {{"seq", r.seq}, {"tool", r.tool_name}, {"args", r.args}, {"result", r.result}, {"timestamp", r.timestamp}};
}

ToolCallRecord record_from_json(const json& j) {
    ToolCallRecord r;
    r.seq = j.at("seq").get<std::uint64_t>();
    r.tool_name = j.at("tool").get<std::string>();
    r.args = j.at("args").get<ToolArgs>();
    r.result = j.at("result").get<std::string>();
    r.timestamp = j.value("timestamp", "");
    return r;
}

std::vector<ToolCallRecord> parse_record_lines(std::string_view text) {
    std::vector<ToolCallRecord> out;
    std::size_t line_no = 0;
    for (const auto& line : detail::split_lines(text)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        try {
            out.push_back(record_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw InputError("RecordFormat", "record line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<ToolCallRecord> read_record_file(const std::filesystem::path& path) {
    return parse_record_lines(detail::read_file(path));
}

RecordClock logical_clock() {
    return [](std::uint64_t seq) { return "logical:" + std::to_string(seq); };
}

RecordClock wall_clock() {
    return [](std::uint64_t) {
        const auto now = std::chrono::system_clock::now();
        const auto t = std::chrono::system_clock::to_time_t(now);
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
        std::tm tm{};
        gmtime_r(&t, &tm);
        std::ostringstream ss;
        ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << ms << 'Z';
        return ss.str();
    };
}

ToolCallRecorder::ToolCallRecorder(RecordClock clock) : clock_(std::move(clock)) {}

ToolCallRecorder::ToolCallRecorder(const std::filesystem::path& file, RecordClock clock) : clock_(std::move(clock)) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    sink_ = std::make_unique<std::ofstream>(file, std::ios::binary | std::ios::trunc);
    if (!*sink_) throw InputError("IOError", "cannot write " + file.string());
}

const ToolCallRecord& ToolCallRecorder::append(std::string tool_name, ToolArgs args, std::string result) {
    ToolCallRecord r;
    r.seq = records_.size() + 1;
    r.tool_name = std::move(tool_name);
    r.args = std::move(args);
    r.result = std::move(result);
    r.timestamp = clock_(r.seq);
    if (sink_) {
        *sink_ << to_json(r).dump() << '\n';
        sink_->flush();
    }
    records_.push_back(std::move(r));
    return records_.back();
}

ToolResult dispatch_tool_call(const Toolbox& toolbox, ToolCallRecorder& recorder, std::string_view name,
                              const ToolArgs& args) {
    try {
        auto result = toolbox.call(name, args);
        recorder.append(std::string(name), args, result.text);
        return result;
    } catch (const Error& e) {
        recorder.append(std::string(name), args, std::string("ERROR: ") + e.what());
        throw;
    }
}

ToolArgs args_from_json(const json& arguments) {
    ToolArgs args;
    if (!arguments.is_object()) return args;
    for (const auto& [key, value] : arguments.items()) {
        args[key] = value.is_string() ? value.get<std::string>() : value.dump();
    }
    return args;
}

// ---------------------------------------------------------------------------
// JSON-RPC
// ---------------------------------------------------------------------------

namespace {

json error_response(const json& id, int code, const std::string& message) {
    return {{"jsonrpc", "2.0"}, {"id", id}, {"error", {{"code", code}, {"message", message}}}};
}

json result_response(const json& id, json result) {
    return {{"jsonrpc", "2.0"}, {"id", id}, {"result", std::move(result)}};
}

bool valid_id(const json& id) { return id.is_string() || id.is_number() || id.is_null(); }

}  // namespace

McpServer::McpServer(const Toolbox& toolbox, ToolCallRecorder& recorder) : toolbox_(toolbox), recorder_(recorder) {}

std::optional<std::string> McpServer::handle_message(std::string_view line) {
    json request;
    try {
        request = json::parse(line);
    } catch (const json::parse_error& e) {
        return error_response(nullptr, rpc::kParseError, std::string("parse error: ") + e.what()).dump();
    }
    const bool has_id = request.is_object() && request.contains("id");
    json response = handle_request(request);
    if (!has_id && !response.contains("error")) return std::nullopt;
    if (!has_id && request.is_object() && request.contains("method")) return std::nullopt;
    return response.dump();
}

json McpServer::handle_request(const json& request) {
    if (!request.is_object()) return error_response(nullptr, rpc::kInvalidRequest, "request must be an object");
    const json id = request.contains("id") && valid_id(request["id"]) ? request["id"] : json(nullptr);
    if (request.value("jsonrpc", "") != "2.0")
        return error_response(id, rpc::kInvalidRequest, "jsonrpc must be \"2.0\"");
    if (request.contains("id") && !valid_id(request["id"]))
        return error_response(nullptr, rpc::kInvalidRequest, "invalid id");
    if (!request.contains("method") || !request["method"].is_string())
        return error_response(id, rpc::kInvalidRequest, "method must be a string");

    const auto method = request["method"].get<std::string>();
    const json params = request.value("params", json::object());

    if (method == "initialize") {
        return result_response(id, {{"protocolVersion", params.value("protocolVersion", std::string(kProtocolVersion))},
                                    {"capabilities", {{"tools", {{"listChanged", false}}}}},
                                    {"serverInfo", {{"name", kServerName}, {"version", kServerVersion}}}});
    }
    if (method == "ping" || method.starts_with("notifications/")) return result_response(id, json::object());
    if (method == "tools/list") {
        json tools = json::array();
        for (const auto& d : Toolbox::descriptors()) {
            tools.push_back({{"name", d.name}, {"description", d.description}, {"inputSchema", d.input_schema()}});
        }
        return result_response(id, {{"tools", tools}});
    }
    if (method == "tools/call") {
        if (!params.is_object() || !params.contains("name") || !params["name"].is_string()) {
            recorder_.append("", {}, "ERROR: tools/call without a tool name");
            return error_response(id, rpc::kInvalidParams, "tools/call requires params.name");
        }
        const auto name = params["name"].get<std::string>();
        const auto args = args_from_json(params.value("arguments", json::object()));
        try {
            const auto result = dispatch_tool_call(toolbox_, recorder_, name, args);
            return result_response(id, {{"content", json::array({{{"type", "text"}, {"text", result.text}}})},
                                        {"isError", result.is_error}});
        } catch (const UnknownTool& e) {
            return error_response(id, rpc::kMethodNotFound, e.what());
        } catch (const MissingArgument& e) {
            return error_response(id, rpc::kInvalidParams, e.what());
        } catch (const std::exception& e) {
            return error_response(id, rpc::kInternalError, e.what());
        }
    }
    return error_response(id, rpc::kMethodNotFound, "method not found: " + method);
}

void McpServer::serve(std::istream& in, std::ostream& out) {
    std::string line;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        try {
            if (auto response = handle_message(line)) {
                out << *response << '\n';
                out.flush();
            }
        } catch (const std::exception& e) {
            std::cerr << "mcp: " << e.what() << '\n';
        }
    }
}

}  // namespace actreach
