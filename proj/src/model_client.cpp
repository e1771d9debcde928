#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "actreach/model_client.hpp"

#include "actreach/error.hpp"
#include "actreach/smali.hpp"
#include "text_util.hpp"

namespace actreach {

using nlohmann::json;

std::string_view to_string(Role role) {
    switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    case Role::Tool: return "tool";
    }
    return "user";
}

std::string normalize_session_key(std::string_view key) {
    const auto colon = key.find(':');
    if (colon == std::string_view::npos) return std::string(key);
    return std::string(key.substr(0, colon + 1)) + normalize_class_name(key.substr(colon + 1));
}

// ---------------------------------------------------------------------------
// ScriptedClient
// ---------------------------------------------------------------------------

ScriptedClient::ScriptedClient(const json& script) {
    if (!script.is_object() || !script.contains("sessions") || !script["sessions"].is_object())
        throw InputError("ReplayFormat", "replay script needs a `sessions` object");
    for (const auto& [key, turns] : script["sessions"].items()) {
        if (!turns.is_array()) throw InputError("ReplayFormat", "session `" + key + "` must be an array of turns");
        auto& queue = sessions_[normalize_session_key(key)];
        for (const auto& t : turns) {
            if (!t.is_object() || !(t.contains("text") || t.contains("tool_calls") || t.contains("error")))
                throw InputError("ReplayFormat", "session `" + key + "`: each turn needs text, tool_calls or error");
            queue.push_back(t);
        }
    }
}

ScriptedClient ScriptedClient::from_file(const std::filesystem::path& path) {
    try {
        return ScriptedClient(json::parse(detail::read_file(path)));
    } catch (const json::parse_error& e) {
        throw InputError("ReplayFormat", path.string() + ": " + e.what());
    }
}

std::size_t ScriptedClient::remaining(std::string_view session) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(normalize_session_key(session));
    return it == sessions_.end() ? 0 : it->second.size();
}

ModelTurn ScriptedClient::send(const Conversation& conversation, const std::vector<ToolDescriptor>&) {
    json turn;
    {
        std::lock_guard lock(mutex_);
        const auto key = normalize_session_key(conversation.session);
        auto it = sessions_.find(key);
        if (it == sessions_.end() || it->second.empty())
            throw ClientError("replay script has no turn left for session " + key);
        turn = std::move(it->second.front());
        it->second.pop_front();
    }
    if (turn.contains("error")) throw ClientError(turn["error"].get<std::string>());

    ModelTurn out;
    if (turn.contains("text")) {
        const auto& text = turn["text"];
        if (text.is_array()) {
            std::vector<std::string> lines;
            for (const auto& l : text) lines.push_back(l.get<std::string>());
            out.text = detail::join(lines, "\n");
        } else {
            out.text = text.get<std::string>();
        }
    }
    if (turn.contains("tool_calls")) {
        std::size_t n = 0;
        for (const auto& c : turn["tool_calls"]) {
            ToolCall call;
            call.id = c.value("id", "call_" + std::to_string(conversation.messages.size()) + "_" + std::to_string(n++));
            call.name = c.at("name").get<std::string>();
            call.arguments = c.value("arguments", json::object());
            out.tool_calls.push_back(std::move(call));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// HttpChatClient
// ---------------------------------------------------------------------------

HttpChatClient::HttpChatClient(HttpClientConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw InputError("ConfigError", "model endpoint is empty");
}

json HttpChatClient::build_request(const Conversation& conversation, const std::vector<ToolDescriptor>& tools) const {
    json messages = json::array();
    for (const auto& m : conversation.messages) {
        json msg = {{"role", to_string(m.role)}};
        if (m.role == Role::Assistant && !m.tool_calls.empty()) {
            msg["content"] = m.content.empty() ? json(nullptr) : json(m.content);
            json calls = json::array();
            for (const auto& c : m.tool_calls) {
                calls.push_back({{"id", c.id},
                                 {"type", "function"},
                                 {"function", {{"name", c.name}, {"arguments", c.arguments.dump()}}}});
            }
            msg["tool_calls"] = std::move(calls);
        } else {
            msg["content"] = m.content;
        }
        if (m.role == Role::Tool) msg["tool_call_id"] = m.tool_call_id;
        messages.push_back(std::move(msg));
    }
    json body = {{"model", config_.model}, {"messages", messages}, {"temperature", config_.temperature}};
    if (!tools.empty()) {
        json list = json::array();
        std::set<std::string> seen;
        for (const auto& t : tools) {
            // Function names must be unique on the wire.
            if (!seen.insert(t.name).second) continue;
            list.push_back({{"type", "function"},
                            {"function", {{"name", t.name}, {"description", t.description}, {"parameters", t.input_schema()}}}});
        }
        body["tools"] = std::move(list);
    }
    return body;
}

ModelTurn HttpChatClient::parse_response(const json& body) {
    try {
        const auto& message = body.at("choices").at(0).at("message");
        ModelTurn turn;
        if (message.contains("content") && message["content"].is_string()) turn.text = message["content"].get<std::string>();
        if (message.contains("tool_calls") && message["tool_calls"].is_array()) {
            for (const auto& c : message["tool_calls"]) {
                ToolCall call;
                call.id = c.value("id", "");
                call.name = c.at("function").at("name").get<std::string>();
                const auto& args = c.at("function").value("arguments", json("{}"));
                call.arguments = args.is_string() ? json::parse(args.get<std::string>()) : args;
                turn.tool_calls.push_back(std::move(call));
            }
        }
        return turn;
    } catch (const json::exception& e) {
        throw ClientError(std::string("unexpected chat-completions response: ") + e.what());
    }
}

ModelTurn HttpChatClient::send(const Conversation& conversation, const std::vector<ToolDescriptor>& tools) {
    // Split "scheme://host[:port]/path".
    const auto& url = config_.endpoint;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ClientError("endpoint must be an absolute URL: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_write_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    const auto request = build_request(conversation, tools).dump();
    auto res = client.Post(path, headers, request, "application/json");
    if (!res) throw ClientError("request to " + origin + path + " failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
        throw ClientError("model endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 512));
    try {
        return parse_response(json::parse(res->body));
    } catch (const json::parse_error& e) {
        throw ClientError(std::string("model endpoint returned invalid JSON: ") + e.what());
    }
}

}  // namespace actreach
