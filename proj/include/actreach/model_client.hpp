#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "actreach/mcp.hpp"

namespace actreach {

enum class Role { System, User, Assistant, Tool };

std::string_view to_string(Role role);

struct ToolCall {
    std::string id;
    std::string name;
    nlohmann::json arguments = nlohmann::json::object();
};

struct ChatMessage {
    Role role = Role::User;
    std::string content;
    std::vector<ToolCall> tool_calls;  // assistant turns only
    std::string tool_call_id;          // tool results only
};

/// A conversation with a session key. The key names the agent session
/// (`static:<activity>` or `dyn:<activity>`); replay clients use it to pick
/// their script.
struct Conversation {
    std::string session;
    std::vector<ChatMessage> messages;
};

/// Either final assistant text, or one or more tool-call requests.
struct ModelTurn {
    std::string text;
    std::vector<ToolCall> tool_calls;

    bool is_final() const { return tool_calls.empty(); }
};

class ModelClient {
public:
    virtual ~ModelClient() = default;
    virtual ModelTurn send(const Conversation& conversation, const std::vector<ToolDescriptor>& tools) = 0;
};

/// Replays canned turns from a JSON script:
///
///     {"sessions": {"static:com.foo.Bar": [ {"tool_calls": [{"name": "...", "arguments": {...}}]},
///                                          {"text": "..."} ], ...}}
///
/// `text` may be a string or an array of lines. A turn of the form
/// `{"error": "..."}` raises ClientError. Each session is consumed in order;
/// running out of turns is a ClientError. Thread-safe.
class ScriptedClient : public ModelClient {
public:
    explicit ScriptedClient(const nlohmann::json& script);
    static ScriptedClient from_file(const std::filesystem::path& path);

    ModelTurn send(const Conversation& conversation, const std::vector<ToolDescriptor>& tools) override;

    /// Turns still queued for `session`.
    std::size_t remaining(std::string_view session) const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::deque<nlohmann::json>> sessions_;
};

/// Normalizes the activity part of a session key (`static:com.foo.Bar` ->
/// `static:Lcom/foo/Bar;`).
std::string normalize_session_key(std::string_view key);

struct HttpClientConfig {
    std::string endpoint;  // full URL of the chat-completions route
    std::string model;
    std::string api_key;
    int timeout_seconds = 120;
    double temperature = 0.0;
};

/// OpenAI-compatible chat-completions client with function tools.
class HttpChatClient : public ModelClient {
public:
    explicit HttpChatClient(HttpClientConfig config);

    ModelTurn send(const Conversation& conversation, const std::vector<ToolDescriptor>& tools) override;

    /// Request body for `conversation` (exposed for tests).
    nlohmann::json build_request(const Conversation& conversation, const std::vector<ToolDescriptor>& tools) const;
    /// Parses a chat-completions response body.
    static ModelTurn parse_response(const nlohmann::json& body);

private:
    HttpClientConfig config_;
};

}  // namespace actreach
