#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <thread>

#include "doctest.h"

#include "actreach/model_client.hpp"
#include "support.hpp"

using namespace actreach;
using nlohmann::json;

namespace {

Conversation conv(std::string session) {
    Conversation c;
    c.session = std::move(session);
    c.messages.push_back({Role::User, "hello", {}, {}});
    return c;
}

}  // namespace

TEST_CASE("session keys normalize their activity part") {
    CHECK(normalize_session_key("static:com.a.B") == "static:Lcom/a/B;");
    CHECK(normalize_session_key("dyn:La/B;") == "dyn:La/B;");
    CHECK(normalize_session_key("plain") == "plain");
}

TEST_CASE("scripted client replays turns per session in order") {
    ScriptedClient client(json::parse(R"({"sessions": {
        "static:com.a.B": [
            {"tool_calls": [{"name": "get_activities"}, {"name": "check_class_exists", "arguments": {"class_name": "a.B"}}]},
            {"text": ["line one", "line two"]}
        ],
        "dyn:com.a.B": [{"error": "rate limited"}]
    }})"));
    CHECK(client.remaining("static:Lcom/a/B;") == 2);

    auto t1 = client.send(conv("static:Lcom/a/B;"), {});
    CHECK_FALSE(t1.is_final());
    REQUIRE(t1.tool_calls.size() == 2);
    CHECK(t1.tool_calls[1].arguments["class_name"] == "a.B");
    CHECK(t1.tool_calls[0].id != t1.tool_calls[1].id);

    auto t2 = client.send(conv("static:com.a.B"), {});
    CHECK(t2.is_final());
    CHECK(t2.text == "line one\nline two");

    CHECK_THROWS_AS(client.send(conv("static:com.a.B"), {}), ClientError);
    CHECK_THROWS_WITH_AS(client.send(conv("dyn:com.a.B"), {}), "rate limited", ClientError);
    CHECK_THROWS_AS(client.send(conv("static:other.X"), {}), ClientError);
}

TEST_CASE("malformed replay scripts") {
    CHECK_THROWS_AS(ScriptedClient(json::array()), InputError);
    CHECK_THROWS_AS(ScriptedClient(json::parse(R"({"sessions": {"s": {}}})")), InputError);
    CHECK_THROWS_AS(ScriptedClient(json::parse(R"({"sessions": {"s": [{"nothing": 1}]}})")), InputError);
    const auto dir = testsupport::scratch_dir("replay");
    testsupport::write_text(dir / "bad.json", "{");
    CHECK_THROWS_AS(ScriptedClient::from_file(dir / "bad.json"), InputError);
    CHECK(ScriptedClient::from_file(testsupport::demo_dir() / "replay.json").remaining(
              "dyn:com.acme.notes.SdCardExportActivity") == 3);
}

TEST_CASE("chat-completions request body") {
    HttpChatClient client({"http://localhost:1/v1/chat/completions", "m1", "", 5, 0.0});
    Conversation c = conv("static:a.B");
    ChatMessage assistant{Role::Assistant, "", {{"call_1", "get_activities", json::object()}}, {}};
    c.messages.push_back(assistant);
    c.messages.push_back({Role::Tool, "a.B", {}, "call_1"});
    std::vector<ToolDescriptor> tools{{"t", "d", {{"x", "y"}}}, {"t", "dup", {}}};
    const auto body = client.build_request(c, tools);
    CHECK(body["model"] == "m1");
    REQUIRE(body["messages"].size() == 3);
    CHECK(body["messages"][1]["content"].is_null());
    CHECK(body["messages"][1]["tool_calls"][0]["function"]["arguments"] == "{}");
    CHECK(body["messages"][2]["tool_call_id"] == "call_1");
    REQUIRE(body["tools"].size() == 1);
    CHECK(body["tools"][0]["function"]["parameters"]["required"][0] == "x");
}

TEST_CASE("chat-completions response parsing") {
    auto turn = HttpChatClient::parse_response(json::parse(R"({"choices":[{"message":{"content":null,
        "tool_calls":[{"id":"c1","type":"function","function":{"name":"get_activities","arguments":"{\"a\":1}"}}]}}]})"));
    REQUIRE(turn.tool_calls.size() == 1);
    CHECK(turn.tool_calls[0].arguments["a"] == 1);
    CHECK(HttpChatClient::parse_response(json::parse(R"({"choices":[{"message":{"content":"done"}}]})")).text == "done");
    CHECK_THROWS_AS(HttpChatClient::parse_response(json::parse(R"({"choices":[]})")), ClientError);
    CHECK_THROWS_AS(HttpChatClient::parse_response(json::parse(
                        R"({"choices":[{"message":{"tool_calls":[{"function":{"name":"x","arguments":"{bad"}}]}}]})")),
                    ClientError);
    CHECK_THROWS_AS(HttpChatClient({"", "m", "", 1, 0.0}), InputError);
}

TEST_CASE("http client talks to a local endpoint") {
    httplib::Server server;
    std::string seen_auth, seen_body;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        seen_body = req.body;
        res.set_content(R"({"choices":[{"message":{"content":"pong"}}]})", "application/json");
    });
    server.Post("/fail", [](const httplib::Request&, httplib::Response& res) {
        res.status = 500;
        res.set_content("boom", "text/plain");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    const auto base = "http://127.0.0.1:" + std::to_string(port);
    HttpChatClient ok({base + "/v1/chat/completions", "m", "secret", 5, 0.0});
    CHECK(ok.send(conv("s"), {}).text == "pong");
    CHECK(seen_auth == "Bearer secret");
    CHECK(json::parse(seen_body)["messages"][0]["content"] == "hello");

    HttpChatClient bad({base + "/fail", "m", "", 5, 0.0});
    CHECK_THROWS_AS(bad.send(conv("s"), {}), ClientError);
    HttpChatClient rel({"not-a-url", "m", "", 5, 0.0});
    CHECK_THROWS_AS(rel.send(conv("s"), {}), ClientError);

    server.stop();
    th.join();

    HttpChatClient down({base + "/v1/chat/completions", "m", "", 1, 0.0});
    CHECK_THROWS_AS(down.send(conv("s"), {}), ClientError);
}
