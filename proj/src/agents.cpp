#include "actreach/agents.hpp"

#include <algorithm>
#include <cctype>

#include "actreach/error.hpp"
#include "actreach/script.hpp"
#include "text_util.hpp"

namespace actreach {

using nlohmann::json;

namespace {

constexpr std::string_view kNotReported = "(not reported)";

// Strips markdown decoration from a candidate heading line.
std::string heading_text(std::string_view line) {
    auto s = detail::trim(line);
    while (!s.empty() && (s.front() == '#' || s.front() == '*' || s.front() == '_' || s.front() == ' '))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ':' || s.back() == '*' || s.back() == '_' || s.back() == ' '))
        s.remove_suffix(1);
    return detail::lower(s);
}

bool is_fence(std::string_view line) { return detail::trim(line).starts_with("```"); }

enum class Section { None, Forward, Backward, Guideline };

// nullopt when `line` is not a heading at all.
std::optional<Section> classify_heading(std::string_view line) {
    const auto t = detail::trim(line);
    const bool marked = t.starts_with('#') || (t.starts_with("**") && (t.ends_with("**") || t.ends_with("**:")));
    auto text = heading_text(t);
    const bool forward = text.find("forward analysis") != std::string::npos;
    const bool backward = text.find("backward analysis") != std::string::npos;
    if (marked) return forward ? Section::Forward : backward ? Section::Backward : Section::Guideline;
    // Unmarked: only a bare "[Step N:] Forward Analysis" style line.
    if (text.starts_with("step ")) {
        const auto colon = text.find(':');
        if (colon != std::string::npos) text = std::string(detail::trim(std::string_view(text).substr(colon + 1)));
    }
    if (text == "forward analysis") return Section::Forward;
    if (text == "backward analysis") return Section::Backward;
    if (text == "launch guideline") return Section::Guideline;
    return std::nullopt;
}

std::string finish(const std::vector<std::string>& lines) {
    return std::string(detail::trim(detail::join(lines, "\n")));
}

std::string args_text(const ToolArgs& args) { return json(args).dump(); }

ChatMessage user_message(std::string content) { return {Role::User, std::move(content), {}, {}}; }

ChatMessage tool_message(const ToolCall& call, std::string content) {
    return {Role::Tool, std::move(content), {}, call.id};
}

ChatMessage assistant_message(const ModelTurn& turn) { return {Role::Assistant, turn.text, turn.tool_calls, {}}; }

ModelTurn send_with_transcript(ModelClient& client, const Conversation& conversation,
                               const std::vector<ToolDescriptor>& tools) {
    try {
        return client.send(conversation, tools);
    } catch (const ClientError& e) {
        throw ClientError(e.what(), render_transcript(conversation));
    }
}

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

const char* kPlanGrammar =
    "PLAN grammar, one directive per line:\n"
    "  hook <class> <method signature> <return literal>|skip-body [external]\n"
    "  intent <activity class>\n"
    "  action \"<intent action>\"\n"
    "  extra <key> <type> <value>      (type: string, int, long, boolean, float, double)\n"
    "  launch true|false\n"
    "Literals: true, false, null, integers, \"quoted strings\", or type:value (for example long:5).\n"
    "Mark hooks on framework or library methods that are not in the app's smali as external.\n";

}  // namespace

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

json to_json(const ActivationConditionReport& r) {
    return {{"target", r.target},
            {"forward_findings", r.forward_findings},
            {"backward_findings", r.backward_findings},
            {"launch_guideline", r.launch_guideline},
            {"final_text", r.final_text},
            {"episodic_ref", r.episodic_ref},
            {"tool_call_count", r.tool_call_count},
            {"partial", r.partial}};
}

ActivationConditionReport report_from_json(const json& j) {
    try {
        ActivationConditionReport r;
        r.target = j.at("target").get<std::string>();
        r.forward_findings = j.at("forward_findings").get<std::string>();
        r.backward_findings = j.at("backward_findings").get<std::string>();
        r.launch_guideline = j.at("launch_guideline").get<std::string>();
        r.final_text = j.value("final_text", "");
        r.episodic_ref = j.value("episodic_ref", "");
        r.tool_call_count = j.value("tool_call_count", std::size_t{0});
        r.partial = j.value("partial", false);
        return r;
    } catch (const json::exception& e) {
        throw InputError("ReportFormat", std::string("bad activation-condition report: ") + e.what());
    }
}

ReportSections parse_report_sections(std::string_view text) {
    std::vector<std::string> preamble, forward, backward, guideline;
    bool saw_forward = false, saw_backward = false, saw_guideline = false;
    Section current = Section::None;
    bool in_fence = false;
    for (const auto& line : detail::split_lines(text)) {
        if (is_fence(line)) in_fence = !in_fence;
        if (!in_fence) {
            if (const auto h = classify_heading(line)) {
                current = *h;
                saw_forward |= current == Section::Forward;
                saw_backward |= current == Section::Backward;
                saw_guideline |= current == Section::Guideline;
                continue;
            }
        }
        switch (current) {
        case Section::None: preamble.push_back(line); break;
        case Section::Forward: forward.push_back(line); break;
        case Section::Backward: backward.push_back(line); break;
        case Section::Guideline: guideline.push_back(line); break;
        }
    }
    ReportSections out;
    out.forward = finish(forward);
    out.backward = finish(backward);
    out.guideline = finish(guideline);
    if (!saw_forward || out.forward.empty()) out.forward = kNotReported;
    if (!saw_backward || out.backward.empty()) out.backward = kNotReported;
    if (!saw_guideline || out.guideline.empty()) {
        out.guideline = finish(preamble);
        if (out.guideline.empty() && !saw_forward && !saw_backward) out.guideline = std::string(detail::trim(text));
        if (out.guideline.empty()) out.guideline = kNotReported;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Static agent
// ---------------------------------------------------------------------------

Conversation build_static_prompt(const AppPackage& pkg, std::string_view target) {
    const auto desc = normalize_class_name(target);
    std::string prompt;
    prompt += "You are examining the Android application " + pkg.package_name +
              ". Its smali code, manifest and component transition graph are only visible through the tools "
              "offered with this message. Class names may be given as com.example.Foo or Lcom/example/Foo;.\n\n";
    prompt +=
        "Find out what has to hold for the target activity below to start and stay open.\n"
        "\n"
        "Step 1: Forward Analysis\n"
        "Start from the target's onCreate, onStart and onResume. Follow the methods they call and note every "
        "check that finishes the activity, redirects away from it or crashes it: required intent extras, "
        "preference or feature flags, hardware and storage checks, data fetched from a server.\n"
        "\n"
        "Step 2: Backward Analysis\n"
        "Locate the startActivity call sites that launch the target (get_launching_activities_and_methods, "
        "get_caller_methods, get_method_body). For each one, note the intent action and extras it sets and the "
        "branch conditions guarding the call.\n"
        "\n"
        "Step 3: Launching the target activity\n"
        "Combine both results into a concrete recipe: which methods must return which values, and which intent "
        "fields must be present, for the target to launch directly.\n"
        "\n"
        "When you have enough information, stop calling tools and answer with three sections headed "
        "`### Forward Analysis`, `### Backward Analysis` and `### Launch Guideline`.\n\n";
    prompt += "Target activity: " + to_java_name(desc) + "\n";

    Conversation c;
    c.session = "static:" + desc;
    c.messages.push_back(user_message(std::move(prompt)));
    return c;
}

ActivationConditionReport run_static_agent(ModelClient& client, const Toolbox& toolbox, ToolCallRecorder& recorder,
                                           const AppPackage& pkg, std::string_view target,
                                           const StaticAgentOptions& options) {
    ActivationConditionReport report;
    report.target = normalize_class_name(target);
    report.episodic_ref = options.episodic_ref;

    auto conversation = build_static_prompt(pkg, target);
    const auto& tools = Toolbox::descriptors();
    std::size_t executed = 0;
    std::string final_text;
    while (true) {
        const auto turn = send_with_transcript(client, conversation, tools);
        if (turn.is_final()) {
            final_text = turn.text;
            break;
        }
        if (executed >= options.tool_call_budget) {
            report.partial = true;
            final_text = turn.text;
            break;
        }
        conversation.messages.push_back(assistant_message(turn));
        for (const auto& call : turn.tool_calls) {
            if (executed >= options.tool_call_budget) {
                report.partial = true;
                break;
            }
            ++executed;
            std::string result;
            ToolArgs args;
            try {
                args = args_from_json(call.arguments);
            } catch (const Error& e) {
                result = std::string("ERROR: ") + e.what();
                recorder.append(call.name, {}, result);
                conversation.messages.push_back(tool_message(call, result));
                continue;
            }
            try {
                result = dispatch_tool_call(toolbox, recorder, call.name, args).text;
            } catch (const Error& e) {
                result = std::string("ERROR: ") + e.what();
            }
            conversation.messages.push_back(tool_message(call, std::move(result)));
        }
        if (report.partial) break;
    }

    const auto sections = parse_report_sections(final_text);
    report.forward_findings = sections.forward;
    report.backward_findings = sections.backward;
    report.launch_guideline = sections.guideline;
    report.final_text = final_text;
    report.tool_call_count = executed;
    return report;
}

// ---------------------------------------------------------------------------
// Episodic memory
// ---------------------------------------------------------------------------

EpisodicMemory EpisodicMemory::load(const std::filesystem::path& path, std::string target) {
    return {normalize_class_name(target), read_record_file(path)};
}

std::string retrieve_tool_call_result(const EpisodicMemory& memory, std::string_view seq_or_name) {
    const auto key = detail::trim(seq_or_name);
    if (all_digits(key)) {
        const auto seq = std::stoull(std::string(key));
        for (const auto& r : memory.records) {
            if (r.seq == seq) return r.result;
        }
        throw InputError("NotFound", "no tool call with seq " + std::string(key));
    }
    std::vector<std::string> blocks;
    for (const auto& r : memory.records) {
        if (r.tool_name == key)
            blocks.push_back("[seq " + std::to_string(r.seq) + "] " + r.tool_name + " " + args_text(r.args) + "\n" +
                             r.result);
    }
    if (blocks.empty()) throw InputError("NotFound", "no tool call named " + std::string(key));
    return detail::join(blocks, "\n\n");
}

const ToolDescriptor& retrieve_tool_descriptor() {
    static const ToolDescriptor d{
        "retrieve_tool_call_result",
        "Return the full result of an earlier static-analysis tool call, by sequence number or by tool name.",
        {{"seq_or_name", "Sequence number from the tool call history, or a tool name"}}};
    return d;
}

// ---------------------------------------------------------------------------
// Dynamic instrumentation agent
// ---------------------------------------------------------------------------

std::string_view to_string(DynPhase phase) { return phase == DynPhase::Generate ? "Generate" : "Refine"; }

json to_json(const InstrumentationArtifact& a) {
    return {{"target", a.target},
            {"iteration", a.iteration},
            {"phase", std::string(to_string(a.phase))},
            {"pseudocode", a.pseudocode},
            {"plan", serialize_plan(a.plan)},
            {"model_script", a.model_script},
            {"script_text", a.script_text}};
}

InstrumentationArtifact artifact_from_json(const json& j) {
    try {
        InstrumentationArtifact a;
        a.target = j.at("target").get<std::string>();
        a.iteration = j.at("iteration").get<int>();
        const auto phase = j.at("phase").get<std::string>();
        if (phase != "Generate" && phase != "Refine") throw InputError("ArtifactFormat", "unknown phase " + phase);
        a.phase = phase == "Generate" ? DynPhase::Generate : DynPhase::Refine;
        a.pseudocode = j.value("pseudocode", "");
        a.plan = parse_plan(j.at("plan").get<std::string>());
        a.model_script = j.value("model_script", "");
        a.script_text = j.value("script_text", "");
        return a;
    } catch (const json::exception& e) {
        throw InputError("ArtifactFormat", std::string("bad instrumentation artifact: ") + e.what());
    }
}

Conversation build_dyn_prompt(const ActivationConditionReport& report, const EpisodicMemory& episodic, DynPhase phase,
                              const std::optional<std::string>& current_code,
                              const std::optional<std::string>& feedback) {
    if (phase == DynPhase::Refine && (!current_code || !feedback))
        throw InputError("InvalidArgument", "Refine prompt needs the current code and the device feedback");

    std::string prompt;
    prompt += "You write Frida instrumentation that gets an Android activity launched.\n\n";
    prompt += "state['phase'] = '" + std::string(to_string(phase)) + "'\n\n";
    prompt +=
        "If state['phase'] is Generate: work from the activation conditions at the end of this message. Decide "
        "which methods to hook and what they must return, and which intent (action, extras) starts the target.\n"
        "If state['phase'] is Refine: compare the current code with the device feedback, find why it failed and "
        "correct it.\n\n";
    prompt +=
        "Tool: retrieve_tool_call_result(seq_or_name) returns the full result of any call in the history below. "
        "Use it when the summary is not enough.\n\n";
    prompt += "Before writing the script, describe its logic in pseudo-code. Reply with three sections, in this order, "
              "each a heading followed by one fenced block:\n"
              "### PSEUDOCODE\n### PLAN\n### SCRIPT\n\n";
    prompt += kPlanGrammar;
    prompt += "\n";

    prompt += "Tool call history:\n";
    if (episodic.records.empty()) {
        prompt += "no tool calls recorded\n";
    } else {
        for (const auto& r : episodic.records)
            prompt += std::to_string(r.seq) + ": name: " + r.tool_name + ", args: " + args_text(r.args) + "\n";
    }
    prompt += "\n";

    prompt += "Activation conditions for " + to_java_name(report.target) + ":\n";
    if (!report.final_text.empty()) {
        prompt += report.final_text;
    } else {
        prompt += "### Forward Analysis\n" + report.forward_findings + "\n### Backward Analysis\n" +
                  report.backward_findings + "\n### Launch Guideline\n" + report.launch_guideline;
    }
    if (report.partial) prompt += "\n(The static analysis stopped at its tool-call budget; findings may be incomplete.)";
    prompt += "\n";

    if (phase == DynPhase::Refine) {
        prompt += "\nCurrent code:\n```\n" + *current_code;
        if (!current_code->ends_with('\n')) prompt += "\n";
        prompt += "```\n\nFeedback:\n" + *feedback + "\n";
    }

    Conversation c;
    c.session = "dyn:" + report.target;
    c.messages.push_back(user_message(std::move(prompt)));
    return c;
}

DynResponse parse_dyn_response(std::string_view text) {
    DynResponse out;
    const auto lines = detail::split_lines(text);
    std::optional<std::string>* current = nullptr;
    std::vector<std::string> body;
    auto flush = [&] {
        if (!current) return;
        // First fenced block wins; otherwise the raw body.
        std::vector<std::string> fenced;
        bool open = false, done = false, any = false;
        for (const auto& l : body) {
            if (done) break;
            if (is_fence(l)) {
                if (open) done = true;
                open = !open;
                any = true;
                continue;
            }
            if (open) fenced.push_back(l);
        }
        auto content = any ? detail::join(fenced, "\n") : finish(body);
        if (any && !content.empty()) content += "\n";
        if (!detail::trim(content).empty()) *current = std::move(content);
        body.clear();
    };
    bool in_fence = false;
    for (const auto& line : lines) {
        if (!in_fence) {
            const auto h = heading_text(line);
            std::optional<std::string>* next = nullptr;
            if (h == "pseudocode" || h == "pseudo-code") next = &out.pseudocode;
            if (h == "plan") next = &out.plan;
            if (h == "script") next = &out.script;
            if (next) {
                flush();
                current = next;
                continue;
            }
        }
        if (is_fence(line)) in_fence = !in_fence;
        if (current) body.push_back(line);
    }
    flush();
    return out;
}

InstrumentationArtifact run_dyn_agent(ModelClient& client, const EpisodicMemory& episodic,
                                      const ActivationConditionReport& report,
                                      const std::optional<InstrumentationArtifact>& prior,
                                      const std::optional<std::string>& feedback, const DynAgentOptions& options) {
    const auto phase = prior ? DynPhase::Refine : DynPhase::Generate;
    std::optional<std::string> code;
    if (prior) code = prior->script_text;
    auto conversation = build_dyn_prompt(report, episodic, phase, code, feedback);
    const std::vector<ToolDescriptor> tools{retrieve_tool_descriptor()};

    std::size_t executed = 0;
    bool reasked = false;
    while (true) {
        const auto turn = send_with_transcript(client, conversation, tools);
        conversation.messages.push_back(assistant_message(turn));
        if (!turn.is_final()) {
            if (executed >= options.tool_call_budget)
                throw MalformedResponse("instrumentation session for " + report.target + " exceeded its tool-call budget");
            for (const auto& call : turn.tool_calls) {
                ++executed;
                std::string result;
                if (call.name != retrieve_tool_descriptor().name) {
                    result = "ERROR: unknown tool: " + call.name;
                } else {
                    std::string key;
                    for (const auto* name : {"seq_or_name", "seq", "name"}) {
                        if (!call.arguments.is_object() || !call.arguments.contains(name)) continue;
                        const auto& v = call.arguments[name];
                        key = v.is_string() ? v.get<std::string>() : v.dump();
                        break;
                    }
                    try {
                        result = retrieve_tool_call_result(episodic, key);
                    } catch (const Error& e) {
                        result = std::string("NOT_FOUND: ") + e.what();
                    }
                }
                conversation.messages.push_back(tool_message(call, std::move(result)));
            }
            continue;
        }

        const auto parsed = parse_dyn_response(turn.text);
        std::vector<std::string> missing;
        if (!parsed.pseudocode) missing.push_back("PSEUDOCODE");
        if (!parsed.plan) missing.push_back("PLAN");
        if (!parsed.script) missing.push_back("SCRIPT");
        if (!missing.empty()) {
            if (reasked)
                throw MalformedResponse("response for " + report.target + " lacks section(s): " +
                                        detail::join(missing, ", "));
            reasked = true;
            conversation.messages.push_back(user_message(
                "Your reply is missing: " + detail::join(missing, ", ") +
                ". Reply again with all three sections (### PSEUDOCODE, ### PLAN, ### SCRIPT), each with one fenced block."));
            continue;
        }

        InstrumentationArtifact a;
        a.target = report.target;
        a.iteration = prior ? prior->iteration + 1 : 1;
        a.phase = phase;
        a.pseudocode = *parsed.pseudocode;
        a.plan = parse_plan(*parsed.plan);
        a.model_script = *parsed.script;
        a.script_text = render_script(a.plan, a.target);
        return a;
    }
}

std::string render_transcript(const Conversation& conversation) {
    std::string out = "session " + conversation.session + "\n";
    for (const auto& m : conversation.messages) {
        out += "--- " + std::string(to_string(m.role));
        if (!m.tool_call_id.empty()) out += " (" + m.tool_call_id + ")";
        out += "\n" + m.content;
        if (!m.content.empty() && !m.content.ends_with('\n')) out += "\n";
        for (const auto& c : m.tool_calls) out += "call " + c.name + " " + c.arguments.dump() + "\n";
    }
    return out;
}

}  // namespace actreach
