#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "actreach/app_package.hpp"
#include "actreach/mcp.hpp"
#include "actreach/model_client.hpp"
#include "actreach/plan.hpp"

namespace actreach {

/// What the static agent concluded about one target.
struct ActivationConditionReport {
    std::string target;
    std::string forward_findings;
    std::string backward_findings;
    std::string launch_guideline;
    std::string final_text;  // unparsed final response
    std::string episodic_ref;
    std::size_t tool_call_count = 0;
    bool partial = false;  // tool-call budget ran out

    bool operator==(const ActivationConditionReport&) const = default;
};

nlohmann::json to_json(const ActivationConditionReport& report);
ActivationConditionReport report_from_json(const nlohmann::json& j);

struct ReportSections {
    std::string forward;
    std::string backward;
    std::string guideline;
};

/// Splits a final response by markdown-ish headings. Headings mentioning
/// "forward analysis" / "backward analysis" fill those sections; any other
/// heading goes to the guideline. Missing sections read "(not reported)",
/// except the guideline, which falls back to the preamble or the whole text.
ReportSections parse_report_sections(std::string_view text);

inline constexpr std::size_t kDefaultToolCallBudget = 40;

/// Session key and seed messages for the static agent.
Conversation build_static_prompt(const AppPackage& pkg, std::string_view target);

struct StaticAgentOptions {
    std::size_t tool_call_budget = kDefaultToolCallBudget;
    std::string episodic_ref;  // stored in the report as is
};

/// Tool loop until the client answers with text or the budget is spent.
/// Every executed call goes through `recorder`. ClientError is rethrown with
/// the session transcript attached.
ActivationConditionReport run_static_agent(ModelClient& client, const Toolbox& toolbox, ToolCallRecorder& recorder,
                                           const AppPackage& pkg, std::string_view target,
                                           const StaticAgentOptions& options = {});

struct EpisodicMemory {
    std::string target;
    std::vector<ToolCallRecord> records;

    static EpisodicMemory load(const std::filesystem::path& path, std::string target);
};

/// By sequence number (all digits) or by tool name. A name matching several
/// records returns each one under a `[seq N] name` line, in order.
/// Throws InputError "NotFound".
std::string retrieve_tool_call_result(const EpisodicMemory& memory, std::string_view seq_or_name);

const ToolDescriptor& retrieve_tool_descriptor();

enum class DynPhase { Generate, Refine };

std::string_view to_string(DynPhase phase);

/// One generated instrumentation.
struct InstrumentationArtifact {
    std::string target;
    int iteration = 1;
    DynPhase phase = DynPhase::Generate;
    std::string pseudocode;
    InstrumentationPlan plan;
    std::string model_script;  // SCRIPT section as the model wrote it
    std::string script_text;   // rendered from `plan`
};

nlohmann::json to_json(const InstrumentationArtifact& artifact);
InstrumentationArtifact artifact_from_json(const nlohmann::json& j);

/// Refine requires both `current_code` and `feedback`.
Conversation build_dyn_prompt(const ActivationConditionReport& report, const EpisodicMemory& episodic, DynPhase phase,
                              const std::optional<std::string>& current_code = std::nullopt,
                              const std::optional<std::string>& feedback = std::nullopt);

struct DynResponse {
    std::optional<std::string> pseudocode;
    std::optional<std::string> plan;
    std::optional<std::string> script;
};

/// Finds the PSEUDOCODE / PLAN / SCRIPT sections. A section's body is its
/// first fenced block, or the raw text up to the next section heading.
DynResponse parse_dyn_response(std::string_view text);

struct DynAgentOptions {
    std::size_t tool_call_budget = kDefaultToolCallBudget;
};

/// Generate when `prior` is empty, Refine otherwise. A response missing a
/// section is re-asked once, then MalformedResponse.
InstrumentationArtifact run_dyn_agent(ModelClient& client, const EpisodicMemory& episodic,
                                      const ActivationConditionReport& report,
                                      const std::optional<InstrumentationArtifact>& prior = std::nullopt,
                                      const std::optional<std::string>& feedback = std::nullopt,
                                      const DynAgentOptions& options = {});

/// Plain-text dump of a conversation.
std::string render_transcript(const Conversation& conversation);

}  // namespace actreach
