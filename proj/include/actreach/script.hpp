#pragma once

#include <string>
#include <string_view>

#include "actreach/error.hpp"
#include "actreach/plan.hpp"

namespace actreach {

class UnsupportedLiteralType : public Error {
public:
    explicit UnsupportedLiteralType(const std::string& type)
        : Error(ErrorCategory::ModelClient, "UnsupportedLiteralType", "cannot render literal of type `" + type + "`") {}
};

/// Renders a Frida script for `plan`. The plan is embedded verbatim in a
/// leading `/* actreach-plan v1 ... */` comment, so parse_script_header
/// recovers it exactly. `target` is used when the plan has no intent.
std::string render_script(const InstrumentationPlan& plan, std::string_view target);

/// Reads the plan back out of a rendered script's header comment.
/// Throws PlanParseError when the header is missing.
InstrumentationPlan parse_script_header(std::string_view script);

}  // namespace actreach
