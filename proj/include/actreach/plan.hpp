#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "actreach/smali.hpp"

namespace actreach {

/// A typed literal as written in a plan. `type` is one of boolean, int, long,
/// float, double, string, null, or skip-body (hook return only). Other type
/// names survive parsing and are rejected when a script is rendered.
struct Literal {
    std::string type;
    std::string value;  // canonical text: `false`, `42`, unescaped string contents

    bool operator==(const Literal&) const = default;
};

Literal bool_literal(bool v);
Literal int_literal(long long v);
Literal string_literal(std::string v);
Literal skip_body();

struct HookSpec {
    MethodRef method;
    Literal forced_return;
    bool external = false;  // framework/library method outside the smali tree

    bool operator==(const HookSpec&) const = default;
};

struct IntentSpec {
    std::string target;
    std::optional<std::string> action;
    std::vector<std::pair<std::string, Literal>> extras;  // keys unique

    bool operator==(const IntentSpec&) const = default;
};

/// What an instrumentation script does: force method results, build an
/// intent and (optionally) start it.
struct InstrumentationPlan {
    std::vector<HookSpec> hooks;
    std::optional<IntentSpec> intent;
    bool launch = false;

    bool operator==(const InstrumentationPlan&) const = default;
};

/// Line format, one directive per line, `#` comments:
///
///     hook   <class> <signature> <literal>|skip-body [external]
///     intent <activity>
///     action "<string>"
///     extra  <key> <type> <value>
///     launch true|false
///
/// Bare literals: true/false, null, integers, "quoted strings"; other types
/// use `type:value` (e.g. `long:5`). Throws PlanParseError.
InstrumentationPlan parse_plan(std::string_view text);

/// Canonical text; parse_plan(serialize_plan(p)) == p.
std::string serialize_plan(const InstrumentationPlan& plan);

}  // namespace actreach
