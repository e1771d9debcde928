#include "actreach/plan.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "actreach/error.hpp"
#include "text_util.hpp"

namespace actreach {

namespace {

struct Token {
    std::string text;
    bool quoted = false;
};

std::vector<Token> tokenize(std::string_view line, std::size_t line_no) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        const char c = line[i];
        if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
            continue;
        }
        if (c == '#') break;
        if (c == '"') {
            Token t{"", true};
            ++i;
            bool closed = false;
            while (i < line.size()) {
                char d = line[i++];
                if (d == '"') {
                    closed = true;
                    break;
                }
                if (d != '\\') {
                    t.text += d;
                    continue;
                }
                if (i >= line.size()) break;
                d = line[i++];
                switch (d) {
                case 'n': t.text += '\n'; break;
                case 't': t.text += '\t'; break;
                case 'r': t.text += '\r'; break;
                case '"': case '\\': case '/': t.text += d; break;
                case 'u': {
                    if (i + 4 > line.size()) throw PlanParseError(line_no, std::string(line), "bad \\u escape");
                    const auto code = std::stoi(std::string(line.substr(i, 4)), nullptr, 16);
                    if (code > 0x7f) throw PlanParseError(line_no, std::string(line), "non-ASCII \\u escape");
                    t.text += static_cast<char>(code);
                    i += 4;
                    break;
                }
                default: throw PlanParseError(line_no, std::string(line), std::string("unknown escape \\") + d);
                }
            }
            if (!closed) throw PlanParseError(line_no, std::string(line), "unterminated string");
            out.push_back(std::move(t));
            continue;
        }
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        out.push_back({std::string(line.substr(i, j - i)), false});
        i = j;
    }
    return out;
}

std::string quote(std::string_view s) {
    std::string out = "\"";
    for (const char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '/': out += "\\/"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                static const char* hex = "0123456789abcdef";
                out += "\\u00";
                out += hex[(c >> 4) & 0xf];
                out += hex[c & 0xf];
            } else {
                out += c;
            }
        }
    }
    return out + "\"";
}

bool is_simple_word(std::string_view s) {
    if (s.empty()) return false;
    for (const char c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$' || c == '-')) return false;
    }
    return true;
}

bool is_integer(std::string_view s) {
    if (s.starts_with('-')) s.remove_prefix(1);
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool is_decimal(std::string_view s) {
    if (s.starts_with('-')) s.remove_prefix(1);
    const auto dot = s.find('.');
    if (dot == std::string_view::npos) return is_integer(s);
    return is_integer(s.substr(0, dot)) && is_integer(s.substr(dot + 1));
}

// Validates `value` against a known type; unknown types pass through.
void check_typed_value(const std::string& type, const std::string& value, std::size_t line_no, std::string_view line) {
    auto fail = [&](const std::string& why) { throw PlanParseError(line_no, std::string(line), why); };
    if (type == "boolean" && value != "true" && value != "false") fail("boolean literal must be true or false");
    if ((type == "int" || type == "long") && !is_integer(value)) fail(type + " literal must be an integer");
    if ((type == "float" || type == "double") && !is_decimal(value)) fail(type + " literal must be numeric");
    if (type == "null" && value != "null") fail("null literal must be `null`");
}

Literal parse_literal(const Token& tok, std::size_t line_no, std::string_view line) {
    if (tok.quoted) return string_literal(tok.text);
    const auto& t = tok.text;
    if (t == "skip-body") return skip_body();
    if (t == "true" || t == "false") return {"boolean", t};
    if (t == "null") return {"null", "null"};
    if (is_integer(t)) return {"int", t};
    if (is_decimal(t)) return {"double", t};
    const auto colon = t.find(':');
    if (colon != std::string::npos && colon > 0) {
        Literal lit{t.substr(0, colon), t.substr(colon + 1)};
        if (lit.type == "string") return lit;
        check_typed_value(lit.type, lit.value, line_no, line);
        return lit;
    }
    throw PlanParseError(line_no, std::string(line), "cannot read literal `" + t + "`");
}

std::string format_literal(const Literal& lit) {
    if (lit.type == "string") return quote(lit.value);
    if (lit.type == "boolean" || lit.type == "null" || lit.type == "skip-body" || lit.type == "int") return lit.value;
    return lit.type + ":" + lit.value;
}

std::string format_word(std::string_view s) { return is_simple_word(s) ? std::string(s) : quote(s); }

}  // namespace

Literal bool_literal(bool v) { return {"boolean", v ? "true" : "false"}; }
Literal int_literal(long long v) { return {"int", std::to_string(v)}; }
Literal string_literal(std::string v) { return {"string", std::move(v)}; }
Literal skip_body() { return {"skip-body", "skip-body"}; }

InstrumentationPlan parse_plan(std::string_view text) {
    InstrumentationPlan plan;
    std::set<std::string> extra_keys;
    bool saw_launch = false;
    std::size_t line_no = 0;
    for (const auto& raw : detail::split_lines(text)) {
        ++line_no;
        const auto tokens = tokenize(raw, line_no);
        if (tokens.empty()) continue;
        auto fail = [&](const std::string& why) { return PlanParseError(line_no, raw, why); };
        const auto keyword = detail::lower(tokens[0].text);

        if (keyword == "hook") {
            if (tokens.size() != 4 && tokens.size() != 5) throw fail("expected: hook <class> <signature> <literal> [external]");
            HookSpec hook;
            hook.method.owner = normalize_class_name(tokens[1].text);
            hook.method.signature = tokens[2].text;
            if (!is_class_descriptor(hook.method.owner)) throw fail("invalid class name `" + tokens[1].text + "`");
            const auto open = hook.method.signature.find('(');
            const auto close = hook.method.signature.find(')');
            if (open == std::string::npos || open == 0 || close == std::string::npos || close < open)
                throw fail("invalid method signature `" + hook.method.signature + "`");
            hook.forced_return = parse_literal(tokens[3], line_no, raw);
            if (tokens.size() == 5) {
                if (detail::lower(tokens[4].text) != "external") throw fail("unexpected token `" + tokens[4].text + "`");
                hook.external = true;
            }
            plan.hooks.push_back(std::move(hook));
        } else if (keyword == "intent") {
            if (tokens.size() != 2) throw fail("expected: intent <activity>");
            if (plan.intent) throw fail("duplicate intent directive");
            plan.intent = IntentSpec{normalize_class_name(tokens[1].text), std::nullopt, {}};
        } else if (keyword == "action") {
            if (tokens.size() != 2) throw fail("expected: action \"<string>\"");
            if (!plan.intent) throw fail("action before intent");
            plan.intent->action = tokens[1].text;
        } else if (keyword == "extra") {
            if (tokens.size() != 4) throw fail("expected: extra <key> <type> <value>");
            if (!plan.intent) throw fail("extra before intent");
            const auto& key = tokens[1].text;
            if (!extra_keys.insert(key).second) throw fail("duplicate extra `" + key + "`");
            Literal lit{detail::lower(tokens[2].text), tokens[3].text};
            if (lit.type != "string") check_typed_value(lit.type, lit.value, line_no, raw);
            plan.intent->extras.emplace_back(key, std::move(lit));
        } else if (keyword == "launch") {
            if (tokens.size() != 2 || (tokens[1].text != "true" && tokens[1].text != "false"))
                throw fail("expected: launch true|false");
            if (saw_launch) throw fail("duplicate launch directive");
            saw_launch = true;
            plan.launch = tokens[1].text == "true";
        } else {
            throw fail("unknown directive `" + tokens[0].text + "`");
        }
    }
    return plan;
}

std::string serialize_plan(const InstrumentationPlan& plan) {
    std::string out;
    for (const auto& h : plan.hooks) {
        out += "hook " + h.method.owner + " " + h.method.signature + " " + format_literal(h.forced_return);
        if (h.external) out += " external";
        out += '\n';
    }
    if (plan.intent) {
        out += "intent " + plan.intent->target + "\n";
        if (plan.intent->action) out += "action " + quote(*plan.intent->action) + "\n";
        for (const auto& [key, lit] : plan.intent->extras) {
            out += "extra " + format_word(key) + " " + lit.type + " " +
                   (lit.type == "string" ? quote(lit.value) : lit.value) + "\n";
        }
    }
    out += std::string("launch ") + (plan.launch ? "true" : "false") + "\n";
    return out;
}

}  // namespace actreach
