#include "actreach/script.hpp"

#include <algorithm>
#include <map>

#include "text_util.hpp"

namespace actreach {

namespace {

constexpr std::string_view kHeaderOpen = "/* actreach-plan v1";
constexpr std::string_view kHeaderClose = " */";

std::string js_string(std::string_view s) {
    std::string out = "'";
    for (const char c : s) {
        switch (c) {
        case '\'': out += "\\'"; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default: out += c;
        }
    }
    return out + "'";
}

// Smali type descriptor to the name Frida's overload() expects.
std::string frida_type(std::string_view t) {
    if (t.starts_with('[')) {
        std::string s(t);
        std::replace(s.begin(), s.end(), '/', '.');
        return s;
    }
    if (t == "Z") return "boolean";
    if (t == "B") return "byte";
    if (t == "C") return "char";
    if (t == "S") return "short";
    if (t == "I") return "int";
    if (t == "J") return "long";
    if (t == "F") return "float";
    if (t == "D") return "double";
    if (t == "V") return "void";
    return to_java_name(t);
}

std::string js_value(const Literal& lit) {
    if (lit.type == "boolean" || lit.type == "int" || lit.type == "long" || lit.type == "float" ||
        lit.type == "double" || lit.type == "null")
        return lit.value;
    if (lit.type == "string") return js_string(lit.value);
    throw UnsupportedLiteralType(lit.type);
}

// Java.use handle variable for a class.
std::string handle_name(std::size_t i) { return "C" + std::to_string(i); }

std::string put_extra(const std::string& key, const Literal& lit) {
    std::string wrapped;
    if (lit.type == "string") wrapped = js_string(lit.value);
    else if (lit.type == "boolean") wrapped = lit.value;
    else if (lit.type == "int") wrapped = lit.value;
    else if (lit.type == "long") wrapped = "Long.$new('" + lit.value + "').longValue()";
    else if (lit.type == "float") wrapped = "Float.$new('" + lit.value + "').floatValue()";
    else if (lit.type == "double") wrapped = "Double.$new('" + lit.value + "').doubleValue()";
    else if (lit.type == "null") wrapped = "null";
    else throw UnsupportedLiteralType(lit.type);
    static const std::map<std::string, std::string> java_types{
        {"string", "java.lang.String"}, {"null", "java.lang.String"}, {"boolean", "boolean"}, {"int", "int"},
        {"long", "long"},               {"float", "float"},           {"double", "double"}};
    return "        intent.putExtra.overload('java.lang.String', '" + java_types.at(lit.type) + "').call(intent, " +
           js_string(key) + ", " + wrapped + ");\n";
}

}  // namespace

std::string render_script(const InstrumentationPlan& plan, std::string_view target) {
    std::string out;
    out += kHeaderOpen;
    out += "\n";
    for (const auto& line : detail::split_lines(serialize_plan(plan))) out += " * " + line + "\n";
    out += kHeaderClose;
    out += "\n";
    out += "Java.perform(function () {\n";

    std::map<std::string, std::string> handles;
    for (const auto& h : plan.hooks) {
        if (handles.count(h.method.owner)) continue;
        const auto name = handle_name(handles.size());
        handles[h.method.owner] = name;
        out += "    var " + name + " = Java.use(" + js_string(to_java_name(h.method.owner)) + ");\n";
    }
    for (const auto& h : plan.hooks) {
        const auto& handle = handles[h.method.owner];
        const auto name = method_name(h.method.signature);
        std::vector<std::string> params;
        for (const auto& p : parameter_types(h.method.signature)) params.push_back(js_string(frida_type(p)));
        std::string body;
        if (h.forced_return.type == "skip-body") {
            body = "return;";
        } else {
            body = "return " + js_value(h.forced_return) + ";";
        }
        const std::string member = name == "<init>" ? std::string("$init") : std::string(name);
        out += "    " + handle + "[" + js_string(member) + "].overload(" + detail::join(params, ", ") +
               ").implementation = function () {\n";
        out += "        " + body + "\n";
        out += "    };\n";
    }

    if (plan.intent || plan.launch) {
        const auto activity = to_java_name(plan.intent ? plan.intent->target : normalize_class_name(target));
        out += "    function launchTarget() {\n";
        out += "        var ActivityThread = Java.use('android.app.ActivityThread');\n";
        out += "        var Intent = Java.use('android.content.Intent');\n";
        out += "        var context = ActivityThread.currentApplication().getApplicationContext();\n";
        out += "        var intent = Intent.$new();\n";
        out += "        intent.setClassName(context, " + js_string(activity) + ");\n";
        out += "        intent.addFlags(0x10000000);\n";
        if (plan.intent) {
            if (plan.intent->action) out += "        intent.setAction(" + js_string(*plan.intent->action) + ");\n";
            bool boxed = false;
            for (const auto& [key, lit] : plan.intent->extras) {
                if (!boxed && (lit.type == "long" || lit.type == "float" || lit.type == "double")) {
                    out += "        var Long = Java.use('java.lang.Long');\n"
                           "        var Float = Java.use('java.lang.Float');\n"
                           "        var Double = Java.use('java.lang.Double');\n";
                    boxed = true;
                }
                out += put_extra(key, lit);
            }
        }
        out += "        context.startActivity(intent);\n";
        out += "    }\n";
        if (plan.launch) {
            out += "    Java.scheduleOnMainThread(launchTarget);\n";
        } else {
            out += "    rpc.exports = { launch: function () { Java.perform(function () { Java.scheduleOnMainThread(launchTarget); }); } };\n";
        }
    }
    out += "});\n";
    return out;
}

InstrumentationPlan parse_script_header(std::string_view script) {
    const auto lines = detail::split_lines(script);
    std::size_t i = 0;
    while (i < lines.size() && detail::trim(lines[i]).empty()) ++i;
    if (i >= lines.size() || detail::trim(lines[i]) != detail::trim(kHeaderOpen))
        throw PlanParseError(i + 1, i < lines.size() ? lines[i] : std::string{}, "script has no actreach-plan header");
    std::string plan;
    for (++i; i < lines.size(); ++i) {
        const auto& l = lines[i];
        if (detail::trim(l) == "*/") return parse_plan(plan);
        if (l.starts_with(" * ")) plan += l.substr(3);
        else if (detail::trim(l) != "*") throw PlanParseError(i + 1, l, "unexpected line in plan header");
        plan += "\n";
    }
    throw PlanParseError(lines.size(), {}, "unterminated plan header");
}

}  // namespace actreach
