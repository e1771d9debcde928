#include "actreach/smali.hpp"

#include <algorithm>
#include <future>
#include <thread>

#include "actreach/error.hpp"
#include "text_util.hpp"

namespace actreach {

using detail::split_ws;
using detail::trim;

namespace {

bool is_primitive(std::string_view s) {
    return s.size() == 1 && std::string_view("VZBSCIJFD").find(s[0]) != std::string_view::npos;
}

bool is_word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

// Drops a trailing `# comment`, ignoring '#' inside string literals.
std::string_view strip_comment(std::string_view line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
        } else if (c == '"') {
            in_string = true;
        } else if (c == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

// Splits an operand list on commas outside string literals and braces.
std::vector<std::string> split_operands(std::string_view s) {
    std::vector<std::string> out;
    bool in_string = false;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}') --depth;
        else if (c == ',' && depth == 0) {
            out.emplace_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    }
    out.emplace_back(trim(s.substr(start)));
    return out;
}

std::optional<std::string> unquote(std::string_view s) {
    if (s.size() < 2 || s.front() != '"' || s.back() != '"') return std::nullopt;
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        char c = s[i];
        if (c == '\\' && i + 2 < s.size()) {
            c = s[++i];
            switch (c) {
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case 'r': out += '\r'; break;
            case 'b': out += '\b'; break;
            case 'f': out += '\f'; break;
            case 'u': {
                // Keep \uXXXX escapes verbatim; the index only needs identity.
                out += "\\u";
                break;
            }
            default: out += c;
            }
        } else {
            out += c;
        }
    }
    return out;
}

// `{v0, v1}` or `{v0 .. v3}`.
std::vector<std::string> parse_register_list(std::string_view inner) {
    inner = trim(inner);
    if (inner.empty()) return {};
    const auto dots = inner.find("..");
    if (dots != std::string_view::npos) {
        const auto first = std::string(trim(inner.substr(0, dots)));
        const auto last = std::string(trim(inner.substr(dots + 2)));
        if (first.size() >= 2 && last.size() >= 2 && first[0] == last[0]) {
            try {
                const int lo = std::stoi(first.substr(1));
                const int hi = std::stoi(last.substr(1));
                std::vector<std::string> regs;
                for (int r = lo; r <= hi && hi - lo < 256; ++r) regs.push_back(first[0] + std::to_string(r));
                return regs;
            } catch (const std::exception&) {
            }
        }
        return {first, last};
    }
    std::vector<std::string> regs;
    for (auto& r : detail::split(inner, ',')) regs.emplace_back(trim(r));
    return regs;
}

bool is_branch_opcode(std::string_view op) {
    return op.starts_with("if-") || op.starts_with("goto") || op == "packed-switch" || op == "sparse-switch";
}

}  // namespace

// ---------------------------------------------------------------------------
// Names
// ---------------------------------------------------------------------------

std::string normalize_class_name(std::string_view name) {
    name = trim(name);
    if (name.empty() || name.front() == '[' || is_primitive(name)) return std::string(name);
    std::string inner;
    if (name.front() == 'L' && name.back() == ';') inner = std::string(name.substr(1, name.size() - 2));
    else inner = std::string(name);
    std::replace(inner.begin(), inner.end(), '.', '/');
    return "L" + inner + ";";
}

std::string to_java_name(std::string_view descriptor) {
    if (descriptor.size() >= 2 && descriptor.front() == 'L' && descriptor.back() == ';') {
        std::string inner(descriptor.substr(1, descriptor.size() - 2));
        std::replace(inner.begin(), inner.end(), '/', '.');
        return inner;
    }
    return std::string(descriptor);
}

bool is_class_descriptor(std::string_view text) {
    if (text.size() < 3 || text.front() != 'L' || text.back() != ';') return false;
    for (std::size_t i = 1; i + 1 < text.size(); ++i) {
        const char c = text[i];
        if (!is_word_char(c) && c != '/' && c != '$') return false;
    }
    return true;
}

std::string simple_class_name(std::string_view descriptor) {
    std::string java = to_java_name(descriptor);
    const auto dot = java.rfind('.');
    return dot == std::string::npos ? java : java.substr(dot + 1);
}

std::vector<std::string> parameter_types(std::string_view signature) {
    std::vector<std::string> out;
    const auto open = signature.find('(');
    const auto close = signature.find(')', open == std::string_view::npos ? 0 : open);
    if (open == std::string_view::npos || close == std::string_view::npos) return out;
    std::string_view params = signature.substr(open + 1, close - open - 1);
    std::size_t i = 0;
    while (i < params.size()) {
        std::size_t start = i;
        while (i < params.size() && params[i] == '[') ++i;
        if (i >= params.size()) break;
        if (params[i] == 'L') {
            const auto semi = params.find(';', i);
            if (semi == std::string_view::npos) {
                out.emplace_back(params.substr(start));
                break;
            }
            i = semi + 1;
        } else {
            ++i;
        }
        out.emplace_back(params.substr(start, i - start));
    }
    return out;
}

std::string return_type(std::string_view signature) {
    const auto close = signature.find(')');
    if (close == std::string_view::npos) return {};
    return std::string(signature.substr(close + 1));
}

std::string_view method_name(std::string_view signature) {
    const auto open = signature.find('(');
    return open == std::string_view::npos ? signature : signature.substr(0, open);
}

std::optional<MethodRef> parse_method_ref(std::string_view text) {
    text = trim(text);
    const auto arrow = text.find("->");
    if (arrow == std::string_view::npos) return std::nullopt;
    MethodRef ref{std::string(text.substr(0, arrow)), std::string(text.substr(arrow + 2))};
    const auto open = ref.signature.find('(');
    const auto close = ref.signature.find(')');
    if (ref.owner.empty() || open == std::string::npos || open == 0 || close == std::string::npos ||
        close < open)
        return std::nullopt;
    return ref;
}

// ---------------------------------------------------------------------------
// Instructions
// ---------------------------------------------------------------------------

std::string_view to_string(InstructionKind kind) {
    switch (kind) {
    case InstructionKind::Invoke: return "Invoke";
    case InstructionKind::MoveResult: return "MoveResult";
    case InstructionKind::Const: return "Const";
    case InstructionKind::Branch: return "Branch";
    case InstructionKind::Return: return "Return";
    case InstructionKind::NewInstance: return "NewInstance";
    case InstructionKind::Label: return "Label";
    case InstructionKind::Other: return "Other";
    }
    return "Other";
}

std::optional<InstructionKind> instruction_kind_from_string(std::string_view text) {
    for (auto k : {InstructionKind::Invoke, InstructionKind::MoveResult, InstructionKind::Const,
                   InstructionKind::Branch, InstructionKind::Return, InstructionKind::NewInstance,
                   InstructionKind::Label, InstructionKind::Other}) {
        if (to_string(k) == text) return k;
    }
    return std::nullopt;
}

Instruction parse_instruction(std::string_view raw, std::size_t line_no) {
    Instruction ins;
    ins.line_no = line_no;
    ins.raw_text = std::string(raw);

    const std::string_view code = trim(strip_comment(raw));
    if (code.empty() || code.front() == '.') return ins;

    if (code.front() == ':') {
        const auto name = code.substr(1);
        if (!name.empty() && split_ws(name).size() == 1) {
            ins.kind = InstructionKind::Label;
            ins.operands = LabelOperands{std::string(name)};
        }
        return ins;
    }

    const auto space = code.find_first_of(" \t");
    const std::string opcode(code.substr(0, space));
    const std::string_view rest = space == std::string_view::npos ? std::string_view{} : trim(code.substr(space));

    if (opcode.starts_with("invoke-")) {
        const auto open = rest.find('{');
        const auto close = rest.find('}');
        if (open != 0 || close == std::string_view::npos) return ins;
        auto after = trim(rest.substr(close + 1));
        if (after.empty() || after.front() != ',') return ins;
        auto ref = parse_method_ref(after.substr(1));
        if (!ref) return ins;
        ins.kind = InstructionKind::Invoke;
        ins.operands = InvokeOperands{opcode, parse_register_list(rest.substr(1, close - 1)), std::move(*ref)};
        return ins;
    }

    const auto ops = split_operands(rest);

    if (opcode.starts_with("move-result")) {
        if (ops.size() != 1 || ops[0].empty()) return ins;
        ins.kind = InstructionKind::MoveResult;
        ins.operands = MoveResultOperands{opcode, ops[0]};
        return ins;
    }
    if (opcode == "const-string" || opcode == "const-string/jumbo") {
        if (ops.size() != 2) return ins;
        auto lit = unquote(ops[1]);
        if (!lit) return ins;
        ins.kind = InstructionKind::Const;
        ins.operands = ConstOperands{ConstOperands::Type::String, ops[0], std::move(*lit)};
        return ins;
    }
    if (opcode == "const-class") {
        if (ops.size() != 2 || ops[1].empty()) return ins;
        ins.kind = InstructionKind::Const;
        ins.operands = ConstOperands{ConstOperands::Type::Class, ops[0], ops[1]};
        return ins;
    }
    if (is_branch_opcode(opcode)) {
        if (ops.empty() || ops.back().size() < 2 || ops.back().front() != ':') return ins;
        BranchOperands br{opcode, {}, ops.back().substr(1)};
        for (std::size_t i = 0; i + 1 < ops.size(); ++i) br.registers.push_back(ops[i]);
        ins.kind = InstructionKind::Branch;
        ins.operands = std::move(br);
        return ins;
    }
    if (opcode == "return-void" || opcode == "return" || opcode == "return-wide" || opcode == "return-object") {
        ReturnOperands r{opcode, std::nullopt};
        if (opcode == "return-void") {
            if (!rest.empty()) return ins;
        } else {
            if (ops.size() != 1 || ops[0].empty()) return ins;
            r.value = ops[0];
        }
        ins.kind = InstructionKind::Return;
        ins.operands = std::move(r);
        return ins;
    }
    if (opcode == "new-instance") {
        if (ops.size() != 2 || ops[1].empty()) return ins;
        ins.kind = InstructionKind::NewInstance;
        ins.operands = NewInstanceOperands{ops[0], ops[1]};
        return ins;
    }
    return ins;
}

// ---------------------------------------------------------------------------
// Classes
// ---------------------------------------------------------------------------

std::string SmaliMethod::body_text() const {
    std::string out = header_text;
    for (const auto& ins : instructions) {
        out += '\n';
        out += ins.raw_text;
    }
    out += '\n';
    out += footer_text;
    return out;
}

const SmaliMethod* SmaliClass::find_method(std::string_view signature) const {
    for (const auto& m : methods) {
        if (m.signature == signature) return &m;
    }
    return nullptr;
}

namespace {

void check_labels(const SmaliMethod& m) {
    std::set<std::string> defined;
    for (const auto& ins : m.instructions) {
        if (const auto* l = std::get_if<LabelOperands>(&ins.operands)) defined.insert(l->name);
    }
    for (const auto& ins : m.instructions) {
        if (const auto* b = std::get_if<BranchOperands>(&ins.operands)) {
            if (!defined.contains(b->label))
                throw ParseError(ins.line_no, "branch to undefined label :" + b->label + " in " + m.signature);
        }
    }
}

}  // namespace

SmaliClass parse_smali(std::string_view text) {
    SmaliClass cls;
    bool seen_class = false;
    bool seen_super = false;
    std::optional<SmaliMethod> current;
    std::set<std::string> signatures;

    const auto lines = detail::split_lines(text, &cls.trailing_newline);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        const std::string& line = lines[i];
        const std::string_view code = trim(strip_comment(line));

        if (current) {
            if (detail::starts_with_token(code, ".end") && trim(code.substr(4)) == "method") {
                current->footer_text = line;
                check_labels(*current);
                cls.layout.emplace_back(cls.methods.size());
                cls.methods.push_back(std::move(*current));
                current.reset();
            } else if (detail::starts_with_token(code, ".method")) {
                throw ParseError(line_no, "`.method` inside method started at line " +
                                              std::to_string(current->line_no) + " (missing `.end method`)");
            } else {
                current->instructions.push_back(parse_instruction(line, line_no));
            }
            continue;
        }

        if (detail::starts_with_token(code, ".class")) {
            if (seen_class) throw ParseError(line_no, "duplicate `.class` directive");
            auto tokens = split_ws(code);
            if (tokens.size() < 2 || !is_class_descriptor(tokens.back()))
                throw ParseError(line_no, "malformed `.class` directive");
            cls.name = tokens.back();
            cls.access_flags.assign(tokens.begin() + 1, tokens.end() - 1);
            seen_class = true;
        } else if (detail::starts_with_token(code, ".super")) {
            auto tokens = split_ws(code);
            if (tokens.size() != 2 || !is_class_descriptor(tokens[1]))
                throw ParseError(line_no, "malformed `.super` directive");
            cls.super_name = tokens[1];
            seen_super = true;
        } else if (detail::starts_with_token(code, ".source")) {
            cls.source_file = unquote(trim(code.substr(7)));
        } else if (detail::starts_with_token(code, ".method")) {
            if (!seen_class) throw ParseError(line_no, "`.method` before `.class`");
            auto tokens = split_ws(code);
            if (tokens.size() < 2) throw ParseError(line_no, "malformed `.method` directive");
            const std::string& sig = tokens.back();
            const auto open = sig.find('(');
            const auto close = sig.find(')');
            if (open == std::string::npos || open == 0 || close == std::string::npos || close < open ||
                close + 1 >= sig.size())
                throw ParseError(line_no, "malformed method signature `" + sig + "`");
            if (!signatures.insert(sig).second)
                throw ParseError(line_no, "duplicate method " + sig);
            current.emplace();
            current->owner = cls.name;
            current->signature = sig;
            current->access_flags.assign(tokens.begin() + 1, tokens.end() - 1);
            current->line_no = line_no;
            current->header_text = line;
            continue;
        } else if (detail::starts_with_token(code, ".end") && trim(code.substr(4)) == "method") {
            throw ParseError(line_no, "`.end method` without matching `.method`");
        }
        cls.layout.emplace_back(line);
    }

    if (current)
        throw ParseError(current->line_no, "unterminated method " + current->signature + " (missing `.end method`)");
    if (!seen_class) throw ParseError(lines.empty() ? 1 : lines.size(), "missing `.class` directive");
    if (!seen_super && cls.name != "Ljava/lang/Object;")
        throw ParseError(lines.size(), "missing `.super` directive");
    return cls;
}

SmaliClass parse_smali_file(const std::filesystem::path& path) {
    const std::string text = detail::read_file(path);
    try {
        return parse_smali(text);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), e.detail(), path.string());
    }
}

std::string emit(const SmaliClass& cls) {
    std::string out;
    bool first = true;
    for (const auto& entry : cls.layout) {
        if (!first) out += '\n';
        first = false;
        if (const auto* line = std::get_if<std::string>(&entry)) out += *line;
        else out += cls.methods.at(std::get<std::size_t>(entry)).body_text();
    }
    if (cls.trailing_newline && !cls.layout.empty()) out += '\n';
    return out;
}

// ---------------------------------------------------------------------------
// CodeIndex
// ---------------------------------------------------------------------------

CodeIndex CodeIndex::build(std::vector<SmaliClass> classes) {
    CodeIndex index;
    for (auto& cls : classes) {
        std::string name = cls.name;
        if (!index.classes_.emplace(name, std::move(cls)).second) throw DuplicateClass(name);
    }
    for (const auto& [name, cls] : index.classes_) {
        for (const auto& m : cls.methods) {
            auto& out = index.callees_[m.ref()];
            index.callers_[m.ref()];
            for (const auto& ins : m.instructions) {
                if (const auto* inv = std::get_if<InvokeOperands>(&ins.operands)) out.push_back(inv->method);
            }
        }
    }
    for (const auto& [caller, targets] : index.callees_) {
        for (const auto& target : targets) {
            if (index.contains(target)) index.callers_[target].insert(caller);
        }
    }
    return index;
}

const SmaliClass* CodeIndex::find_class(std::string_view name) const {
    const auto it = classes_.find(normalize_class_name(name));
    return it == classes_.end() ? nullptr : &it->second;
}

const SmaliMethod* CodeIndex::find_method(const MethodRef& ref) const {
    const auto* cls = find_class(ref.owner);
    return cls ? cls->find_method(ref.signature) : nullptr;
}

const std::vector<MethodRef>& CodeIndex::callees(const MethodRef& ref) const {
    static const std::vector<MethodRef> empty;
    const auto it = callees_.find(ref);
    return it == callees_.end() ? empty : it->second;
}

const std::set<MethodRef>& CodeIndex::callers(const MethodRef& ref) const {
    static const std::set<MethodRef> empty;
    const auto it = callers_.find(ref);
    return it == callers_.end() ? empty : it->second;
}

std::vector<std::string> CodeIndex::superclass_chain(std::string_view name) const {
    std::vector<std::string> chain;
    std::set<std::string> seen;
    std::string cur = normalize_class_name(name);
    while (const auto* cls = find_class(cur)) {
        if (!seen.insert(cur).second) break;
        chain.push_back(cur);
        cur = cls->super_name;
    }
    return chain;
}

std::size_t CodeIndex::method_count() const {
    std::size_t n = 0;
    for (const auto& [_, cls] : classes_) n += cls.methods.size();
    return n;
}

std::vector<SmaliClass> load_smali_tree(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    if (fs::is_directory(root)) {
        for (const auto& entry : fs::directory_iterator(root)) {
            if (!entry.is_directory() || !entry.path().filename().string().starts_with("smali")) continue;
            for (const auto& f : fs::recursive_directory_iterator(entry.path())) {
                if (f.is_regular_file() && f.path().extension() == ".smali") files.push_back(f.path());
            }
        }
    }
    std::sort(files.begin(), files.end());

    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), 8));
    const std::size_t chunk = (files.size() + workers - 1) / std::max<std::size_t>(workers, 1);
    std::vector<std::future<std::vector<SmaliClass>>> jobs;
    for (std::size_t start = 0; start < files.size(); start += chunk) {
        const std::size_t end = std::min(files.size(), start + chunk);
        jobs.push_back(std::async(std::launch::async, [&files, start, end] {
            std::vector<SmaliClass> out;
            for (std::size_t i = start; i < end; ++i) out.push_back(parse_smali_file(files[i]));
            return out;
        }));
    }
    std::vector<SmaliClass> classes;
    for (auto& job : jobs) {
        for (auto& cls : job.get()) classes.push_back(std::move(cls));
    }
    return classes;
}

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

bool check_class_exists(const CodeIndex& index, std::string_view name) {
    return index.find_class(name) != nullptr;
}

MethodList get_methods_inside_class(const CodeIndex& index, std::string_view name) {
    MethodList out;
    if (const auto* cls = index.find_class(name)) {
        out.found = true;
        for (const auto& m : cls->methods) out.signatures.push_back(m.signature);
    }
    return out;
}

std::vector<const SmaliMethod*> resolve_methods(const CodeIndex& index, std::string_view class_name,
                                                std::string_view method_sig) {
    std::vector<const SmaliMethod*> out;
    method_sig = trim(method_sig);
    if (const auto arrow = method_sig.find("->"); arrow != std::string_view::npos) {
        if (class_name.empty()) class_name = method_sig.substr(0, arrow);
        method_sig = method_sig.substr(arrow + 2);
    }
    const auto* cls = index.find_class(class_name);
    if (!cls) return out;
    if (method_sig.find('(') != std::string_view::npos) {
        if (const auto* m = cls->find_method(method_sig)) out.push_back(m);
        return out;
    }
    for (const auto& m : cls->methods) {
        if (method_name(m.signature) == method_sig) out.push_back(&m);
    }
    return out;
}

std::optional<std::string> get_method_body(const CodeIndex& index, const MethodRef& ref) {
    const auto* m = index.find_method(ref);
    if (!m) return std::nullopt;
    return m->body_text();
}

std::vector<MethodRef> get_methods_invoked(const CodeIndex& index, const MethodRef& ref) {
    std::vector<MethodRef> out;
    std::set<MethodRef> seen;
    for (const auto& callee : index.callees({normalize_class_name(ref.owner), ref.signature})) {
        if (seen.insert(callee).second) out.push_back(callee);
    }
    return out;
}

std::vector<MethodRef> get_caller_methods(const CodeIndex& index, const MethodRef& ref) {
    const auto& set = index.callers({normalize_class_name(ref.owner), ref.signature});
    return {set.begin(), set.end()};
}

}  // namespace actreach
