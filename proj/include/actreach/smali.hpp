#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace actreach {

// ---------------------------------------------------------------------------
// Names
// ---------------------------------------------------------------------------

/// Converts `com.foo.Bar`, `com/foo/Bar` or `Lcom/foo/Bar;` to `Lcom/foo/Bar;`.
/// Idempotent. Primitive and array descriptors pass through unchanged.
std::string normalize_class_name(std::string_view name);

/// `Lcom/foo/Bar;` -> `com.foo.Bar`. Non-object descriptors pass through.
std::string to_java_name(std::string_view descriptor);

/// Matches `L[\w/$]+;`.
bool is_class_descriptor(std::string_view text);

/// Simple class name: `Lcom/foo/Bar$Inner;` -> `Bar$Inner`.
std::string simple_class_name(std::string_view descriptor);

/// Splits a method descriptor's parameter list into individual type descriptors.
/// `f(ILjava/lang/String;[J)V` -> {"I", "Ljava/lang/String;", "[J"}.
std::vector<std::string> parameter_types(std::string_view signature);

/// Return type descriptor of a method signature.
std::string return_type(std::string_view signature);

/// Name part of a method signature: `onCreate(Landroid/os/Bundle;)V` -> `onCreate`.
std::string_view method_name(std::string_view signature);

struct MethodRef {
    std::string owner;
    std::string signature;

    std::string str() const { return owner + "->" + signature; }
    std::string_view name() const { return method_name(signature); }

    auto operator<=>(const MethodRef&) const = default;
    bool operator==(const MethodRef&) const = default;
};

/// Parses `Lcom/foo/Bar;->m(I)V`. Returns nullopt if either side is empty
/// or the signature lacks a parameter list.
std::optional<MethodRef> parse_method_ref(std::string_view text);

// ---------------------------------------------------------------------------
// Code model
// ---------------------------------------------------------------------------

enum class InstructionKind { Invoke, MoveResult, Const, Branch, Return, NewInstance, Label, Other };

std::string_view to_string(InstructionKind kind);
std::optional<InstructionKind> instruction_kind_from_string(std::string_view text);

struct InvokeOperands {
    std::string opcode;  // e.g. invoke-virtual/range
    std::vector<std::string> registers;
    MethodRef method;
    bool operator==(const InvokeOperands&) const = default;
};

struct MoveResultOperands {
    std::string opcode;
    std::string dest;
    bool operator==(const MoveResultOperands&) const = default;
};

struct ConstOperands {
    enum class Type { String, Class } type;
    std::string dest;
    std::string literal;  // unescaped string value, or class descriptor
    bool operator==(const ConstOperands&) const = default;
};

struct BranchOperands {
    std::string opcode;
    std::vector<std::string> registers;
    std::string label;  // without the leading ':'
    bool operator==(const BranchOperands&) const = default;
};

struct ReturnOperands {
    std::string opcode;
    std::optional<std::string> value;
    bool operator==(const ReturnOperands&) const = default;
};

struct NewInstanceOperands {
    std::string dest;
    std::string type;
    bool operator==(const NewInstanceOperands&) const = default;
};

struct LabelOperands {
    std::string name;  // without the leading ':'
    bool operator==(const LabelOperands&) const = default;
};

using Operands = std::variant<std::monostate, InvokeOperands, MoveResultOperands, ConstOperands,
                              BranchOperands, ReturnOperands, NewInstanceOperands, LabelOperands>;

/// One source line inside a method body. Directives, comments and blank lines
/// are kept as kind Other so the body can be reproduced exactly.
struct Instruction {
    std::size_t line_no = 0;
    InstructionKind kind = InstructionKind::Other;
    Operands operands;
    std::string raw_text;

    bool operator==(const Instruction&) const = default;
};

/// Classifies a single body line. Never throws.
Instruction parse_instruction(std::string_view raw, std::size_t line_no);

struct SmaliMethod {
    std::string owner;
    std::string signature;
    std::vector<std::string> access_flags;
    std::size_t line_no = 0;  // line of the `.method` directive
    std::string header_text;  // raw `.method` line
    std::string footer_text;  // raw `.end method` line
    std::vector<Instruction> instructions;

    MethodRef ref() const { return {owner, signature}; }
    /// `.method` through `.end method`, inclusive, byte-faithful.
    std::string body_text() const;
};

struct SmaliClass {
    std::string name;
    std::string super_name;
    std::optional<std::string> source_file;
    std::vector<std::string> access_flags;
    std::vector<SmaliMethod> methods;

    /// Class-level lines (directives, fields, annotations, blanks) interleaved
    /// with method slots; emit() walks this to reproduce the file.
    using LayoutEntry = std::variant<std::string, std::size_t>;
    std::vector<LayoutEntry> layout;
    bool trailing_newline = true;

    const SmaliMethod* find_method(std::string_view signature) const;
};

SmaliClass parse_smali(std::string_view text);
SmaliClass parse_smali_file(const std::filesystem::path& path);

/// Reassembles the class file text from its layout.
std::string emit(const SmaliClass& cls);

// ---------------------------------------------------------------------------
// Whole-program index
// ---------------------------------------------------------------------------

class CodeIndex {
public:
    CodeIndex() = default;

    /// Throws DuplicateClass if two classes share a name.
    static CodeIndex build(std::vector<SmaliClass> classes);

    const std::map<std::string, SmaliClass>& classes() const { return classes_; }

    const SmaliClass* find_class(std::string_view name) const;
    const SmaliMethod* find_method(const MethodRef& ref) const;
    bool contains(const MethodRef& ref) const { return find_method(ref) != nullptr; }

    /// Every invoke target of `ref` in order of appearance (duplicates kept).
    const std::vector<MethodRef>& callees(const MethodRef& ref) const;
    /// In-index methods whose body invokes `ref`.
    const std::set<MethodRef>& callers(const MethodRef& ref) const;

    const std::map<MethodRef, std::vector<MethodRef>>& callee_map() const { return callees_; }
    const std::map<MethodRef, std::set<MethodRef>>& caller_map() const { return callers_; }

    /// Superclass chain starting at (and including) `name`, stopping at the
    /// first class not present in the index.
    std::vector<std::string> superclass_chain(std::string_view name) const;

    std::size_t method_count() const;

private:
    std::map<std::string, SmaliClass> classes_;
    std::map<MethodRef, std::vector<MethodRef>> callees_;
    std::map<MethodRef, std::set<MethodRef>> callers_;
};

/// Parses every `smali*/**.smali` file under `root` (in parallel) and returns
/// the classes sorted by file path.
std::vector<SmaliClass> load_smali_tree(const std::filesystem::path& root);

// ---------------------------------------------------------------------------
// Semantic-memory queries
// ---------------------------------------------------------------------------

bool check_class_exists(const CodeIndex& index, std::string_view name);

struct MethodList {
    bool found = false;
    std::vector<std::string> signatures;
};

MethodList get_methods_inside_class(const CodeIndex& index, std::string_view name);

/// Resolves a method query. A signature without a parameter list matches
/// every overload with that name.
std::vector<const SmaliMethod*> resolve_methods(const CodeIndex& index, std::string_view class_name,
                                                std::string_view method_sig);

/// Body text of the referenced method, nullopt when not found.
std::optional<std::string> get_method_body(const CodeIndex& index, const MethodRef& ref);

/// Deduplicated callees in first-occurrence order.
std::vector<MethodRef> get_methods_invoked(const CodeIndex& index, const MethodRef& ref);

/// Sorted by owner then signature.
std::vector<MethodRef> get_caller_methods(const CodeIndex& index, const MethodRef& ref);

}  // namespace actreach
