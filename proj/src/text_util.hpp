#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace actreach::detail {

std::string_view trim(std::string_view s);
bool starts_with_token(std::string_view line, std::string_view token);

/// Splits on `sep`, keeping empty fields.
std::vector<std::string> split(std::string_view s, char sep);

/// Splits on runs of spaces/tabs.
std::vector<std::string> split_ws(std::string_view s);

/// Splits `text` into lines on '\n'. A final newline does not produce an
/// extra empty line; `trailing_newline` reports whether one was present.
std::vector<std::string> split_lines(std::string_view text, bool* trailing_newline = nullptr);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// Lowercased copy (ASCII).
std::string lower(std::string_view s);

}  // namespace actreach::detail
