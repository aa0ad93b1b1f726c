#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Text helpers. Whitespace follows the Unicode definition used by
// Python's str.split()/str.strip(), which the metric code must mirror.
namespace thinkmt::text {

/// One decoded code point and the byte range it occupies.
struct CodePoint {
  char32_t value;
  std::size_t offset;
  std::size_t length;
};

/// Lenient UTF-8 decoding: an invalid byte becomes a one-byte code point.
std::vector<CodePoint> decode_utf8(std::string_view s);

bool is_space(char32_t c) noexcept;

/// Trims Unicode whitespace from both ends.
std::string_view trim(std::string_view s);
std::string_view rtrim(std::string_view s);

/// Splits on runs of Unicode whitespace, dropping empty pieces.
std::vector<std::string_view> split_whitespace(std::string_view s);

std::vector<std::string_view> split_lines(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string replace_all(std::string s, std::string_view from, std::string_view to);

bool starts_with(std::string_view s, std::string_view prefix) noexcept;
bool ends_with(std::string_view s, std::string_view suffix) noexcept;

std::string to_lower_ascii(std::string_view s);

/// Removes one layer of matching wrapping quotes ("...", '...', “...”, «...»).
std::string_view strip_wrapping_quotes(std::string_view s);

/// Number of code points.
std::size_t length(std::string_view s);

}  // namespace thinkmt::text
