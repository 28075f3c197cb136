#pragma once

#include <string>
#include <string_view>
#include <vector>

// Thin helpers over ICU. Invalid UTF-8 decodes to U+FFFD rather than throwing.
namespace forge::unicode {

std::u32string to_code_points(std::string_view utf8);
std::string to_utf8(std::u32string_view code_points);

std::string nfc(std::string_view utf8);

bool is_space(char32_t cp);

/// Trims, and replaces every run of Unicode whitespace with one ASCII space.
std::string collapse_whitespace(std::string_view utf8);

/// NFC followed by collapse_whitespace.
std::string normalize(std::string_view utf8);

std::vector<std::string> split_whitespace(std::string_view utf8);

/// Reorders one line from logical to visual order (bidi); no-op for pure LTR text.
std::string visual_order(std::string_view utf8);

/// True when the first strong directional character is right-to-left.
bool base_direction_rtl(std::string_view utf8);

}  // namespace forge::unicode
