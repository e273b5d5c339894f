#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mobench::text {

/// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

bool is_space(char32_t c);

/// Lowercases ASCII, Latin-1, Greek and basic Cyrillic letters; every other
/// code point (CJK included) passes through unchanged.
char32_t to_lower(char32_t c);
std::string to_lower(std::string_view utf8);

/// Removes every Unicode whitespace code point, including U+3000.
std::string strip_whitespace(std::string_view utf8);

bool is_ascii(std::string_view s);

std::string trim(std::string_view s);

/// Replaces every `{key}` in `tmpl` with its value. Unknown keys are left alone.
std::string substitute(std::string_view tmpl,
                       const std::vector<std::pair<std::string, std::string>>& values);

std::vector<std::string> split_lines(std::string_view s);

/// POSIX shell single-quoting.
std::string shell_quote(std::string_view s);

}  // namespace mobench::text
