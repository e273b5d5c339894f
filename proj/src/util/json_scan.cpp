#include "mobench/util/json_scan.hpp"

#include <cctype>

namespace mobench {

namespace {

/// Index one past the brace matching the '{' at `open`, or npos.
std::size_t match_brace(std::string_view s, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::string_view::npos;
}

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

std::vector<std::string_view> json_object_candidates(std::string_view text) {
    std::vector<std::string_view> out;
    for (std::size_t i = text.size(); i-- > 0;) {
        if (text[i] != '{') continue;
        const auto end = match_brace(text, i);
        if (end != std::string_view::npos) out.push_back(text.substr(i, end - i));
    }
    return out;
}

std::string pythonic_to_json(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool in_string = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            out.push_back(c);
            if (c == '\\' && i + 1 < text.size()) {
                out.push_back(text[++i]);
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
            out.push_back(c);
            continue;
        }
        if (c == '\'') {
            out.push_back('"');
            for (++i; i < text.size() && text[i] != '\''; ++i) {
                if (text[i] == '\\' && i + 1 < text.size()) {
                    ++i;
                    if (text[i] != '\'') out.push_back('\\');
                } else if (text[i] == '"') {
                    out.push_back('\\');
                }
                out.push_back(text[i]);
            }
            out.push_back('"');
            continue;
        }
        const bool boundary = i == 0 || !word_char(text[i - 1]);
        bool replaced = false;
        if (boundary) {
            for (const auto& [py, js] : {std::pair<std::string_view, std::string_view>{"True", "true"},
                                         {"False", "false"},
                                         {"None", "null"}}) {
                const auto end = i + py.size();
                if (text.substr(i, py.size()) == py && (end >= text.size() || !word_char(text[end]))) {
                    out += js;
                    i = end - 1;
                    replaced = true;
                    break;
                }
            }
        }
        if (!replaced) out.push_back(c);
    }
    return out;
}

}  // namespace mobench
