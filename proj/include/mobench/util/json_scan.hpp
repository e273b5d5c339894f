#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mobench {

/// Every balanced `{...}` span of `text` (string literals respected), ordered
/// by opening brace from last to first. Model replies wrap JSON in prose, so
/// callers try candidates in this order.
std::vector<std::string_view> json_object_candidates(std::string_view text);

/// Rewrites a Python literal to JSON: True/False/None outside strings become
/// true/false/null and single-quoted strings become double-quoted. Meant for a
/// single candidate object, not free prose.
std::string pythonic_to_json(std::string_view text);

}  // namespace mobench
