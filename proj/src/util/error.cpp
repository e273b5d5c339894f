#include "mobench/util/error.hpp"

namespace mobench {

namespace {

std::string join_violations(const std::vector<std::string>& violations) {
    std::string message = std::to_string(violations.size()) + " validation error(s)";
    for (const auto& v : violations) {
        message += "\n  - ";
        message += v;
    }
    return message;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error(join_violations(violations)), violations_(std::move(violations)) {}

}  // namespace mobench
