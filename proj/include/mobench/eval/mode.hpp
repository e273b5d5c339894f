#pragma once

#include <string>
#include <string_view>

#include "mobench/dataset/task.hpp"

namespace mobench::eval {

enum class Reasoning { result_only, reason_and_result };
enum class ActionMode { no_action, text_action, image_action };

struct EvalMode {
    Reasoning reasoning = Reasoning::result_only;
    ActionMode action = ActionMode::image_action;
    friend bool operator==(const EvalMode&, const EvalMode&) = default;
};

std::string_view to_string(Reasoning r);
std::string_view to_string(ActionMode a);
Reasoning parse_reasoning(std::string_view s);
ActionMode parse_action_mode(std::string_view s);

/// English: result-only with image action. Chinese: reason-and-result with text action.
EvalMode default_mode(dataset::Language language);

/// Mode used for every cross-app subtask judgment.
inline constexpr EvalMode kCrossSubtaskMode{Reasoning::reason_and_result, ActionMode::text_action};

}  // namespace mobench::eval
