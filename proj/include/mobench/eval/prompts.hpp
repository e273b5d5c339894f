#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mobench/eval/mode.hpp"

namespace mobench::eval {

/// A versioned prompt asset (assets/prompts/v1/<name>.txt, compiled in)
/// without its trailing newline. Throws Error for an unknown name.
const std::string& prompt_asset(std::string_view name);
std::vector<std::string> prompt_asset_names();

/// Judge system prompt; the action addendum is inserted for text and image modes.
std::string judge_system_prompt(ActionMode action);

/// Judge base prompt. `extra_action` only appears in text-action mode.
std::string judge_base_prompt(std::string_view task_description, std::string_view history_info, const EvalMode& mode,
                              std::string_view extra_action);

std::string reasoning_prompt(Reasoning reasoning);

std::string split_system_prompt(std::string_view task_description);
/// `apps` is rendered as a JSON array of the plain app names.
std::string split_user_prompt(const std::vector<std::string>& apps);

std::string memory_system_prompt();
std::string memory_user_prompt(std::string_view phrase);

std::string subtask_system_prompt();
std::string subtask_user_prompt(std::string_view task_description);

}  // namespace mobench::eval
