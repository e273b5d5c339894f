#include "mobench/eval/prompts.hpp"

#include <map>

#include <nlohmann/json.hpp>

#include "mobench/util/error.hpp"
#include "mobench/util/text.hpp"

namespace mobench::eval {

namespace detail {
const std::map<std::string, std::string>& prompt_assets();
}

namespace {

std::map<std::string, std::string> trimmed_assets() {
    std::map<std::string, std::string> out;
    for (auto [name, body] : detail::prompt_assets()) {
        while (!body.empty() && body.back() == '\n') body.pop_back();
        out.emplace(name, std::move(body));
    }
    return out;
}

}  // namespace

const std::string& prompt_asset(std::string_view name) {
    static const auto assets = trimmed_assets();
    const auto it = assets.find(std::string(name));
    if (it == assets.end()) throw Error("unknown prompt asset '" + std::string(name) + "'");
    return it->second;
}

std::vector<std::string> prompt_asset_names() {
    std::vector<std::string> names;
    for (const auto& [name, _] : detail::prompt_assets()) names.push_back(name);
    return names;
}

std::string judge_system_prompt(ActionMode action) {
    const std::string addendum = action == ActionMode::no_action ? std::string() : prompt_asset("judge_system_action");
    return text::substitute(prompt_asset("judge_system"), {{"action_sys_prompt_template(action_mode)", addendum}});
}

std::string reasoning_prompt(Reasoning reasoning) {
    return prompt_asset(reasoning == Reasoning::result_only ? "judge_result_only" : "judge_reason_and_result");
}

std::string judge_base_prompt(std::string_view task_description, std::string_view history_info, const EvalMode& mode,
                              std::string_view extra_action) {
    std::string action_0;
    std::string action_1;
    if (mode.action == ActionMode::text_action) {
        action_0 = text::substitute(prompt_asset("judge_text_action_0"), {{"extra_action", std::string(extra_action)}});
        action_1 = prompt_asset("judge_text_action_1");
    } else if (mode.action == ActionMode::image_action) {
        action_0 = prompt_asset("judge_image_action_0");
        action_1 = prompt_asset("judge_image_action_1");
    }
    return text::substitute(prompt_asset("judge_base"), {
                                                            {"task_description", std::string(task_description)},
                                                            {"history_info", std::string(history_info)},
                                                            {"action_prompt[0]", action_0},
                                                            {"reasoning_prompt", reasoning_prompt(mode.reasoning)},
                                                            {"action_prompt[1]", action_1},
                                                        });
}

std::string split_system_prompt(std::string_view task_description) {
    return text::substitute(prompt_asset("split_system"), {{"task_description", std::string(task_description)}});
}

std::string split_user_prompt(const std::vector<std::string>& apps) {
    return text::substitute(prompt_asset("split_user"), {{"task_app", nlohmann::json(apps).dump()}});
}

std::string memory_system_prompt() { return prompt_asset("memory_system"); }

std::string memory_user_prompt(std::string_view phrase) {
    return text::substitute(prompt_asset("memory_user"), {{"memory_text", std::string(phrase)}});
}

std::string subtask_system_prompt() { return prompt_asset("subtask_generation"); }

std::string subtask_user_prompt(std::string_view task_description) {
    return "**Task**: " + std::string(task_description) + "\n\n**Result**:";
}

}  // namespace mobench::eval
