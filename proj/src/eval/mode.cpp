#include "mobench/eval/mode.hpp"

#include "mobench/util/error.hpp"

namespace mobench::eval {

std::string_view to_string(Reasoning r) {
    return r == Reasoning::result_only ? "result_only" : "reason_and_result";
}

std::string_view to_string(ActionMode a) {
    switch (a) {
        case ActionMode::no_action: return "no_action";
        case ActionMode::text_action: return "text_action";
        case ActionMode::image_action: return "image_action";
    }
    return "no_action";
}

Reasoning parse_reasoning(std::string_view s) {
    if (s == "result_only") return Reasoning::result_only;
    if (s == "reason_and_result") return Reasoning::reason_and_result;
    throw ParseError("unknown reasoning mode '" + std::string(s) + "'");
}

ActionMode parse_action_mode(std::string_view s) {
    if (s == "no_action") return ActionMode::no_action;
    if (s == "text_action") return ActionMode::text_action;
    if (s == "image_action") return ActionMode::image_action;
    throw ParseError("unknown action mode '" + std::string(s) + "'");
}

EvalMode default_mode(dataset::Language language) {
    if (language == dataset::Language::english) return {Reasoning::result_only, ActionMode::image_action};
    return {Reasoning::reason_and_result, ActionMode::text_action};
}

}  // namespace mobench::eval
