#include "mobench/eval/verdict.hpp"

#include <nlohmann/json.hpp>

#include "mobench/util/error.hpp"

namespace mobench::eval {

using json = nlohmann::json;

std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::coarse_reject: return "coarse_reject";
        case Stage::fine: return "fine";
        case Stage::cross: return "cross";
    }
    return "fine";
}

Stage parse_stage(std::string_view s) {
    if (s == "coarse_reject") return Stage::coarse_reject;
    if (s == "fine") return Stage::fine;
    if (s == "cross") return Stage::cross;
    throw ParseError("unknown verdict stage '" + std::string(s) + "'");
}

json verdict_to_json(const Verdict& v) {
    return json{
        {"success", v.success},
        {"stage", to_string(v.stage)},
        {"judge_reason", v.judge_reason ? json(*v.judge_reason) : json(nullptr)},
        {"judge_usage", {{"prompt_tokens", v.judge_usage.prompt_tokens}, {"completion_tokens", v.judge_usage.completion_tokens}}},
        {"judge_calls", v.judge_calls},
        {"evaluation_failure", v.evaluation_failure},
        {"failure_message", v.failure_message},
        {"coarse_matched_index", v.coarse_matched_index ? json(*v.coarse_matched_index) : json(nullptr)},
        {"subsampled", v.subsampled},
        {"images_sent", v.images_sent},
        {"warnings", v.warnings},
    };
}

Verdict verdict_from_json(const json& j) {
    try {
        Verdict v;
        v.success = j.at("success").get<bool>();
        v.stage = parse_stage(j.at("stage").get<std::string>());
        if (!j.at("judge_reason").is_null()) v.judge_reason = j.at("judge_reason").get<std::string>();
        v.judge_usage.prompt_tokens = j.at("judge_usage").at("prompt_tokens").get<long>();
        v.judge_usage.completion_tokens = j.at("judge_usage").at("completion_tokens").get<long>();
        v.judge_calls = j.at("judge_calls").get<int>();
        v.evaluation_failure = j.at("evaluation_failure").get<bool>();
        v.failure_message = j.at("failure_message").get<std::string>();
        if (!j.at("coarse_matched_index").is_null()) v.coarse_matched_index = j.at("coarse_matched_index").get<int>();
        v.subsampled = j.at("subsampled").get<bool>();
        v.images_sent = j.at("images_sent").get<int>();
        v.warnings = j.at("warnings").get<std::vector<std::string>>();
        return v;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed verdict: ") + e.what());
    }
}

}  // namespace mobench::eval
