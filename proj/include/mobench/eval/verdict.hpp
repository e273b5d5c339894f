#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mobench/eval/mode.hpp"
#include "mobench/providers/chat.hpp"

namespace mobench::eval {

/// Which stage decided. `cross` covers both segmentation and subtask judging.
enum class Stage { coarse_reject, fine, cross };

std::string_view to_string(Stage s);
Stage parse_stage(std::string_view s);

struct Verdict {
    bool success = false;
    Stage stage = Stage::fine;
    std::optional<std::string> judge_reason;
    providers::Usage judge_usage;
    int judge_calls = 0;
    /// The evaluator itself failed (unparseable reply, OCR or provider
    /// failure, missing data). Not a task failure; flagged for manual review.
    bool evaluation_failure = false;
    std::string failure_message;
    std::optional<int> coarse_matched_index;
    /// More screenshots than the judge image limit; a uniform subset was sent.
    bool subsampled = false;
    int images_sent = 0;
    std::vector<std::string> warnings;

    friend bool operator==(const Verdict&, const Verdict&) = default;
};

nlohmann::json verdict_to_json(const Verdict& v);
Verdict verdict_from_json(const nlohmann::json& j);

}  // namespace mobench::eval
