#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mobench/dataset/task.hpp"
#include "mobench/eval/mode.hpp"
#include "mobench/eval/single.hpp"
#include "mobench/providers/cost.hpp"

namespace mobench::cli {

struct JudgeConfig {
    std::string endpoint = "https://api.openai.com/v1";
    std::string model = "gpt-4o";
    double temperature = 0.0;
    int max_images = 30;
    int parse_retries = 1;
    double requests_per_minute = 0.0;  ///< 0: unlimited
    std::optional<int> max_tokens;
    int timeout_s = 120;
};

struct OcrConfig {
    /// Adapter command: reads a PNG on stdin, prints a JSON box array.
    std::vector<std::string> command;
    int timeout_s = 60;
    eval::OcrPolicy on_unavailable = eval::OcrPolicy::fail;
    bool eager = false;
    /// Mock OCR fixture used with --mock-providers.
    std::filesystem::path fixture;
};

/// The declarative harness configuration. Credentials are never part of it;
/// the judge key comes from HARNESS_API_KEY.
struct HarnessConfig {
    std::filesystem::path tasks;
    std::filesystem::path output_root;
    JudgeConfig judge;
    OcrConfig ocr;
    providers::CostTable costs;
    std::map<std::string, std::string> agent_models;
    std::map<dataset::Language, eval::EvalMode> eval_modes;
    /// Run-plan keys (devices, snapshot_id, max_reruns, budget, concurrency,
    /// clock) used when a plan file leaves them out.
    nlohmann::json plan_defaults = nlohmann::json::object();
};

/// Unknown keys are rejected and referenced paths must exist. Relative paths
/// are resolved against `base_dir`. Throws ConfigError.
HarnessConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
HarnessConfig load_config(const std::filesystem::path& path);

/// "reasoning:action", e.g. "result_only:image_action". Throws ConfigError.
eval::EvalMode parse_mode_flag(std::string_view s);

}  // namespace mobench::cli
