#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mobench/dataset/task.hpp"
#include "mobench/eval/cross.hpp"
#include "mobench/eval/single.hpp"
#include "mobench/eval/verdict.hpp"
#include "mobench/providers/chat.hpp"
#include "mobench/providers/ocr.hpp"

namespace mobench::eval {

enum class EvalScope { single, cross, all };

EvalScope parse_eval_scope(std::string_view s);

struct EpisodeVerdict {
    std::string agent;
    std::string task;
    dataset::Scope scope = dataset::Scope::single_app;
    EvalMode mode;
    Verdict verdict;
};

struct RunEvalOptions {
    EvalScope scope = EvalScope::all;
    /// Mode for single-app and open-ended tasks; wins over `language_modes`.
    std::optional<EvalMode> mode;
    /// Per-language replacements for the default modes.
    std::map<dataset::Language, EvalMode> language_modes;
    DetectOptions detect;
    CrossOptions cross;
    /// Re-judge episodes that already have a verdict.
    bool force = false;
};

struct RunEvalResult {
    std::vector<EpisodeVerdict> verdicts;  ///< every verdict in the file, sorted by (agent, task)
    int judged = 0;                        ///< episodes evaluated by this call
    int skipped = 0;                       ///< already present and kept
};

/// Evaluates every stored episode of `run_dir` whose task is in scope and
/// merges the results into `<run_dir>/verdicts.json`; cross-app audits go to
/// `<run_dir>/cross_audit.json`. Unreadable episodes and tasks missing from
/// `tasks` become evaluation-failure verdicts.
RunEvalResult evaluate_run(const std::filesystem::path& run_dir, const dataset::TaskSet& tasks,
                           providers::ChatProvider& chat, providers::OcrEngine& ocr, const RunEvalOptions& options);

nlohmann::json verdicts_to_json(const std::vector<EpisodeVerdict>& verdicts);
std::vector<EpisodeVerdict> verdicts_from_json(const nlohmann::json& j);
/// Empty when the file does not exist. Throws ParseError.
std::vector<EpisodeVerdict> load_verdicts(const std::filesystem::path& run_dir);

}  // namespace mobench::eval
