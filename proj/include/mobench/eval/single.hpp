#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mobench/agent/trajectory.hpp"
#include "mobench/dataset/task.hpp"
#include "mobench/eval/mode.hpp"
#include "mobench/eval/verdict.hpp"
#include "mobench/providers/chat.hpp"
#include "mobench/providers/ocr.hpp"
#include "mobench/util/image.hpp"

namespace mobench::eval {

// ---- coarse detection -----------------------------------------------------

/// Lowercased concatenation of the box texts in reading order, with every
/// whitespace code point removed.
std::string normalize(const std::vector<providers::OcrBox>& boxes);

/// Lowercase and strip whitespace, so components survive normalization.
std::string normalize_component(std::string_view component);

struct CoarseResult {
    bool matched = false;
    std::optional<int> matched_index;
    /// Normalized text per screenshot; nullopt where the scan never looked.
    std::vector<std::optional<std::string>> normalized_texts;
};

/// Backward scan from the last screenshot: the first screenshot whose text
/// contains every component wins. `text_at(i)` is called at most once per
/// index and only as far as the scan goes. An empty component list matches
/// the last screenshot; zero screenshots never match.
CoarseResult coarse_scan(std::size_t count, const std::vector<std::string>& components,
                         const std::function<std::string(std::size_t)>& text_at);

enum class OcrPolicy { fail, empty };

struct CoarseOptions {
    bool eager = false;  ///< OCR every screenshot before scanning
    OcrPolicy on_unavailable = OcrPolicy::fail;
};

/// OCR-backed coarse match. With OcrPolicy::fail an unavailable engine
/// propagates OcrUnavailable; with OcrPolicy::empty the text is treated as
/// blank and a warning is appended.
CoarseResult coarse_match(const std::vector<std::string>& pngs, const std::vector<std::string>& components,
                          providers::OcrEngine& ocr, const CoarseOptions& options,
                          std::vector<std::string>* warnings = nullptr);

// ---- action evidence ------------------------------------------------------

inline constexpr int kDotRadius = 20;
inline constexpr int kStripHeight = 120;
inline constexpr int kSeparatorHeight = 4;

/// Red dot at the position of a tap or long press; other actions leave the
/// image untouched.
void draw_action_dot(Image& image, const device::UiAction& action);

/// Screenshot with a blue separator and a white strip holding `description`.
Image with_action_strip(const Image& screenshot, std::string_view description);

/// "Screenshot k: <description>" for every screenshot with an action (1-based).
std::string extra_action_text(const std::vector<std::optional<device::UiAction>>& actions);

struct Evidence {
    std::vector<std::string> pngs;
    std::string extra_action;  ///< text_action only
};

/// `actions[i]` is the action taken on screenshot i (nullopt for none, and
/// for the last screenshot). no_action returns the screenshots unchanged.
Evidence render_action_evidence(const std::vector<std::string>& pngs,
                                const std::vector<std::optional<device::UiAction>>& actions, ActionMode mode);

// ---- fine detection -------------------------------------------------------

/// `k` indices spread uniformly over [0, n), always keeping the first and the
/// last; all indices when n <= k.
std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t k);

/// Bit after the last "Result:" (case-insensitive, markdown markup allowed
/// around the colon). Throws ParseError when there is none.
bool parse_verdict(std::string_view reply);

/// Text after the last "Reason:" up to the following "Result", trimmed.
std::optional<std::string> parse_reason(std::string_view reply);

struct JudgeOptions {
    std::string model_id = "gpt-4o";
    double temperature = 0.0;
    std::size_t max_images = 30;
    int parse_retries = 1;
};

struct JudgeInput {
    std::string task_description;
    std::string history_info;
    std::vector<std::string> pngs;
    std::vector<std::optional<device::UiAction>> actions;
};

/// Screenshots and executed actions of a whole trajectory.
JudgeInput judge_input(const dataset::TaskSpec& task, const agent::Trajectory& traj);

/// The judge request exactly as sent: system prompt, then the base prompt
/// followed by the (evidence-rendered, subsampled) screenshots.
providers::ChatRequest build_judge_request(const JudgeInput& input, const EvalMode& mode, const JudgeOptions& options,
                                           bool* subsampled = nullptr);

/// Fine detection. Provider errors and replies that stay unparseable after
/// the retries yield an evaluation failure rather than a task failure.
Verdict judge(const JudgeInput& input, const EvalMode& mode, providers::ChatProvider& chat,
              const JudgeOptions& options);

struct DetectOptions {
    JudgeOptions judge;
    CoarseOptions coarse;
};

/// Coarse-to-fine detection for single_app and open_ended tasks. Open-ended
/// tasks skip the coarse stage.
Verdict detect_single(const dataset::TaskSpec& task, const agent::Trajectory& traj, const EvalMode& mode,
                      providers::OcrEngine& ocr, providers::ChatProvider& chat, const DetectOptions& options);

}  // namespace mobench::eval
