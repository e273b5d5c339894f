#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mobench/agent/trajectory.hpp"
#include "mobench/dataset/task.hpp"
#include "mobench/eval/single.hpp"
#include "mobench/eval/verdict.hpp"
#include "mobench/providers/chat.hpp"

namespace mobench::eval {

// ---- subtask generation and review ----------------------------------------

/// Parses a subtask-generation reply ({"subtask_1": {...}, ...}, Python
/// literals tolerated). Subtasks are ordered by their number. "None" and empty
/// memories become nullopt. Throws ParseError.
std::vector<dataset::SubtaskSpec> parse_subtasks(std::string_view reply);

struct SubtaskProposal {
    std::string task_id;
    std::vector<dataset::SubtaskSpec> subtasks;
    std::string raw_reply;
    int attempts = 0;
    providers::Usage usage;
};

/// Asks the model for a subtask split; unparseable replies are regenerated up
/// to `max_regenerations` times, after which Error asks for manual authoring.
SubtaskProposal generate_subtasks(const dataset::TaskSpec& task, providers::ChatProvider& chat,
                                  const JudgeOptions& options, int max_regenerations = 2);

/// Review file: the proposal plus an "approved" flag the reviewer sets after
/// editing. Export always writes approved=false.
std::string export_review(const dataset::TaskSpec& task, const SubtaskProposal& proposal);

struct ReviewedSubtasks {
    std::string task_id;
    std::vector<dataset::SubtaskSpec> subtasks;
};

/// Throws ParseError for a malformed file and ValidationError when the file is
/// not approved or the subtasks break their invariants.
ReviewedSubtasks import_review(std::string_view review_json);

/// Replaces the subtasks of the reviewed task; the updated set is revalidated.
void apply_review(dataset::TaskSet& set, const ReviewedSubtasks& review);

// ---- stage 1: segmentation ------------------------------------------------

/// Screenshot range of one app-list entry, 0-based and inclusive. -1/-1 marks
/// a missing app; -2 marks an index the provider gave outside the 1-based range.
struct AppSegment {
    std::string app_key;
    int start = -1;
    int end = -1;
    friend bool operator==(const AppSegment&, const AppSegment&) = default;
};

using Segmentation = std::vector<AppSegment>;

inline constexpr int kOutOfRangeIndex = -2;

/// Provider indices are 1-based as in the prompt example; -1 means missing.
int from_provider_index(long raw);

enum class SegmentViolationKind { missing_app, malformed, inverted, out_of_range, too_short, overlap, order, app_order };

std::string_view to_string(SegmentViolationKind kind);

struct SegmentViolation {
    SegmentViolationKind kind;
    std::string detail;
};

/// Parses the last JSON object of the reply whose values all carry
/// "start screen" and "end screen", in reply order. Throws ParseError.
Segmentation parse_segmentation(std::string_view reply);

/// Empty result means valid. `expected_keys`, when given, must equal the
/// segment keys in order (app_order otherwise).
std::vector<SegmentViolation> validate_segmentation(const Segmentation& seg, int traj_len,
                                                    const std::vector<std::string>& expected_keys = {});

inline constexpr int kStage1MaxEdge = 1024;

struct SplitResult {
    Segmentation segmentation;
    bool parsed = false;
    int calls = 0;
    bool downsampled = false;
    providers::Usage usage;
    std::string raw_reply;
};

/// Stage-1 request: split prompts plus every screenshot, downsampled to
/// `max_edge`. One retry on an unparseable reply.
SplitResult split_trajectory(const std::vector<std::string>& pngs, const std::vector<std::string>& apps,
                             std::string_view task_description, providers::ChatProvider& chat,
                             const JudgeOptions& options, int max_edge = kStage1MaxEdge);

// ---- stage 2: memory and sequential judging -------------------------------

class MemoryStore {
public:
    /// A repeated phrase replaces the earlier summary.
    void put(const std::string& phrase, const std::string& summary);
    const std::string* find(std::string_view phrase) const;
    const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// One-paragraph summary of `pngs` for `phrase`; line breaks are folded into
/// spaces. An empty phrase makes no call and returns "".
std::string summarize_memory(const std::vector<std::string>& pngs, std::string_view phrase,
                             providers::ChatProvider& chat, const JudgeOptions& options,
                             providers::Usage* usage = nullptr);

/// Substitutes every `{phrase}` with its stored summary. Throws Error naming
/// the phrase when the store lacks it.
std::string resolve_history(const dataset::SubtaskSpec& sub, const MemoryStore& memory);

struct SubtaskAudit {
    int index = 0;
    std::string app_key;
    std::string description;
    int start = -1;
    int end = -1;
    bool judged = false;
    bool success = false;
    std::optional<std::string> reason;
    std::optional<std::string> memory_summary;
};

struct CrossOptions {
    JudgeOptions judge;
    EvalMode subtask_mode = kCrossSubtaskMode;
    int stage1_max_edge = kStage1MaxEdge;
};

struct CrossVerdict {
    Verdict verdict;
    std::vector<std::string> app_keys;
    Segmentation segmentation;
    std::vector<SegmentViolation> violations;
    std::vector<SubtaskAudit> subtasks;
    MemoryStore memory;
};

nlohmann::json cross_audit_to_json(const CrossVerdict& cv);

/// Two-stage detection: split, validate, then judge subtasks in order with
/// memory propagation, stopping at the first failure.
CrossVerdict detect_cross(const dataset::TaskSpec& task, const agent::Trajectory& traj,
                          providers::ChatProvider& chat, const CrossOptions& options);

}  // namespace mobench::eval
