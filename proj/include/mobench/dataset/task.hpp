#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mobench::dataset {

enum class Language { english, chinese };
enum class Scope { single_app, cross_app, open_ended };

std::string_view to_string(Language language);
std::string_view to_string(Scope scope);
Language parse_language(std::string_view s);
Scope parse_scope(std::string_view s);

/// One app-bound step of a cross-app task. `task` may reference the memory
/// of an earlier subtask through a `{phrase}` placeholder.
struct SubtaskSpec {
    std::string app;
    std::string task;
    bool history = false;
    std::optional<std::string> memory;

    friend bool operator==(const SubtaskSpec&, const SubtaskSpec&) = default;
};

struct TaskSpec {
    std::string id;
    Language language = Language::english;
    Scope scope = Scope::single_app;
    std::vector<std::string> apps;
    std::string category;
    int difficulty = 1;
    std::string description;
    std::optional<int> golden_steps;
    /// Stored lowercased. Present for single_app, optional for open_ended.
    std::optional<std::vector<std::string>> key_components;
    /// Reviewed subtasks, cross_app only.
    std::optional<std::vector<SubtaskSpec>> subtasks;
    /// App data lives off-device and needs manual cleanup after a cycle.
    bool manual_cleanup = false;

    friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

class TaskSet {
public:
    int version = 1;
    std::vector<TaskSpec> tasks;

    const TaskSpec* find(std::string_view id) const;
    const TaskSpec& at(std::string_view id) const;

    /// Task counts keyed by "<language>/<scope>".
    std::map<std::string, int> counts() const;

    friend bool operator==(const TaskSet&, const TaskSet&) = default;
};

/// Every `{phrase}` placeholder in a subtask description, in order.
std::vector<std::string> placeholders(std::string_view task);

/// Subtask-chain invariants (adjacent apps differ, placeholders resolve to
/// earlier memories). Returns human-readable violations; empty means valid.
std::vector<std::string> validate_subtasks(const std::vector<SubtaskSpec>& subtasks,
                                           std::string_view task_id);

/// `draft` accepts cross-app tasks whose subtasks have not been reviewed yet.
enum class Strictness { full, draft };

/// All TaskSpec invariants for a single task.
std::vector<std::string> validate_task(const TaskSpec& task, Strictness strictness = Strictness::full);

/// Parses the documented task-file JSON. Throws ParseError on malformed input
/// and ValidationError listing every violated invariant (with task ids).
TaskSet parse_taskset(std::string_view json_text, Strictness strictness = Strictness::full);

/// Loads a task file, or every `*.json` file of a directory in name order.
TaskSet load_taskset(const std::filesystem::path& path, Strictness strictness = Strictness::full);

std::string serialize_taskset(const TaskSet& set);

/// Keys for an ordered app list: apps that occur more than once get an
/// occurrence suffix ("AppA_1", "AppB", "AppA_2"); unique apps keep their name.
std::vector<std::string> app_keys(const std::vector<std::string>& apps);

/// Agent step budget: ceil(multiplier * golden_steps) for closed tasks,
/// `open_ended_cap` for open-ended ones.
int step_budget(const TaskSpec& task, double multiplier = 2.0, int open_ended_cap = 20);

}  // namespace mobench::dataset
