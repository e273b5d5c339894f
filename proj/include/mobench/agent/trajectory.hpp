#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mobench/device/action.hpp"
#include "mobench/device/device.hpp"

namespace mobench::agent {

enum class DecisionKind { act, complete, abort };

std::string_view to_string(DecisionKind kind);

struct AgentDecision {
    DecisionKind kind = DecisionKind::act;
    std::optional<device::UiAction> action;  ///< set iff kind == act
    std::string reason;                      ///< abort reason, free text
    std::string category;                    ///< abort category, e.g. "network"
    friend bool operator==(const AgentDecision&, const AgentDecision&) = default;
};

struct StepRecord {
    int step = 0;
    AgentDecision decision;
    /// Seconds from sending the observation to the decision being executed.
    double latency_s = 0.0;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    std::string raw_agent_log;
    friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

enum class Termination { self_reported_completion, max_steps_reached, error };
enum class ErrorClass { expected, unexpected };

/// Episode error taxonomy. The first six are the agent's own limitations;
/// the rest are environment failures.
enum class ErrorKind {
    protocol_violation,
    invalid_action,
    missing_input,
    agent_abort,
    agent_timeout,
    agent_crash,
    device_offline,
    capture_timeout,
    device_failure,
    network_failure,
};

std::string_view to_string(Termination t);
std::string_view short_name(Termination t);  ///< "SRC", "MSR", "Error"
std::string_view to_string(ErrorClass c);
std::string_view to_string(ErrorKind k);
Termination parse_termination(std::string_view s);
ErrorClass parse_error_class(std::string_view s);
ErrorKind parse_error_kind(std::string_view s);

/// One executed episode. screenshots[i] is the observation before steps[i];
/// the decision that ended the episode (complete, abort, or an act that could
/// not be executed) is kept in `final_decision`, so that
/// screenshots.size() == steps.size() + 1 unless an error interrupted a
/// capture, in which case the two sizes are equal.
struct Trajectory {
    std::string task_id;
    std::string agent_name;
    std::vector<device::Screenshot> screenshots;
    std::vector<StepRecord> steps;
    std::optional<StepRecord> final_decision;
    Termination termination = Termination::error;
    std::optional<ErrorClass> error_class;
    std::optional<ErrorKind> error_kind;
    std::string error_message;
    int step_budget = 0;
    std::string device_serial;
    int attempts = 1;
    double started_at = 0.0;
    double finished_at = 0.0;

    double wall_time_s() const { return finished_at - started_at; }
    long prompt_tokens() const;
    long completion_tokens() const;
    /// Action executed after screenshot i, if any.
    std::optional<device::UiAction> action_after(std::size_t i) const;

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Structural invariants; empty when the trajectory is consistent.
std::vector<std::string> check_trajectory(const Trajectory& t);

nlohmann::json step_to_json(const StepRecord& s);
StepRecord step_from_json(const nlohmann::json& j);
nlohmann::json decision_to_json(const AgentDecision& d);
AgentDecision decision_from_json(const nlohmann::json& j);

/// On-disk layout: `<root>/<agent>/<task>/` holding NNNN.png screenshots,
/// steps.log (one JSON record per line) and meta.json. Episodes are written to
/// a hidden staging directory and renamed into place, so a directory that
/// exists is always complete.
class TrajectoryStore {
public:
    explicit TrajectoryStore(std::filesystem::path root);

    const std::filesystem::path& root() const noexcept { return root_; }
    std::filesystem::path episode_dir(const std::string& agent, const std::string& task) const;
    std::filesystem::path staging_dir(const std::string& agent, const std::string& task) const;

    bool exists(const std::string& agent, const std::string& task) const;
    void save(const Trajectory& t) const;
    /// Loads screenshots too unless `with_images` is false.
    Trajectory load(const std::string& agent, const std::string& task, bool with_images = true) const;
    /// Every completed (agent, task) pair, sorted.
    std::vector<std::pair<std::string, std::string>> list() const;
    /// Removes staging directories left behind by an interrupted run.
    int clean_staging() const;

private:
    std::filesystem::path root_;
};

}  // namespace mobench::agent
