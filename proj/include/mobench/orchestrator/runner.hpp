#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mobench/agent/trajectory.hpp"
#include "mobench/dataset/task.hpp"
#include "mobench/orchestrator/plan.hpp"

namespace mobench::orchestrator {

enum class PairStatus { pending, done, failed };

std::string_view to_string(PairStatus s);
PairStatus parse_pair_status(std::string_view s);

struct PairRecord {
    std::string agent;
    std::string task;
    PairStatus status = PairStatus::pending;
    int attempts = 0;
    std::string termination;  ///< SRC, MSR or Error once done
    std::string device_serial;
    std::string note;
};

/// Contents of `<run>/index.json`.
struct RunRecord {
    std::string plan_digest;
    std::vector<PairRecord> pairs;
    std::vector<std::string> quarantined;
    bool aborted = false;

    std::size_t count(PairStatus s) const;
    const PairRecord* find(const std::string& agent, const std::string& task) const;
};

nlohmann::json run_record_to_json(const RunRecord& r);
RunRecord run_record_from_json(const nlohmann::json& j);
RunRecord load_run_record(const std::filesystem::path& run_dir);

/// Restores the snapshot on emulators and runs the cleanup command on
/// physical devices. Throws device::DeviceError when the device cannot be
/// brought back to a known state.
void prepare_cycle(device::Device& dev, const DeviceSpec& spec, const std::string& snapshot_id);

std::unique_ptr<device::Device> make_device(const DeviceSpec& spec);

struct ExecuteOptions {
    bool resume = false;
    /// Stop handing out work after this many pairs finish in this invocation,
    /// leaving the rest pending as if the run had been killed.
    std::optional<int> stop_after;
    std::function<std::unique_ptr<device::Device>(const DeviceSpec&)> device_factory = make_device;
};

/// Runs every (task, agent) pair once, tasks major and agents minor, one
/// worker per device with at most `plan.concurrency` episodes in flight.
/// Unexpected errors are rerun per policy; a device that fails to prepare is
/// quarantined and its pair handed to another device. Writes trajectories,
/// tasks.json, plan.json and index.json under `out`.
/// Throws ConfigError when `out` already holds a run and `resume` is false, or
/// holds a different plan.
RunRecord execute_plan(const RunPlan& plan, const dataset::TaskSet& tasks, const std::filesystem::path& out,
                       const ExecuteOptions& options = {});

/// The tasks a plan selects, in plan order. Throws ValidationError for ids
/// missing from the set.
std::vector<dataset::TaskSpec> select_tasks(const RunPlan& plan, const dataset::TaskSet& tasks);

}  // namespace mobench::orchestrator
