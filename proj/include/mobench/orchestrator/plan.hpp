#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mobench/agent/session.hpp"
#include "mobench/device/device.hpp"

namespace mobench::orchestrator {

enum class Transport { mock, adb };

struct DeviceSpec {
    std::string serial;
    device::DeviceKind kind = device::DeviceKind::emulator;
    Transport transport = Transport::mock;
    /// Mock transport: scenario file; the built-in basic scenario when empty.
    std::filesystem::path scenario;
    std::string adb_path = "adb";
    std::optional<device::ScreenSize> screen_size;
    /// Physical devices: shell command run before every cycle; `{serial}` is
    /// substituted. Empty means nothing to clean.
    std::string cleanup;
};

enum class ClockKind { system, simulated };

struct RunPlan {
    std::vector<agent::AgentDescriptor> agents;
    /// Task ids to run, in this order; every task of the task file when empty.
    std::vector<std::string> tasks;
    std::filesystem::path task_file;
    std::vector<DeviceSpec> devices;
    int concurrency = 1;
    std::string snapshot_id = "clean";
    int max_reruns = 2;
    double budget_multiplier = 2.0;
    int open_ended_budget = 20;
    ClockKind clock = ClockKind::system;

    /// Throws ValidationError listing every problem.
    void validate() const;
};

/// Parses the run-plan JSON. Unknown keys are rejected; relative paths are
/// resolved against `base_dir`. Throws ParseError or ValidationError.
RunPlan parse_plan(std::string_view json_text, const std::filesystem::path& base_dir = {});
RunPlan load_plan(const std::filesystem::path& path);

nlohmann::json plan_to_json(const RunPlan& plan);

/// sha256 of the canonical plan JSON.
std::string plan_digest(const RunPlan& plan);

}  // namespace mobench::orchestrator
