#pragma once

#include <filesystem>
#include <string>

#include "mobench/agent/session.hpp"
#include "mobench/agent/trajectory.hpp"
#include "mobench/dataset/task.hpp"
#include "mobench/device/device.hpp"
#include "mobench/util/clock.hpp"

namespace mobench::agent {

struct EpisodeContext {
    std::string agent_name;
    int budget = 0;
    /// Observation screenshots are written here as NNNN.png.
    std::filesystem::path workdir;
};

/// Drives one agent through one task on a prepared device: capture, observe,
/// decide, perform, until completion, abort, error or the step budget. The
/// screenshot taken after the last budgeted step is kept, so a budget-limited
/// episode has budget + 1 screenshots. Never throws for agent or device
/// failures; they end up in the trajectory's error fields.
Trajectory run_episode(AgentSession& session, const dataset::TaskSpec& task, device::Device& dev, Clock& clock,
                       const EpisodeContext& ctx);

/// Fixed taxonomy: agent-caused kinds are expected, environment kinds are not.
ErrorClass classify_error(ErrorKind kind);

/// Maps a device exception onto the taxonomy.
ErrorKind error_kind_for(const device::DeviceError& e);

enum class RerunDecision { keep, rerun };

inline constexpr int kDefaultMaxReruns = 2;

/// Rerun only unexpected errors, and only while `reruns_so_far < max_reruns`.
RerunDecision rerun_policy(const Trajectory& outcome, int reruns_so_far, int max_reruns = kDefaultMaxReruns);

}  // namespace mobench::agent
