#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mobench/agent/trajectory.hpp"
#include "mobench/dataset/task.hpp"

namespace mobench::testing {

/// Directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& prefix = "mobench-test");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

std::filesystem::path data_dir();

/// Small solid PNG whose colour is derived from `seed`; distinct seeds below
/// 2^24 give distinct images.
std::string solid_png(std::uint32_t seed, int width = 32, int height = 48);

dataset::TaskSpec single_task(const std::string& id, std::vector<std::string> components, int golden = 4);
dataset::TaskSpec open_task(const std::string& id);
dataset::TaskSpec cross_task(const std::string& id, std::vector<std::string> apps, int golden = 8);

/// Trajectory with the given screenshots; every screenshot but the last is
/// followed by a tap, and the final decision matches `termination`.
agent::Trajectory make_trajectory(const std::string& agent, const std::string& task,
                                  const std::vector<std::string>& pngs,
                                  agent::Termination termination = agent::Termination::self_reported_completion);

/// Uniform integer in [lo, hi].
int uniform(std::mt19937& rng, int lo, int hi);

}  // namespace mobench::testing
