#include "helpers.hpp"

#include <atomic>

#include <unistd.h>

#include "mobench/util/image.hpp"

namespace mobench::testing {

namespace stdfs = std::filesystem;

TempDir::TempDir(const std::string& prefix) {
    static std::atomic<int> counter{0};
    path_ = stdfs::temp_directory_path() /
            (prefix + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    stdfs::remove_all(path_);
    stdfs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    stdfs::remove_all(path_, ec);
}

stdfs::path data_dir() { return MOBENCH_TEST_DATA; }

std::string solid_png(std::uint32_t seed, int width, int height) {
    const Rgb c{static_cast<std::uint8_t>(seed & 0xff), static_cast<std::uint8_t>((seed >> 8) & 0xff),
                static_cast<std::uint8_t>((seed >> 16) & 0xff)};
    return encode_png(Image(width, height, c));
}

dataset::TaskSpec single_task(const std::string& id, std::vector<std::string> components, int golden) {
    dataset::TaskSpec t;
    t.id = id;
    t.scope = dataset::Scope::single_app;
    t.apps = {"App"};
    t.description = "Task " + id;
    t.golden_steps = golden;
    t.key_components = std::move(components);
    return t;
}

dataset::TaskSpec open_task(const std::string& id) {
    dataset::TaskSpec t;
    t.id = id;
    t.scope = dataset::Scope::open_ended;
    t.apps = {"App"};
    t.description = "Explore " + id;
    return t;
}

dataset::TaskSpec cross_task(const std::string& id, std::vector<std::string> apps, int golden) {
    dataset::TaskSpec t;
    t.id = id;
    t.scope = dataset::Scope::cross_app;
    t.description = "Cross task " + id;
    t.golden_steps = golden;
    std::vector<dataset::SubtaskSpec> subs;
    for (const auto& app : apps) subs.push_back({app, "Do something in " + app, false, std::nullopt});
    t.apps = std::move(apps);
    t.subtasks = std::move(subs);
    return t;
}

agent::Trajectory make_trajectory(const std::string& agent, const std::string& task,
                                  const std::vector<std::string>& pngs, agent::Termination termination) {
    agent::Trajectory t;
    t.agent_name = agent;
    t.task_id = task;
    t.termination = termination;
    t.step_budget = static_cast<int>(pngs.size()) + 4;
    t.device_serial = "mock-1";
    double clock = 0.0;
    t.started_at = clock;
    for (std::size_t i = 0; i < pngs.size(); ++i) {
        t.screenshots.push_back({static_cast<int>(i), pngs[i], clock});
        if (i + 1 < pngs.size()) {
            agent::StepRecord s;
            s.step = static_cast<int>(i);
            s.decision.action = device::Tap{100 + static_cast<int>(i), 200};
            s.latency_s = 0.5;
            s.prompt_tokens = 1000;
            s.completion_tokens = 50;
            t.steps.push_back(s);
            clock += 1.0;
        }
    }
    agent::StepRecord last;
    last.step = static_cast<int>(pngs.size()) - 1;
    if (termination == agent::Termination::self_reported_completion) {
        last.decision.kind = agent::DecisionKind::complete;
        t.final_decision = last;
    } else if (termination == agent::Termination::error) {
        last.decision.kind = agent::DecisionKind::abort;
        last.decision.reason = "gave up";
        t.final_decision = last;
        t.error_class = agent::ErrorClass::expected;
        t.error_kind = agent::ErrorKind::agent_abort;
        t.error_message = "gave up";
    } else {
        t.step_budget = static_cast<int>(t.steps.size());
    }
    t.finished_at = clock + 1.0;
    return t;
}

int uniform(std::mt19937& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

}  // namespace mobench::testing
