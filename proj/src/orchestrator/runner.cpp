#include "mobench/orchestrator/runner.hpp"

#include <condition_variable>
#include <deque>
#include <mutex>
#include <semaphore>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "mobench/agent/episode.hpp"
#include "mobench/device/adb_device.hpp"
#include "mobench/device/mock_device.hpp"
#include "mobench/util/fs.hpp"
#include "mobench/util/subprocess.hpp"
#include "mobench/util/text.hpp"

namespace mobench::orchestrator {

using json = nlohmann::json;
namespace stdfs = std::filesystem;

std::string_view to_string(PairStatus s) {
    switch (s) {
        case PairStatus::pending: return "pending";
        case PairStatus::done: return "done";
        case PairStatus::failed: return "failed";
    }
    return "pending";
}

PairStatus parse_pair_status(std::string_view s) {
    if (s == "pending") return PairStatus::pending;
    if (s == "done") return PairStatus::done;
    if (s == "failed") return PairStatus::failed;
    throw ParseError("unknown pair status '" + std::string(s) + "'");
}

std::size_t RunRecord::count(PairStatus s) const {
    std::size_t n = 0;
    for (const auto& p : pairs) n += p.status == s;
    return n;
}

const PairRecord* RunRecord::find(const std::string& agent, const std::string& task) const {
    for (const auto& p : pairs) {
        if (p.agent == agent && p.task == task) return &p;
    }
    return nullptr;
}

json run_record_to_json(const RunRecord& r) {
    json pairs = json::array();
    for (const auto& p : r.pairs) {
        pairs.push_back({{"agent", p.agent},
                         {"task", p.task},
                         {"status", to_string(p.status)},
                         {"attempts", p.attempts},
                         {"termination", p.termination},
                         {"device", p.device_serial},
                         {"note", p.note}});
    }
    return {{"format", "mobench.run"},
            {"version", 1},
            {"plan_digest", r.plan_digest},
            {"aborted", r.aborted},
            {"quarantined", r.quarantined},
            {"pairs", pairs}};
}

RunRecord run_record_from_json(const json& j) {
    try {
        if (j.at("format") != "mobench.run" || j.at("version") != 1) throw ParseError("not a mobench run index");
        RunRecord r;
        r.plan_digest = j.at("plan_digest").get<std::string>();
        r.aborted = j.at("aborted").get<bool>();
        r.quarantined = j.at("quarantined").get<std::vector<std::string>>();
        for (const auto& p : j.at("pairs")) {
            r.pairs.push_back({p.at("agent").get<std::string>(), p.at("task").get<std::string>(),
                               parse_pair_status(p.at("status").get<std::string>()), p.at("attempts").get<int>(),
                               p.at("termination").get<std::string>(), p.at("device").get<std::string>(),
                               p.value("note", "")});
        }
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad run index: ") + e.what());
    }
}

RunRecord load_run_record(const stdfs::path& run_dir) {
    const json j = json::parse(fs::read_file(run_dir / "index.json"), nullptr, false);
    if (j.is_discarded()) throw ParseError("index.json is not valid JSON");
    return run_record_from_json(j);
}

void prepare_cycle(device::Device& dev, const DeviceSpec& spec, const std::string& snapshot_id) {
    using device::DeviceError;
    if (!dev.reachable()) throw DeviceError(DeviceError::Code::offline, "device " + spec.serial + " is unreachable");
    if (spec.kind == device::DeviceKind::emulator) {
        dev.snapshot_load(snapshot_id);
        return;
    }
    if (spec.cleanup.empty()) return;
    const auto cmd = text::substitute(spec.cleanup, {{"serial", text::shell_quote(spec.serial)}});
    const auto r = run_command({"/bin/sh", "-c", cmd}, {}, std::chrono::minutes(2));
    if (r.exit_code != 0) {
        throw DeviceError(DeviceError::Code::command_failed,
                          "cleanup on " + spec.serial + " exited " + std::to_string(r.exit_code) + ": " + text::trim(r.err));
    }
}

std::unique_ptr<device::Device> make_device(const DeviceSpec& spec) {
    if (spec.transport == Transport::mock) {
        auto scenario = spec.scenario.empty() ? device::MockScenario::basic() : device::MockScenario::load(spec.scenario);
        if (spec.screen_size) scenario.screen_size = *spec.screen_size;
        return std::make_unique<device::MockDevice>(spec.serial, spec.kind, std::move(scenario));
    }
    device::AdbOptions options;
    options.adb_path = spec.adb_path;
    return std::make_unique<device::AdbDevice>(spec.serial, spec.kind, spec.screen_size, options);
}

std::vector<dataset::TaskSpec> select_tasks(const RunPlan& plan, const dataset::TaskSet& tasks) {
    if (plan.tasks.empty()) return tasks.tasks;
    std::vector<dataset::TaskSpec> out;
    std::vector<std::string> missing;
    for (const auto& id : plan.tasks) {
        if (const auto* t = tasks.find(id)) {
            out.push_back(*t);
        } else {
            missing.push_back("plan task '" + id + "' is not in the task set");
        }
    }
    if (!missing.empty()) throw ValidationError(std::move(missing));
    return out;
}

namespace {

struct PairJob {
    const agent::AgentDescriptor* agent;
    const dataset::TaskSpec* task;
    int attempts = 0;
};

enum class JobOutcome { done, device_lost, failed };

class Runner {
public:
    Runner(const RunPlan& plan, const stdfs::path& out, Clock& clock)
        : plan_(plan), out_(out), store_(out), clock_(clock), slots_(plan.concurrency) {}

    RunRecord run(RunRecord record, std::vector<PairJob> jobs, std::deque<std::size_t> queue,
                  const ExecuteOptions& options) {
        record_ = std::move(record);
        jobs_ = std::move(jobs);
        queue_ = std::move(queue);
        stop_after_ = options.stop_after;
        write_index();

        std::vector<std::unique_ptr<device::Device>> devices;
        for (const auto& spec : plan_.devices) {
            try {
                devices.push_back(options.device_factory(spec));
            } catch (const std::exception& e) {
                spdlog::warn("device {} unavailable: {}", spec.serial, e.what());
                record_.quarantined.push_back(spec.serial);
                devices.push_back(nullptr);
            }
        }
        live_ = 0;
        for (const auto& d : devices) live_ += d != nullptr;

        std::vector<std::thread> workers;
        for (std::size_t i = 0; i < devices.size(); ++i) {
            if (devices[i]) workers.emplace_back([this, &devices, i] { worker(*devices[i], plan_.devices[i]); });
        }
        for (auto& w : workers) w.join();

        std::lock_guard lock(mutex_);
        if (live_ == 0 && !queue_.empty()) {
            record_.aborted = true;
            spdlog::error("every device is unavailable; {} pairs left pending", queue_.size());
        }
        write_index();
        return record_;
    }

private:
    const RunPlan& plan_;
    stdfs::path out_;
    agent::TrajectoryStore store_;
    Clock& clock_;
    std::counting_semaphore<> slots_;
    std::mutex mutex_;
    std::condition_variable idle_;
    int in_flight_ = 0;
    RunRecord record_;
    std::vector<PairJob> jobs_;
    std::deque<std::size_t> queue_;
    std::optional<int> stop_after_;
    int finished_ = 0;
    bool stop_ = false;
    int live_ = 0;

    void write_index() { fs::write_file_atomic(out_ / "index.json", run_record_to_json(record_).dump(2) + "\n"); }

    void worker(device::Device& dev, const DeviceSpec& spec) {
        while (true) {
            slots_.acquire();
            std::size_t idx;
            {
                std::unique_lock lock(mutex_);
                idle_.wait(lock, [this] { return stop_ || !queue_.empty() || in_flight_ == 0; });
                if (stop_ || queue_.empty()) {
                    slots_.release();
                    return;
                }
                idx = queue_.front();
                queue_.pop_front();
                ++in_flight_;
            }
            std::string note;
            std::optional<agent::Trajectory> traj;
            JobOutcome outcome;
            try {
                outcome = run_job(dev, spec, jobs_[idx], traj, note);
            } catch (const std::exception& e) {
                outcome = JobOutcome::failed;
                note = e.what();
            }
            slots_.release();

            std::lock_guard lock(mutex_);
            --in_flight_;
            idle_.notify_all();
            auto& rec = record_.pairs[idx];
            rec.attempts = jobs_[idx].attempts;
            if (outcome == JobOutcome::device_lost) {
                spdlog::warn("quarantining device {}: {}", spec.serial, note);
                queue_.push_front(idx);
                record_.quarantined.push_back(spec.serial);
                rec.note = "requeued after losing " + spec.serial;
                --live_;
                write_index();
                return;
            }
            if (outcome == JobOutcome::done) {
                rec.status = PairStatus::done;
                rec.termination = std::string(agent::short_name(traj->termination));
                rec.device_serial = spec.serial;
                rec.note.clear();
            } else {
                spdlog::error("{} on {} failed: {}", rec.agent, rec.task, note);
                rec.status = PairStatus::failed;
                rec.note = note;
            }
            write_index();
            ++finished_;
            if (stop_after_ && finished_ >= *stop_after_) stop_ = true;
        }
    }

    JobOutcome run_job(device::Device& dev, const DeviceSpec& spec, PairJob& job,
                       std::optional<agent::Trajectory>& result, std::string& note) {
        const auto& task = *job.task;
        const auto& agent_desc = *job.agent;
        const int budget = dataset::step_budget(task, plan_.budget_multiplier, plan_.open_ended_budget);
        while (true) {
            try {
                prepare_cycle(dev, spec, plan_.snapshot_id);
            } catch (const Error& e) {
                note = e.what();
                return JobOutcome::device_lost;
            }
            const auto workdir = out_ / ".work" / agent_desc.name / (task.id + "." + std::to_string(job.attempts));
            stdfs::remove_all(workdir);
            agent::Trajectory t;
            try {
                auto session = agent::open_session(agent_desc, task.id, workdir);
                t = agent::run_episode(*session, task, dev, clock_, {agent_desc.name, budget, workdir});
            } catch (const agent::AgentFailure& e) {
                t = launch_failure(task, agent_desc, dev, budget, e);
            }
            ++job.attempts;
            t.attempts = job.attempts;
            spdlog::info("{} / {} on {}: {} after {} steps (attempt {})", agent_desc.name, task.id, spec.serial,
                         agent::short_name(t.termination), t.steps.size(), job.attempts);
            if (agent::rerun_policy(t, job.attempts - 1, plan_.max_reruns) == agent::RerunDecision::rerun) {
                spdlog::warn("rerunning {} / {}: {}", agent_desc.name, task.id, t.error_message);
                continue;
            }
            store_.save(t);
            const auto stderr_log = workdir / "agent.stderr";
            std::error_code ec;
            if (stdfs::exists(stderr_log) && stdfs::file_size(stderr_log, ec) > 0) {
                stdfs::copy_file(stderr_log, store_.episode_dir(agent_desc.name, task.id) / "agent.stderr",
                                 stdfs::copy_options::overwrite_existing, ec);
            }
            stdfs::remove_all(workdir, ec);
            result = std::move(t);
            return JobOutcome::done;
        }
    }

    agent::Trajectory launch_failure(const dataset::TaskSpec& task, const agent::AgentDescriptor& agent_desc,
                                     device::Device& dev, int budget, const agent::AgentFailure& e) {
        agent::Trajectory t;
        t.task_id = task.id;
        t.agent_name = agent_desc.name;
        t.step_budget = budget;
        t.device_serial = dev.handle().serial;
        t.started_at = t.finished_at = clock_.now();
        t.termination = agent::Termination::error;
        t.error_kind = e.kind();
        t.error_class = agent::classify_error(e.kind());
        t.error_message = e.what();
        return t;
    }
};

}  // namespace

RunRecord execute_plan(const RunPlan& plan, const dataset::TaskSet& tasks, const stdfs::path& out,
                       const ExecuteOptions& options) {
    plan.validate();
    const auto selected = select_tasks(plan, tasks);
    const auto digest = plan_digest(plan);

    if (stdfs::exists(out / "index.json")) {
        if (!options.resume) throw ConfigError(out.string() + " already holds a run; pass --resume to continue it");
        const auto previous = load_run_record(out);
        if (previous.plan_digest != digest) {
            throw ConfigError(out.string() + " holds a run of a different plan (digest " + previous.plan_digest + ")");
        }
    }
    stdfs::create_directories(out);
    agent::TrajectoryStore store(out);
    if (const int n = store.clean_staging(); n > 0) spdlog::info("removed {} interrupted episodes", n);
    std::error_code ec;
    stdfs::remove_all(out / ".work", ec);

    dataset::TaskSet selected_set;
    selected_set.version = tasks.version;
    selected_set.tasks = selected;
    fs::write_file_atomic(out / "tasks.json", serialize_taskset(selected_set));
    fs::write_file_atomic(out / "plan.json", plan_to_json(plan).dump(2) + "\n");

    RunRecord record;
    record.plan_digest = digest;
    std::vector<PairJob> jobs;
    std::deque<std::size_t> queue;
    for (const auto& task : selected) {
        for (const auto& a : plan.agents) {
            PairRecord rec;
            rec.agent = a.name;
            rec.task = task.id;
            if (store.exists(a.name, task.id)) {
                const auto t = store.load(a.name, task.id, false);
                rec.status = PairStatus::done;
                rec.attempts = t.attempts;
                rec.termination = std::string(agent::short_name(t.termination));
                rec.device_serial = t.device_serial;
            } else {
                queue.push_back(jobs.size());
            }
            record.pairs.push_back(std::move(rec));
            jobs.push_back({&a, &task, 0});
        }
    }

    std::unique_ptr<Clock> clock;
    if (plan.clock == ClockKind::simulated) {
        clock = std::make_unique<SimulatedClock>();
    } else {
        clock = std::make_unique<SystemClock>();
    }
    auto result = Runner(plan, out, *clock).run(std::move(record), std::move(jobs), std::move(queue), options);
    stdfs::remove_all(out / ".work", ec);
    return result;
}

}  // namespace mobench::orchestrator
