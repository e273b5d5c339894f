#include <doctest.h>

#include <algorithm>
#include <map>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "mobench/device/mock_device.hpp"
#include "mobench/orchestrator/plan.hpp"
#include "mobench/orchestrator/runner.hpp"
#include "mobench/util/fs.hpp"
#include "mobench/util/text.hpp"

using namespace mobench;
using namespace mobench::orchestrator;
using json = nlohmann::json;
namespace stdfs = std::filesystem;

namespace {

const std::vector<std::string> kTasks = {"en_single_fries", "en_single_display", "en_single_alarm",
                                         "zh_single_moments", "en_cross_vacuum", "en_open_music"};

json plan_json(int devices, int concurrency, const std::string& clock = "simulated") {
    json devs = json::array();
    for (int i = 0; i < devices; ++i) {
        devs.push_back({{"serial", "mock-" + std::to_string(i + 1)}, {"scenario", "scenario.json"}});
    }
    return {{"agents", {{{"name", "replay"}, {"script", "replay.json"}}, {{"name", "idle"}, {"script", "replay.json"}}}},
            {"tasks", kTasks},
            {"task_file", "tasks.json"},
            {"devices", devs},
            {"concurrency", concurrency},
            {"clock", clock}};
}

RunPlan make_plan(int devices, int concurrency, const std::string& clock = "simulated") {
    return parse_plan(plan_json(devices, concurrency, clock).dump(), testing::data_dir());
}

dataset::TaskSet sample_tasks() { return dataset::load_taskset(testing::data_dir() / "tasks.json"); }

bool mentions(const ValidationError& e, const std::string& needle) {
    for (const auto& v : e.violations()) {
        if (v.find(needle) != std::string::npos) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("plan parsing and validation") {
    const auto plan = make_plan(2, 2);
    CHECK(plan.agents.size() == 2);
    CHECK(plan.devices[1].serial == "mock-2");
    CHECK(plan.devices[0].scenario == testing::data_dir() / "scenario.json");
    CHECK(plan.clock == ClockKind::simulated);
    CHECK(plan.budget_multiplier == 2.0);
    CHECK(plan.open_ended_budget == 20);
    CHECK(plan_digest(plan) == plan_digest(parse_plan(plan_to_json(plan).dump())));
    CHECK(plan_digest(plan) != plan_digest(make_plan(2, 1)));

    auto j = plan_json(1, 1);
    j["colour"] = "blue";
    CHECK_THROWS_AS(parse_plan(j.dump(), testing::data_dir()), ParseError);
    CHECK_THROWS_AS(parse_plan("{", testing::data_dir()), ParseError);

    try {
        parse_plan(plan_json(1, 2).dump(), testing::data_dir());
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(mentions(e, "concurrency 2 exceeds the 1 devices"));
    }
    j = plan_json(2, 1);
    j["devices"][1]["serial"] = "mock-1";
    j["agents"][1]["name"] = "replay";
    try {
        parse_plan(j.dump(), testing::data_dir());
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(mentions(e, "duplicate device serial"));
        CHECK(mentions(e, "duplicate agent name"));
    }
}

TEST_CASE("select_tasks keeps plan order and rejects unknown ids") {
    auto plan = make_plan(1, 1);
    const auto tasks = select_tasks(plan, sample_tasks());
    REQUIRE(tasks.size() == kTasks.size());
    for (std::size_t i = 0; i < kTasks.size(); ++i) CHECK(tasks[i].id == kTasks[i]);
    plan.tasks.push_back("ghost");
    CHECK_THROWS_AS(select_tasks(plan, sample_tasks()), ValidationError);
    plan.tasks.clear();
    CHECK(select_tasks(plan, sample_tasks()).size() == 10);
}

TEST_CASE("a full run stores every pair") {
    testing::TempDir tmp;
    const auto record = execute_plan(make_plan(1, 1), sample_tasks(), tmp / "run");
    CHECK(record.count(PairStatus::done) == 12);
    CHECK(record.pairs[0].task == "en_single_fries");
    CHECK(record.pairs[0].agent == "replay");
    CHECK(record.pairs[1].agent == "idle");
    CHECK(record.find("replay", "en_single_alarm")->termination == "MSR");
    CHECK(record.find("replay", "en_open_music")->termination == "SRC");
    const auto loaded = load_run_record(tmp / "run");
    CHECK(loaded.pairs.size() == 12);
    CHECK(stdfs::exists(tmp / "run" / "tasks.json"));
    CHECK(stdfs::exists(tmp / "run" / "plan.json"));
    CHECK_FALSE(stdfs::exists(tmp / "run" / ".work"));
    agent::TrajectoryStore store(tmp / "run");
    const auto t = store.load("replay", "en_single_alarm", false);
    CHECK(t.step_budget == 8);
    CHECK(t.steps.size() == 8);
    CHECK_THROWS_AS(execute_plan(make_plan(1, 1), sample_tasks(), tmp / "run"), ConfigError);
}

TEST_CASE("device intervals never overlap") {
    for (const auto& [devices, concurrency] : {std::pair{2, 2}, std::pair{3, 2}, std::pair{3, 1}}) {
        CAPTURE(devices);
        CAPTURE(concurrency);
        testing::TempDir tmp;
        const auto record = execute_plan(make_plan(devices, concurrency, "system"), sample_tasks(), tmp / "run");
        REQUIRE(record.count(PairStatus::done) == 12);
        agent::TrajectoryStore store(tmp / "run");
        std::map<std::string, std::vector<std::pair<double, double>>> by_device;
        std::vector<std::pair<double, double>> all;
        for (const auto& [agent, task] : store.list()) {
            const auto t = store.load(agent, task, false);
            by_device[t.device_serial].push_back({t.started_at, t.finished_at});
            all.push_back({t.started_at, t.finished_at});
        }
        for (auto& [serial, intervals] : by_device) {
            std::sort(intervals.begin(), intervals.end());
            for (std::size_t i = 1; i < intervals.size(); ++i) CHECK(intervals[i].first >= intervals[i - 1].second);
        }
        if (concurrency == 1) {
            std::sort(all.begin(), all.end());
            for (std::size_t i = 1; i < all.size(); ++i) CHECK(all[i].first >= all[i - 1].second);
        }
    }
}

TEST_CASE("resume completes an interrupted run without redoing finished pairs") {
    testing::TempDir tmp;
    const auto plan = make_plan(1, 1);
    ExecuteOptions first;
    first.stop_after = 5;
    auto record = execute_plan(plan, sample_tasks(), tmp / "run", first);
    CHECK(record.count(PairStatus::done) == 5);
    CHECK(record.count(PairStatus::pending) == 7);

    agent::TrajectoryStore store(tmp / "run");
    std::map<std::string, std::string> before;
    for (const auto& [agent, task] : store.list()) {
        before[agent + "/" + task] = fs::read_file(store.episode_dir(agent, task) / "meta.json");
    }
    CHECK(before.size() == 5);

    ExecuteOptions resume;
    resume.resume = true;
    record = execute_plan(plan, sample_tasks(), tmp / "run", resume);
    CHECK(record.count(PairStatus::done) == 12);
    for (const auto& [key, meta] : before) {
        const auto slash = key.find('/');
        CHECK(fs::read_file(store.episode_dir(key.substr(0, slash), key.substr(slash + 1)) / "meta.json") == meta);
    }
    for (const auto& p : record.pairs) CHECK(p.attempts == 1);

    record = execute_plan(plan, sample_tasks(), tmp / "run", resume);
    CHECK(record.count(PairStatus::done) == 12);

    CHECK_THROWS_AS(execute_plan(make_plan(1, 1, "system"), sample_tasks(), tmp / "run", resume), ConfigError);
}

TEST_CASE("a lost device is quarantined and its pair moves on") {
    testing::TempDir tmp;
    const auto plan = make_plan(2, 2);
    ExecuteOptions options;
    options.device_factory = [](const DeviceSpec& spec) -> std::unique_ptr<device::Device> {
        auto scenario = device::MockScenario::load(spec.scenario);
        if (spec.serial == "mock-2") scenario.offline_after_captures = 2;
        return std::make_unique<device::MockDevice>(spec.serial, spec.kind, scenario);
    };
    const auto record = execute_plan(plan, sample_tasks(), tmp / "run", options);
    CHECK(record.quarantined == std::vector<std::string>{"mock-2"});
    CHECK_FALSE(record.aborted);
    CHECK(record.count(PairStatus::done) == 12);
    int moved = 0;
    for (const auto& p : record.pairs) {
        CHECK(p.termination != "Error");
        moved += p.device_serial == "mock-1" && p.attempts > 1;
    }
    CHECK(moved >= 1);
}

TEST_CASE("losing every device aborts with pairs left pending") {
    testing::TempDir tmp;
    ExecuteOptions options;
    options.device_factory = [](const DeviceSpec& spec) -> std::unique_ptr<device::Device> {
        auto scenario = device::MockScenario::load(spec.scenario);
        scenario.offline_after_captures = 1;
        return std::make_unique<device::MockDevice>(spec.serial, spec.kind, scenario);
    };
    const auto record = execute_plan(make_plan(1, 1), sample_tasks(), tmp / "run", options);
    CHECK(record.aborted);
    CHECK(record.quarantined.size() == 1);
    CHECK(record.count(PairStatus::pending) == 12);
}

TEST_CASE("prepare_cycle") {
    testing::TempDir tmp;
    DeviceSpec emulator;
    emulator.serial = "emu";
    device::MockDevice emu("emu", device::DeviceKind::emulator, device::MockScenario::basic());
    SimulatedClock clock;
    emu.perform(device::Tap{100, 420}, clock);
    CHECK(emu.current_screen() == "settings");
    prepare_cycle(emu, emulator, "clean");
    CHECK(emu.current_screen() == "home");

    DeviceSpec phone;
    phone.serial = "phone-1";
    phone.kind = device::DeviceKind::physical;
    const auto log = tmp / "cleanup.log";
    phone.cleanup = "echo cleaned {serial} >> " + text::shell_quote(log.string());
    device::MockDevice ph("phone-1", device::DeviceKind::physical, device::MockScenario::basic());
    prepare_cycle(ph, phone, "clean");
    CHECK(fs::read_file(log) == "cleaned phone-1\n");

    phone.cleanup = "exit 3";
    try {
        prepare_cycle(ph, phone, "clean");
        FAIL("expected DeviceError");
    } catch (const device::DeviceError& e) {
        CHECK(e.code() == device::DeviceError::Code::command_failed);
    }
    ph.set_offline(true);
    phone.cleanup.clear();
    try {
        prepare_cycle(ph, phone, "clean");
        FAIL("expected DeviceError");
    } catch (const device::DeviceError& e) {
        CHECK(e.code() == device::DeviceError::Code::offline);
    }
}

TEST_CASE("run record json round trip") {
    RunRecord r;
    r.plan_digest = "abc";
    r.quarantined = {"x"};
    r.aborted = true;
    PairRecord p;
    p.agent = "a";
    p.task = "t";
    p.status = PairStatus::failed;
    p.attempts = 3;
    p.note = "boom";
    r.pairs.push_back(p);
    const auto back = run_record_from_json(run_record_to_json(r));
    CHECK(back.plan_digest == "abc");
    CHECK(back.aborted);
    CHECK(back.find("a", "t")->status == PairStatus::failed);
    CHECK(back.find("a", "t")->note == "boom");
    CHECK(back.find("a", "u") == nullptr);
    CHECK_THROWS_AS(parse_pair_status("stuck"), ParseError);
}
