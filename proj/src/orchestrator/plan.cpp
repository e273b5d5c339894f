#include "mobench/orchestrator/plan.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "mobench/util/encoding.hpp"
#include "mobench/util/fs.hpp"

namespace mobench::orchestrator {

using json = nlohmann::json;
namespace stdfs = std::filesystem;

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!j.is_object()) throw ParseError(where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const auto a : allowed) ok = ok || key == a;
        if (!ok) throw ParseError("unknown key '" + key + "' in " + where);
    }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ParseError(where + "." + key + " has the wrong type");
    }
}

stdfs::path resolve(const stdfs::path& base, const std::string& p) {
    if (p.empty()) return {};
    const stdfs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

agent::AgentDescriptor parse_agent(const json& j, const std::string& where, const stdfs::path& base) {
    check_keys(j, {"name", "launch", "script", "wants_screenshot", "wants_ui_tree", "env", "timeouts"}, where);
    agent::AgentDescriptor a;
    a.name = get<std::string>(j, "name", where, "");
    a.launch = get<std::string>(j, "launch", where, "");
    a.script = resolve(base, get<std::string>(j, "script", where, ""));
    a.wants_screenshot = get<bool>(j, "wants_screenshot", where, true);
    a.wants_ui_tree = get<bool>(j, "wants_ui_tree", where, false);
    a.env = get<std::map<std::string, std::string>>(j, "env", where, {});
    if (j.contains("timeouts")) {
        const auto& t = j.at("timeouts");
        const auto tw = where + ".timeouts";
        check_keys(t, {"handshake_ms", "decision_ms", "shutdown_ms"}, tw);
        a.timeouts.handshake = std::chrono::milliseconds(get<long>(t, "handshake_ms", tw, a.timeouts.handshake.count()));
        a.timeouts.decision = std::chrono::milliseconds(get<long>(t, "decision_ms", tw, a.timeouts.decision.count()));
        a.timeouts.shutdown = std::chrono::milliseconds(get<long>(t, "shutdown_ms", tw, a.timeouts.shutdown.count()));
    }
    return a;
}

DeviceSpec parse_device(const json& j, const std::string& where, const stdfs::path& base) {
    check_keys(j, {"serial", "kind", "transport", "scenario", "adb", "screen_size", "cleanup"}, where);
    DeviceSpec d;
    d.serial = get<std::string>(j, "serial", where, "");
    try {
        d.kind = device::parse_device_kind(get<std::string>(j, "kind", where, "emulator"));
    } catch (const Error& e) {
        throw ParseError(where + ".kind: " + e.what());
    }
    const auto transport = get<std::string>(j, "transport", where, "mock");
    if (transport == "mock") {
        d.transport = Transport::mock;
    } else if (transport == "adb") {
        d.transport = Transport::adb;
    } else {
        throw ParseError(where + ".transport must be \"mock\" or \"adb\"");
    }
    d.scenario = resolve(base, get<std::string>(j, "scenario", where, ""));
    d.adb_path = get<std::string>(j, "adb", where, "adb");
    if (j.contains("screen_size")) {
        const auto wh = get<std::vector<int>>(j, "screen_size", where, {});
        if (wh.size() != 2) throw ParseError(where + ".screen_size must be [width, height]");
        d.screen_size = device::ScreenSize{wh[0], wh[1]};
    }
    d.cleanup = get<std::string>(j, "cleanup", where, "");
    return d;
}

}  // namespace

void RunPlan::validate() const {
    std::vector<std::string> v;
    if (agents.empty()) v.push_back("plan has no agents");
    std::set<std::string> names;
    for (const auto& a : agents) {
        try {
            a.validate();
        } catch (const ValidationError& e) {
            v.insert(v.end(), e.violations().begin(), e.violations().end());
        }
        if (!names.insert(a.name).second) v.push_back("duplicate agent name '" + a.name + "'");
    }
    if (devices.empty()) v.push_back("plan has no devices");
    std::set<std::string> serials;
    for (const auto& d : devices) {
        if (d.serial.empty()) v.push_back("device with empty serial");
        if (!serials.insert(d.serial).second) v.push_back("duplicate device serial '" + d.serial + "'");
        if (d.screen_size && (d.screen_size->width <= 0 || d.screen_size->height <= 0)) {
            v.push_back("device '" + d.serial + "' has a non-positive screen size");
        }
        if (!d.scenario.empty() && !stdfs::exists(d.scenario)) {
            v.push_back("scenario file " + d.scenario.string() + " does not exist");
        }
    }
    for (const auto& a : agents) {
        if (!a.script.empty() && !stdfs::exists(a.script)) {
            v.push_back("replay script " + a.script.string() + " does not exist");
        }
    }
    if (concurrency < 1) v.push_back("concurrency must be at least 1");
    if (concurrency > static_cast<int>(devices.size())) {
        v.push_back("concurrency " + std::to_string(concurrency) + " exceeds the " + std::to_string(devices.size()) +
                    " devices");
    }
    if (max_reruns < 0) v.push_back("max_reruns must be non-negative");
    if (budget_multiplier <= 0) v.push_back("budget multiplier must be positive");
    if (open_ended_budget < 1) v.push_back("open-ended budget must be at least 1");
    if (!task_file.empty() && !stdfs::exists(task_file)) {
        v.push_back("task file " + task_file.string() + " does not exist");
    }
    std::set<std::string> ids;
    for (const auto& t : tasks) {
        if (!ids.insert(t).second) v.push_back("task '" + t + "' listed twice");
    }
    if (!v.empty()) throw ValidationError(std::move(v));
}

RunPlan parse_plan(std::string_view json_text, const stdfs::path& base_dir) {
    const json j = json::parse(json_text, nullptr, false);
    if (j.is_discarded()) throw ParseError("run plan is not valid JSON");
    check_keys(j, {"agents", "tasks", "task_file", "devices", "concurrency", "snapshot_id", "max_reruns", "budget",
                   "clock"},
               "plan");
    RunPlan plan;
    if (j.contains("agents")) {
        if (!j.at("agents").is_array()) throw ParseError("plan.agents must be an array");
        for (std::size_t i = 0; i < j.at("agents").size(); ++i) {
            plan.agents.push_back(parse_agent(j.at("agents")[i], "agents[" + std::to_string(i) + "]", base_dir));
        }
    }
    plan.tasks = get<std::vector<std::string>>(j, "tasks", "plan", {});
    plan.task_file = resolve(base_dir, get<std::string>(j, "task_file", "plan", ""));
    if (j.contains("devices")) {
        if (!j.at("devices").is_array()) throw ParseError("plan.devices must be an array");
        for (std::size_t i = 0; i < j.at("devices").size(); ++i) {
            plan.devices.push_back(parse_device(j.at("devices")[i], "devices[" + std::to_string(i) + "]", base_dir));
        }
    }
    plan.concurrency = get<int>(j, "concurrency", "plan", 1);
    plan.snapshot_id = get<std::string>(j, "snapshot_id", "plan", "clean");
    plan.max_reruns = get<int>(j, "max_reruns", "plan", 2);
    if (j.contains("budget")) {
        const auto& b = j.at("budget");
        check_keys(b, {"multiplier", "open_ended"}, "plan.budget");
        plan.budget_multiplier = get<double>(b, "multiplier", "plan.budget", 2.0);
        plan.open_ended_budget = get<int>(b, "open_ended", "plan.budget", 20);
    }
    const auto clock = get<std::string>(j, "clock", "plan", "system");
    if (clock == "system") {
        plan.clock = ClockKind::system;
    } else if (clock == "simulated") {
        plan.clock = ClockKind::simulated;
    } else {
        throw ParseError("plan.clock must be \"system\" or \"simulated\"");
    }
    plan.validate();
    return plan;
}

RunPlan load_plan(const stdfs::path& path) {
    return parse_plan(fs::read_file(path), path.parent_path());
}

json plan_to_json(const RunPlan& plan) {
    json agents = json::array();
    for (const auto& a : plan.agents) {
        json e{{"name", a.name}, {"wants_screenshot", a.wants_screenshot}, {"wants_ui_tree", a.wants_ui_tree}};
        if (!a.launch.empty()) e["launch"] = a.launch;
        if (!a.script.empty()) e["script"] = a.script.string();
        if (!a.env.empty()) e["env"] = a.env;
        e["timeouts"] = {{"handshake_ms", a.timeouts.handshake.count()},
                         {"decision_ms", a.timeouts.decision.count()},
                         {"shutdown_ms", a.timeouts.shutdown.count()}};
        agents.push_back(std::move(e));
    }
    json devices = json::array();
    for (const auto& d : plan.devices) {
        json e{{"serial", d.serial},
               {"kind", device::to_string(d.kind)},
               {"transport", d.transport == Transport::mock ? "mock" : "adb"}};
        if (!d.scenario.empty()) e["scenario"] = d.scenario.string();
        if (d.transport == Transport::adb) e["adb"] = d.adb_path;
        if (d.screen_size) e["screen_size"] = {d.screen_size->width, d.screen_size->height};
        if (!d.cleanup.empty()) e["cleanup"] = d.cleanup;
        devices.push_back(std::move(e));
    }
    json j{{"agents", agents},
           {"devices", devices},
           {"tasks", plan.tasks},
           {"concurrency", plan.concurrency},
           {"snapshot_id", plan.snapshot_id},
           {"max_reruns", plan.max_reruns},
           {"budget", {{"multiplier", plan.budget_multiplier}, {"open_ended", plan.open_ended_budget}}},
           {"clock", plan.clock == ClockKind::system ? "system" : "simulated"}};
    if (!plan.task_file.empty()) j["task_file"] = plan.task_file.string();
    return j;
}

std::string plan_digest(const RunPlan& plan) { return sha256_hex(plan_to_json(plan).dump()); }

}  // namespace mobench::orchestrator
