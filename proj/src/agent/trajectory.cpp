#include "mobench/agent/trajectory.hpp"

#include <algorithm>
#include <array>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "mobench/util/fs.hpp"
#include "mobench/util/text.hpp"

namespace mobench::agent {

using json = nlohmann::json;
namespace stdfs = std::filesystem;

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table, const char* what) {
    for (const auto& [e, name] : table) {
        if (name == s) return e;
    }
    throw ParseError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

template <typename E, std::size_t N>
std::string_view enum_name(E e, const std::array<std::pair<E, std::string_view>, N>& table) {
    for (const auto& [v, name] : table) {
        if (v == e) return name;
    }
    return "?";
}

constexpr std::array<std::pair<DecisionKind, std::string_view>, 3> kDecisionKinds{{
    {DecisionKind::act, "act"},
    {DecisionKind::complete, "complete"},
    {DecisionKind::abort, "abort"},
}};

constexpr std::array<std::pair<Termination, std::string_view>, 3> kTerminations{{
    {Termination::self_reported_completion, "self_reported_completion"},
    {Termination::max_steps_reached, "max_steps_reached"},
    {Termination::error, "error"},
}};

constexpr std::array<std::pair<ErrorClass, std::string_view>, 2> kErrorClasses{{
    {ErrorClass::expected, "expected"},
    {ErrorClass::unexpected, "unexpected"},
}};

constexpr std::array<std::pair<ErrorKind, std::string_view>, 10> kErrorKinds{{
    {ErrorKind::protocol_violation, "protocol_violation"},
    {ErrorKind::invalid_action, "invalid_action"},
    {ErrorKind::missing_input, "missing_input"},
    {ErrorKind::agent_abort, "agent_abort"},
    {ErrorKind::agent_timeout, "agent_timeout"},
    {ErrorKind::agent_crash, "agent_crash"},
    {ErrorKind::device_offline, "device_offline"},
    {ErrorKind::capture_timeout, "capture_timeout"},
    {ErrorKind::device_failure, "device_failure"},
    {ErrorKind::network_failure, "network_failure"},
}};

std::string png_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d.png", index);
    return buf;
}

}  // namespace

std::string_view to_string(DecisionKind kind) { return enum_name(kind, kDecisionKinds); }
std::string_view to_string(Termination t) { return enum_name(t, kTerminations); }
std::string_view to_string(ErrorClass c) { return enum_name(c, kErrorClasses); }
std::string_view to_string(ErrorKind k) { return enum_name(k, kErrorKinds); }
Termination parse_termination(std::string_view s) { return parse_enum(s, kTerminations, "termination"); }
ErrorClass parse_error_class(std::string_view s) { return parse_enum(s, kErrorClasses, "error class"); }
ErrorKind parse_error_kind(std::string_view s) { return parse_enum(s, kErrorKinds, "error kind"); }

std::string_view short_name(Termination t) {
    switch (t) {
        case Termination::self_reported_completion: return "SRC";
        case Termination::max_steps_reached: return "MSR";
        case Termination::error: return "Error";
    }
    return "Error";
}

long Trajectory::prompt_tokens() const {
    long total = final_decision ? final_decision->prompt_tokens : 0;
    for (const auto& s : steps) total += s.prompt_tokens;
    return total;
}

long Trajectory::completion_tokens() const {
    long total = final_decision ? final_decision->completion_tokens : 0;
    for (const auto& s : steps) total += s.completion_tokens;
    return total;
}

std::optional<device::UiAction> Trajectory::action_after(std::size_t i) const {
    if (i >= steps.size()) return std::nullopt;
    return steps[i].decision.action;
}

std::vector<std::string> check_trajectory(const Trajectory& t) {
    std::vector<std::string> v;
    const bool capture_failed = t.termination == Termination::error && t.screenshots.size() == t.steps.size();
    if (!capture_failed && t.screenshots.size() != t.steps.size() + 1) {
        v.push_back("expected " + std::to_string(t.steps.size() + 1) + " screenshots, found " +
                    std::to_string(t.screenshots.size()));
    }
    for (std::size_t i = 1; i < t.screenshots.size(); ++i) {
        if (t.screenshots[i].index <= t.screenshots[i - 1].index) v.push_back("screenshot indices not increasing");
    }
    for (const auto& s : t.steps) {
        if (s.decision.kind != DecisionKind::act || !s.decision.action) v.push_back("recorded step without an action");
    }
    switch (t.termination) {
        case Termination::self_reported_completion:
            if (!t.final_decision || t.final_decision->decision.kind != DecisionKind::complete) {
                v.push_back("self-reported completion without a complete decision");
            }
            break;
        case Termination::max_steps_reached:
            if (static_cast<int>(t.steps.size()) != t.step_budget) v.push_back("max steps reached below budget");
            if (t.final_decision) v.push_back("max steps reached with a final decision");
            break;
        case Termination::error:
            if (!t.error_class || !t.error_kind) v.push_back("error termination without classification");
            break;
    }
    if (static_cast<int>(t.steps.size()) > t.step_budget) v.push_back("more steps than the budget");
    return v;
}

json decision_to_json(const AgentDecision& d) {
    json j{{"decision", to_string(d.kind)}};
    j["action"] = d.action ? device::action_to_json(*d.action) : json(nullptr);
    j["reason"] = d.reason;
    j["category"] = d.category;
    return j;
}

AgentDecision decision_from_json(const json& j) {
    AgentDecision d;
    d.kind = parse_enum(j.at("decision").get<std::string>(), kDecisionKinds, "decision");
    if (j.contains("action") && !j.at("action").is_null()) d.action = device::action_from_json(j.at("action"));
    d.reason = j.value("reason", "");
    d.category = j.value("category", "");
    return d;
}

json step_to_json(const StepRecord& s) {
    json j = decision_to_json(s.decision);
    j["step"] = s.step;
    j["latency_s"] = s.latency_s;
    j["prompt_tokens"] = s.prompt_tokens;
    j["completion_tokens"] = s.completion_tokens;
    j["log"] = s.raw_agent_log;
    return j;
}

StepRecord step_from_json(const json& j) {
    StepRecord s;
    s.decision = decision_from_json(j);
    s.step = j.at("step").get<int>();
    s.latency_s = j.at("latency_s").get<double>();
    s.prompt_tokens = j.at("prompt_tokens").get<long>();
    s.completion_tokens = j.at("completion_tokens").get<long>();
    s.raw_agent_log = j.value("log", "");
    return s;
}

TrajectoryStore::TrajectoryStore(stdfs::path root) : root_(std::move(root)) {}

stdfs::path TrajectoryStore::episode_dir(const std::string& agent, const std::string& task) const {
    return root_ / agent / task;
}

stdfs::path TrajectoryStore::staging_dir(const std::string& agent, const std::string& task) const {
    return root_ / agent / ("." + task + ".tmp");
}

bool TrajectoryStore::exists(const std::string& agent, const std::string& task) const {
    return stdfs::exists(episode_dir(agent, task) / "meta.json");
}

void TrajectoryStore::save(const Trajectory& t) const {
    const auto staging = staging_dir(t.agent_name, t.task_id);
    stdfs::remove_all(staging);
    stdfs::create_directories(staging);
    json captured = json::array();
    for (const auto& shot : t.screenshots) {
        fs::write_file(staging / png_name(shot.index), shot.png);
        captured.push_back({{"index", shot.index}, {"file", png_name(shot.index)}, {"captured_at", shot.captured_at}});
    }
    std::string log;
    for (const auto& s : t.steps) log += step_to_json(s).dump() + "\n";
    fs::write_file(staging / "steps.log", log);

    json meta{{"task_id", t.task_id},
              {"agent", t.agent_name},
              {"termination", to_string(t.termination)},
              {"error_class", t.error_class ? json(to_string(*t.error_class)) : json(nullptr)},
              {"error_kind", t.error_kind ? json(to_string(*t.error_kind)) : json(nullptr)},
              {"error_message", t.error_message},
              {"step_budget", t.step_budget},
              {"steps", t.steps.size()},
              {"device_serial", t.device_serial},
              {"attempts", t.attempts},
              {"timings", {{"started_at", t.started_at}, {"finished_at", t.finished_at}, {"wall_time_s", t.wall_time_s()}}},
              {"tokens", {{"prompt", t.prompt_tokens()}, {"completion", t.completion_tokens()}}},
              {"screenshots", captured},
              {"final_decision", t.final_decision ? step_to_json(*t.final_decision) : json(nullptr)}};
    fs::write_file(staging / "meta.json", meta.dump(2) + "\n");

    const auto target = episode_dir(t.agent_name, t.task_id);
    stdfs::remove_all(target);
    stdfs::rename(staging, target);
}

Trajectory TrajectoryStore::load(const std::string& agent, const std::string& task, bool with_images) const {
    const auto dir = episode_dir(agent, task);
    Trajectory t;
    try {
        const auto meta = json::parse(fs::read_file(dir / "meta.json"));
        t.task_id = meta.at("task_id").get<std::string>();
        t.agent_name = meta.at("agent").get<std::string>();
        t.termination = parse_termination(meta.at("termination").get<std::string>());
        if (!meta.at("error_class").is_null()) t.error_class = parse_error_class(meta.at("error_class").get<std::string>());
        if (!meta.at("error_kind").is_null()) t.error_kind = parse_error_kind(meta.at("error_kind").get<std::string>());
        t.error_message = meta.at("error_message").get<std::string>();
        t.step_budget = meta.at("step_budget").get<int>();
        t.device_serial = meta.at("device_serial").get<std::string>();
        t.attempts = meta.at("attempts").get<int>();
        t.started_at = meta.at("timings").at("started_at").get<double>();
        t.finished_at = meta.at("timings").at("finished_at").get<double>();
        for (const auto& shot : meta.at("screenshots")) {
            device::Screenshot s;
            s.index = shot.at("index").get<int>();
            s.captured_at = shot.at("captured_at").get<double>();
            if (with_images) s.png = fs::read_file(dir / shot.at("file").get<std::string>());
            t.screenshots.push_back(std::move(s));
        }
        if (!meta.at("final_decision").is_null()) t.final_decision = step_from_json(meta.at("final_decision"));
        for (const auto& line : text::split_lines(fs::read_file(dir / "steps.log"))) {
            if (!text::trim(line).empty()) t.steps.push_back(step_from_json(json::parse(line)));
        }
    } catch (const json::exception& e) {
        throw ParseError("corrupt trajectory " + dir.string() + ": " + e.what());
    }
    return t;
}

std::vector<std::pair<std::string, std::string>> TrajectoryStore::list() const {
    std::vector<std::pair<std::string, std::string>> out;
    if (!stdfs::exists(root_)) return out;
    for (const auto& agent_dir : stdfs::directory_iterator(root_)) {
        if (!agent_dir.is_directory() || agent_dir.path().filename().string().front() == '.') continue;
        for (const auto& task_dir : stdfs::directory_iterator(agent_dir.path())) {
            const auto name = task_dir.path().filename().string();
            if (!task_dir.is_directory() || name.empty() || name[0] == '.') continue;
            if (stdfs::exists(task_dir.path() / "meta.json")) {
                out.emplace_back(agent_dir.path().filename().string(), name);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

int TrajectoryStore::clean_staging() const {
    int removed = 0;
    if (!stdfs::exists(root_)) return 0;
    for (const auto& agent_dir : stdfs::directory_iterator(root_)) {
        if (!agent_dir.is_directory()) continue;
        std::vector<stdfs::path> stale;
        for (const auto& entry : stdfs::directory_iterator(agent_dir.path())) {
            const auto name = entry.path().filename().string();
            if (name.size() > 5 && name[0] == '.' && name.ends_with(".tmp")) stale.push_back(entry.path());
        }
        for (const auto& p : stale) {
            stdfs::remove_all(p);
            ++removed;
        }
    }
    return removed;
}

}  // namespace mobench::agent
