#include "mobench/eval/run_eval.hpp"

#include <algorithm>
#include <map>

#include <spdlog/spdlog.h>

#include "mobench/agent/trajectory.hpp"
#include "mobench/util/fs.hpp"

namespace mobench::eval {

using json = nlohmann::json;
namespace stdfs = std::filesystem;

EvalScope parse_eval_scope(std::string_view s) {
    if (s == "single") return EvalScope::single;
    if (s == "cross") return EvalScope::cross;
    if (s == "all") return EvalScope::all;
    throw ParseError("unknown eval scope '" + std::string(s) + "' (single, cross or all)");
}

json verdicts_to_json(const std::vector<EpisodeVerdict>& verdicts) {
    json list = json::array();
    for (const auto& v : verdicts) {
        list.push_back({{"agent", v.agent},
                        {"task", v.task},
                        {"scope", dataset::to_string(v.scope)},
                        {"mode", {{"reasoning", to_string(v.mode.reasoning)}, {"action", to_string(v.mode.action)}}},
                        {"verdict", verdict_to_json(v.verdict)}});
    }
    return {{"format", "mobench.verdicts"}, {"version", 1}, {"verdicts", list}};
}

std::vector<EpisodeVerdict> verdicts_from_json(const json& j) {
    try {
        if (j.at("format") != "mobench.verdicts" || j.at("version") != 1) throw ParseError("not a mobench verdict file");
        std::vector<EpisodeVerdict> out;
        for (const auto& e : j.at("verdicts")) {
            EpisodeVerdict v;
            v.agent = e.at("agent").get<std::string>();
            v.task = e.at("task").get<std::string>();
            v.scope = dataset::parse_scope(e.at("scope").get<std::string>());
            v.mode.reasoning = parse_reasoning(e.at("mode").at("reasoning").get<std::string>());
            v.mode.action = parse_action_mode(e.at("mode").at("action").get<std::string>());
            v.verdict = verdict_from_json(e.at("verdict"));
            out.push_back(std::move(v));
        }
        return out;
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad verdict file: ") + e.what());
    }
}

std::vector<EpisodeVerdict> load_verdicts(const stdfs::path& run_dir) {
    const auto path = run_dir / "verdicts.json";
    if (!stdfs::exists(path)) return {};
    const json j = json::parse(fs::read_file(path), nullptr, false);
    if (j.is_discarded()) throw ParseError(path.string() + " is not valid JSON");
    return verdicts_from_json(j);
}

namespace {

bool in_scope(dataset::Scope s, EvalScope scope) {
    if (scope == EvalScope::all) return true;
    return (s == dataset::Scope::cross_app) == (scope == EvalScope::cross);
}

Verdict failure(const std::string& message) {
    Verdict v;
    v.evaluation_failure = true;
    v.failure_message = message;
    return v;
}

}  // namespace

RunEvalResult evaluate_run(const stdfs::path& run_dir, const dataset::TaskSet& tasks, providers::ChatProvider& chat,
                           providers::OcrEngine& ocr, const RunEvalOptions& options) {
    const agent::TrajectoryStore store(run_dir);
    std::map<std::pair<std::string, std::string>, EpisodeVerdict> merged;
    for (auto& v : load_verdicts(run_dir)) merged[{v.agent, v.task}] = std::move(v);

    const auto audit_path = run_dir / "cross_audit.json";
    json audits = json::object();
    if (stdfs::exists(audit_path)) {
        audits = json::parse(fs::read_file(audit_path), nullptr, false);
        if (audits.is_discarded() || !audits.is_object()) throw ParseError(audit_path.string() + " is not a JSON object");
    }

    RunEvalResult result;
    for (const auto& [agent_name, task_id] : store.list()) {
        const auto* task = tasks.find(task_id);
        const auto key = std::make_pair(agent_name, task_id);
        if (task && !in_scope(task->scope, options.scope)) continue;
        if (!options.force && merged.count(key)) {
            ++result.skipped;
            continue;
        }
        EpisodeVerdict ev;
        ev.agent = agent_name;
        ev.task = task_id;
        if (!task) {
            ev.verdict = failure("task " + task_id + " is not in the task set");
            merged[key] = std::move(ev);
            ++result.judged;
            continue;
        }
        ev.scope = task->scope;
        if (task->scope == dataset::Scope::cross_app) {
            ev.mode = options.cross.subtask_mode;
        } else if (options.mode) {
            ev.mode = *options.mode;
        } else {
            const auto it = options.language_modes.find(task->language);
            ev.mode = it == options.language_modes.end() ? default_mode(task->language) : it->second;
        }
        agent::Trajectory traj;
        bool loaded = false;
        try {
            traj = store.load(agent_name, task_id);
            loaded = true;
        } catch (const std::exception& e) {
            ev.verdict = failure(std::string("cannot load episode: ") + e.what());
        }
        if (loaded) {
            try {
                if (task->scope == dataset::Scope::cross_app) {
                    auto cv = detect_cross(*task, traj, chat, options.cross);
                    ev.verdict = cv.verdict;
                    audits[agent_name + "/" + task_id] = cross_audit_to_json(cv);
                } else {
                    ev.verdict = detect_single(*task, traj, ev.mode, ocr, chat, options.detect);
                }
            } catch (const providers::ProviderError& e) {
                ev.verdict = failure(std::string("provider error: ") + e.what());
            }
        }
        if (ev.verdict.evaluation_failure) {
            spdlog::warn("evaluation failure for {} / {}: {}", agent_name, task_id, ev.verdict.failure_message);
        }
        merged[key] = std::move(ev);
        ++result.judged;
    }

    for (auto& [_, v] : merged) result.verdicts.push_back(std::move(v));
    fs::write_file_atomic(run_dir / "verdicts.json", verdicts_to_json(result.verdicts).dump(2) + "\n");
    if (!audits.empty()) fs::write_file_atomic(audit_path, audits.dump(2) + "\n");
    return result;
}

}  // namespace mobench::eval
