#include "mobench/metrics/report.hpp"

#include "mobench/agent/trajectory.hpp"
#include "mobench/eval/run_eval.hpp"

namespace mobench::metrics {

namespace stdfs = std::filesystem;

RunReport build_report(const stdfs::path& run_dir, const dataset::TaskSet& tasks, const ReportOptions& options) {
    const agent::TrajectoryStore store(run_dir);
    std::map<PairKey, eval::Verdict> verdicts;
    for (auto& v : eval::load_verdicts(run_dir)) verdicts[{v.agent, v.task}] = std::move(v.verdict);

    RunReport report;
    std::map<std::string, std::vector<EpisodeOutcome>> by_set;
    std::vector<eval::Verdict> judged;
    std::map<PairKey, eval::Verdict> labelled;
    for (const auto& [agent_name, task_id] : store.list()) {
        const auto it = verdicts.find({agent_name, task_id});
        const auto* task = tasks.find(task_id);
        if (it == verdicts.end() || !task) {
            report.unevaluated.push_back(agent_name + "/" + task_id);
            continue;
        }
        const auto traj = store.load(agent_name, task_id, false);
        const auto model = options.agent_models.find(agent_name);
        auto outcome = episode_metrics(traj, it->second, *task, options.costs,
                                       model == options.agent_models.end() ? std::string() : model->second);
        by_set["all"].push_back(outcome);
        by_set[std::string(dataset::to_string(task->language)) + "/" + std::string(dataset::to_string(task->scope))]
            .push_back(outcome);
        report.episodes.push_back(std::move(outcome));
        judged.push_back(it->second);
        labelled[it->first] = it->second;
    }
    for (const auto& [set, episodes] : by_set) {
        std::map<std::string, std::vector<EpisodeOutcome>> per_agent;
        for (const auto& e : episodes) per_agent[e.agent].push_back(e);
        auto& rows = report.tables[set];
        for (const auto& [agent_name, list] : per_agent) {
            bool any = false;
            for (const auto& e : list) any = any || !e.evaluation_failure;
            if (any) {
                rows.push_back(aggregate(list, agent_name));
            } else {
                AgentReport empty;
                empty.agent = agent_name;
                empty.evaluation_failures = static_cast<int>(list.size());
                rows.push_back(empty);
            }
        }
    }
    report.reduction = reduction(judged);
    if (options.labels) report.confusion = confusion(labelled, *options.labels);
    return report;
}

std::string render_report_markdown(const RunReport& report) {
    std::string out = "# Run report\n";
    for (const auto& [set, rows] : report.tables) {
        out += "\n## " + set + "\n\n" + render_markdown(rows);
        int failures = 0;
        for (const auto& r : rows) failures += r.evaluation_failures;
        if (failures > 0) out += "\nEvaluation failures excluded: " + std::to_string(failures) + "\n";
    }
    out += "\n## Key-component filter\n\n" + render_reduction_markdown(report.reduction);
    if (report.confusion) out += "\n## Detector agreement with human labels\n\n" + render_confusion_markdown(*report.confusion);
    if (!report.unevaluated.empty()) {
        out += "\n## Not evaluated\n\n";
        for (const auto& e : report.unevaluated) out += "- " + e + "\n";
    }
    return out;
}

}  // namespace mobench::metrics
