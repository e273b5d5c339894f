#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mobench/agent/trajectory.hpp"
#include "mobench/dataset/task.hpp"
#include "mobench/eval/verdict.hpp"
#include "mobench/providers/cost.hpp"

namespace mobench::metrics {

struct EpisodeOutcome {
    std::string agent;
    std::string task_id;
    bool success = false;
    /// The detector could not decide; such episodes are left out of rates.
    bool evaluation_failure = false;
    int agent_steps = 0;
    std::optional<int> golden_steps;
    agent::Termination termination = agent::Termination::error;
    std::optional<bool> premature;  ///< SRC only
    std::optional<bool> overdue;    ///< MSR only
    std::optional<double> step_ratio;  ///< successful episodes with golden steps only
    double total_time_s = 0.0;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    std::optional<double> cost_usd;  ///< unset when the agent's model has no rate

    friend bool operator==(const EpisodeOutcome&, const EpisodeOutcome&) = default;
};

/// `model_id` names the agent's backing model in `costs`; without one the
/// episode has no cost.
EpisodeOutcome episode_metrics(const agent::Trajectory& traj, const eval::Verdict& verdict,
                               const dataset::TaskSpec& task, const providers::CostTable* costs = nullptr,
                               const std::string& model_id = {});

struct AgentReport {
    std::string agent;
    int episodes = 0;  ///< excluding evaluation failures
    int successes = 0;
    int src = 0;
    int msr = 0;
    int errors = 0;
    int src_failures = 0;
    int msr_successes = 0;
    int evaluation_failures = 0;

    double success_rate = 0.0;
    std::optional<double> mean_step_ratio_on_success;
    double src_rate = 0.0;
    double msr_rate = 0.0;
    double error_rate = 0.0;
    std::optional<double> premature_rate;  ///< unset without SRC episodes
    std::optional<double> overdue_rate;    ///< unset without MSR episodes
    std::optional<double> mean_exec_time_per_step_s;
    std::optional<double> mean_token_cost_per_step_usd;

    friend bool operator==(const AgentReport&, const AgentReport&) = default;
};

/// Rates are ratios of counts; per-step means are ratios of sums over all
/// episodes. Throws Error when no episode is left after dropping evaluation
/// failures.
AgentReport aggregate(const std::vector<EpisodeOutcome>& episodes, const std::string& agent = {});

/// One report per agent, in agent name order.
std::vector<AgentReport> aggregate_by_agent(const std::vector<EpisodeOutcome>& episodes);

struct ConfusionReport {
    int tp = 0;
    int fp = 0;
    int fn = 0;
    int tn = 0;
    int excluded = 0;  ///< labelled pairs whose verdict is an evaluation failure
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    double accuracy = 0.0;
};

ConfusionReport confusion_from_counts(int tp, int fp, int fn, int tn);

struct HumanLabel {
    std::string task_id;
    std::string agent;
    bool success = false;
    std::string annotator;
};

/// CSV with header `task_id,agent,label,annotator`; label is 0 or 1.
std::vector<HumanLabel> parse_labels(std::string_view csv);

using PairKey = std::pair<std::string, std::string>;  ///< (agent, task)

/// Several annotators on one pair are resolved by majority; a tie, a label
/// without a verdict or a verdict without a label throws ValidationError.
ConfusionReport confusion(const std::map<PairKey, eval::Verdict>& predicted, const std::vector<HumanLabel>& labels);

struct ReductionReport {
    int evaluated = 0;
    int rejected = 0;
    double reduction_rate = 0.0;
};

/// Fraction of verdicts that went through the coarse stage (coarse rejects
/// and coarse matches; evaluation failures excluded) rejected before the judge.
ReductionReport reduction(const std::vector<eval::Verdict>& verdicts);

std::string render_markdown(const std::vector<AgentReport>& reports);
std::string render_csv(const std::vector<AgentReport>& reports);
/// Inverse of render_csv. Throws ParseError.
std::vector<AgentReport> parse_report_csv(std::string_view csv);

std::string render_confusion_markdown(const ConfusionReport& c);
std::string render_reduction_markdown(const ReductionReport& r);

/// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

}  // namespace mobench::metrics
