#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mobench/dataset/task.hpp"
#include "mobench/metrics/metrics.hpp"
#include "mobench/providers/cost.hpp"

namespace mobench::metrics {

struct ReportOptions {
    const providers::CostTable* costs = nullptr;
    /// agent name -> model id used to price the agent's own tokens
    std::map<std::string, std::string> agent_models;
    std::optional<std::vector<HumanLabel>> labels;
};

struct RunReport {
    std::vector<EpisodeOutcome> episodes;
    /// "all" plus one entry per "<language>/<scope>" task set present.
    std::map<std::string, std::vector<AgentReport>> tables;
    ReductionReport reduction;
    std::optional<ConfusionReport> confusion;
    /// Stored episodes that have no verdict yet.
    std::vector<std::string> unevaluated;
};

/// Joins the stored episodes of `run_dir` with its verdicts.json.
RunReport build_report(const std::filesystem::path& run_dir, const dataset::TaskSet& tasks,
                       const ReportOptions& options = {});

std::string render_report_markdown(const RunReport& report);

}  // namespace mobench::metrics
