#include "mobench/metrics/metrics.hpp"

#include <charconv>
#include <cstdio>
#include <set>

#include "mobench/util/text.hpp"

namespace mobench::metrics {

using agent::Termination;

EpisodeOutcome episode_metrics(const agent::Trajectory& traj, const eval::Verdict& verdict,
                               const dataset::TaskSpec& task, const providers::CostTable* costs,
                               const std::string& model_id) {
    EpisodeOutcome e;
    e.agent = traj.agent_name;
    e.task_id = traj.task_id;
    e.success = verdict.success && !verdict.evaluation_failure;
    e.evaluation_failure = verdict.evaluation_failure;
    e.agent_steps = static_cast<int>(traj.steps.size());
    e.golden_steps = task.golden_steps;
    e.termination = traj.termination;
    if (traj.termination == Termination::self_reported_completion) e.premature = !e.success;
    if (traj.termination == Termination::max_steps_reached) e.overdue = e.success;
    if (e.success && e.golden_steps && *e.golden_steps > 0) {
        e.step_ratio = static_cast<double>(e.agent_steps) / *e.golden_steps;
    }
    e.total_time_s = traj.wall_time_s();
    e.prompt_tokens = traj.prompt_tokens();
    e.completion_tokens = traj.completion_tokens();
    if (costs && !model_id.empty() && costs->contains(model_id)) {
        e.cost_usd = costs->cost(providers::Usage{e.prompt_tokens, e.completion_tokens}, model_id);
    }
    return e;
}

AgentReport aggregate(const std::vector<EpisodeOutcome>& episodes, const std::string& agent) {
    AgentReport r;
    r.agent = agent.empty() && !episodes.empty() ? episodes.front().agent : agent;
    double ratio_sum = 0.0;
    int ratio_count = 0;
    double time_sum = 0.0;
    double cost_sum = 0.0;
    bool cost_known = true;
    long steps = 0;
    for (const auto& e : episodes) {
        if (e.evaluation_failure) {
            ++r.evaluation_failures;
            continue;
        }
        ++r.episodes;
        r.successes += e.success;
        switch (e.termination) {
            case Termination::self_reported_completion:
                ++r.src;
                r.src_failures += !e.success;
                break;
            case Termination::max_steps_reached:
                ++r.msr;
                r.msr_successes += e.success;
                break;
            case Termination::error: ++r.errors; break;
        }
        if (e.step_ratio) {
            ratio_sum += *e.step_ratio;
            ++ratio_count;
        }
        time_sum += e.total_time_s;
        steps += e.agent_steps;
        if (e.cost_usd) {
            cost_sum += *e.cost_usd;
        } else {
            cost_known = false;
        }
    }
    if (r.episodes == 0) throw Error("no evaluated episodes to aggregate");
    const double n = r.episodes;
    r.success_rate = r.successes / n;
    r.src_rate = r.src / n;
    r.msr_rate = r.msr / n;
    r.error_rate = r.errors / n;
    if (r.src > 0) r.premature_rate = static_cast<double>(r.src_failures) / r.src;
    if (r.msr > 0) r.overdue_rate = static_cast<double>(r.msr_successes) / r.msr;
    if (ratio_count > 0) r.mean_step_ratio_on_success = ratio_sum / ratio_count;
    if (steps > 0) {
        r.mean_exec_time_per_step_s = time_sum / static_cast<double>(steps);
        if (cost_known) r.mean_token_cost_per_step_usd = cost_sum / static_cast<double>(steps);
    }
    return r;
}

std::vector<AgentReport> aggregate_by_agent(const std::vector<EpisodeOutcome>& episodes) {
    std::map<std::string, std::vector<EpisodeOutcome>> by_agent;
    for (const auto& e : episodes) by_agent[e.agent].push_back(e);
    std::vector<AgentReport> out;
    for (const auto& [agent, list] : by_agent) out.push_back(aggregate(list, agent));
    return out;
}

ConfusionReport confusion_from_counts(int tp, int fp, int fn, int tn) {
    ConfusionReport c;
    c.tp = tp;
    c.fp = fp;
    c.fn = fn;
    c.tn = tn;
    if (tp + fp > 0) c.precision = static_cast<double>(tp) / (tp + fp);
    if (tp + fn > 0) c.recall = static_cast<double>(tp) / (tp + fn);
    if (2 * tp + fp + fn > 0) c.f1 = 2.0 * tp / (2.0 * tp + fp + fn);
    const int total = tp + fp + fn + tn;
    c.accuracy = total > 0 ? static_cast<double>(tp + tn) / total : 0.0;
    return c;
}

namespace {

std::vector<std::string> csv_fields(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) throw ParseError("unterminated quote in CSV line");
    out.push_back(std::move(cur));
    return out;
}

std::string csv_escape(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::vector<std::string> data_lines(std::string_view csv) {
    std::vector<std::string> out;
    for (auto& line : text::split_lines(csv)) {
        if (!text::trim(line).empty()) out.push_back(line);
    }
    return out;
}

}  // namespace

std::vector<HumanLabel> parse_labels(std::string_view csv) {
    const auto lines = data_lines(csv);
    if (lines.empty() || text::trim(lines.front()) != "task_id,agent,label,annotator") {
        throw ParseError("label file must start with the header task_id,agent,label,annotator");
    }
    std::vector<HumanLabel> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = csv_fields(lines[i]);
        if (f.size() != 4) throw ParseError("label line " + std::to_string(i + 1) + " needs 4 fields");
        const auto bit = text::trim(f[2]);
        if (bit != "0" && bit != "1") throw ParseError("label line " + std::to_string(i + 1) + ": label must be 0 or 1");
        out.push_back({text::trim(f[0]), text::trim(f[1]), bit == "1", text::trim(f[3])});
    }
    return out;
}

ConfusionReport confusion(const std::map<PairKey, eval::Verdict>& predicted, const std::vector<HumanLabel>& labels) {
    std::map<PairKey, std::pair<int, int>> votes;  // (yes, no)
    for (const auto& l : labels) {
        auto& v = votes[{l.agent, l.task_id}];
        (l.success ? v.first : v.second)++;
    }
    std::vector<std::string> problems;
    for (const auto& [key, v] : votes) {
        if (v.first == v.second) problems.push_back("annotators tie on " + key.first + "/" + key.second);
        if (!predicted.count(key)) problems.push_back("label for " + key.first + "/" + key.second + " has no verdict");
    }
    for (const auto& [key, _] : predicted) {
        if (!votes.count(key)) problems.push_back("verdict for " + key.first + "/" + key.second + " has no label");
    }
    if (!problems.empty()) throw ValidationError(std::move(problems));

    int tp = 0, fp = 0, fn = 0, tn = 0, excluded = 0;
    for (const auto& [key, v] : votes) {
        const auto& verdict = predicted.at(key);
        if (verdict.evaluation_failure) {
            ++excluded;
            continue;
        }
        const bool human = v.first > v.second;
        if (verdict.success && human) ++tp;
        if (verdict.success && !human) ++fp;
        if (!verdict.success && human) ++fn;
        if (!verdict.success && !human) ++tn;
    }
    auto c = confusion_from_counts(tp, fp, fn, tn);
    c.excluded = excluded;
    return c;
}

ReductionReport reduction(const std::vector<eval::Verdict>& verdicts) {
    ReductionReport r;
    for (const auto& v : verdicts) {
        if (v.evaluation_failure) continue;
        if (v.stage != eval::Stage::coarse_reject && !v.coarse_matched_index) continue;
        ++r.evaluated;
        r.rejected += v.stage == eval::Stage::coarse_reject;
    }
    r.reduction_rate = r.evaluated > 0 ? static_cast<double>(r.rejected) / r.evaluated : 0.0;
    return r;
}

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string fixed(std::optional<double> v, int decimals) {
    if (!v) return "-";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, *v);
    return buf;
}

std::string csv_number(std::optional<double> v) { return v ? format_number(*v) : "-"; }

std::optional<double> parse_optional(const std::string& s, const char* column) {
    if (s == "-") return std::nullopt;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ParseError(std::string("bad number '") + s + "' in column " + column);
    }
    return v;
}

int parse_count(const std::string& s, const char* column) {
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || v < 0) {
        throw ParseError(std::string("bad count '") + s + "' in column " + column);
    }
    return v;
}

constexpr const char* kCsvHeader =
    "agent,episodes,successes,src,msr,errors,src_failures,msr_successes,evaluation_failures,success_rate,"
    "mean_step_ratio_on_success,src_rate,msr_rate,error_rate,premature_rate,overdue_rate,"
    "mean_exec_time_per_step_s,mean_token_cost_per_step_usd";

}  // namespace

std::string render_markdown(const std::vector<AgentReport>& reports) {
    std::string out =
        "| Agent | Success Rate | Mean Step Ratio on Success | SRC | MSR | Error | Premature | Overdue | "
        "Mean Exec Time per Step (s) | Mean Token Cost per Step (USD) |\n"
        "|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : reports) {
        out += "| " + r.agent + " | " + fixed(r.success_rate, 3) + " | " + fixed(r.mean_step_ratio_on_success, 2) +
               " | " + fixed(r.src_rate, 3) + " | " + fixed(r.msr_rate, 3) + " | " + fixed(r.error_rate, 3) + " | " +
               fixed(r.premature_rate, 3) + " | " + fixed(r.overdue_rate, 3) + " | " +
               fixed(r.mean_exec_time_per_step_s, 1) + " | " + fixed(r.mean_token_cost_per_step_usd, 4) + " |\n";
    }
    return out;
}

std::string render_csv(const std::vector<AgentReport>& reports) {
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& r : reports) {
        out += csv_escape(r.agent);
        for (const int c : {r.episodes, r.successes, r.src, r.msr, r.errors, r.src_failures, r.msr_successes,
                            r.evaluation_failures}) {
            out += "," + std::to_string(c);
        }
        for (const auto& v : {std::optional<double>(r.success_rate), r.mean_step_ratio_on_success,
                              std::optional<double>(r.src_rate), std::optional<double>(r.msr_rate),
                              std::optional<double>(r.error_rate), r.premature_rate, r.overdue_rate,
                              r.mean_exec_time_per_step_s, r.mean_token_cost_per_step_usd}) {
            out += "," + csv_number(v);
        }
        out += "\n";
    }
    return out;
}

std::vector<AgentReport> parse_report_csv(std::string_view csv) {
    const auto lines = data_lines(csv);
    if (lines.empty() || lines.front() != kCsvHeader) throw ParseError("report CSV header mismatch");
    std::vector<AgentReport> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = csv_fields(lines[i]);
        if (f.size() != 18) throw ParseError("report CSV line " + std::to_string(i + 1) + " needs 18 fields");
        AgentReport r;
        r.agent = f[0];
        r.episodes = parse_count(f[1], "episodes");
        r.successes = parse_count(f[2], "successes");
        r.src = parse_count(f[3], "src");
        r.msr = parse_count(f[4], "msr");
        r.errors = parse_count(f[5], "errors");
        r.src_failures = parse_count(f[6], "src_failures");
        r.msr_successes = parse_count(f[7], "msr_successes");
        r.evaluation_failures = parse_count(f[8], "evaluation_failures");
        auto required = [&](const std::string& s, const char* col) {
            const auto v = parse_optional(s, col);
            if (!v) throw ParseError(std::string("column ") + col + " cannot be '-'");
            return *v;
        };
        r.success_rate = required(f[9], "success_rate");
        r.mean_step_ratio_on_success = parse_optional(f[10], "mean_step_ratio_on_success");
        r.src_rate = required(f[11], "src_rate");
        r.msr_rate = required(f[12], "msr_rate");
        r.error_rate = required(f[13], "error_rate");
        r.premature_rate = parse_optional(f[14], "premature_rate");
        r.overdue_rate = parse_optional(f[15], "overdue_rate");
        r.mean_exec_time_per_step_s = parse_optional(f[16], "mean_exec_time_per_step_s");
        r.mean_token_cost_per_step_usd = parse_optional(f[17], "mean_token_cost_per_step_usd");
        out.push_back(std::move(r));
    }
    return out;
}

std::string render_confusion_markdown(const ConfusionReport& c) {
    return "| TP | FP | FN | TN | Excluded | Precision | Recall | F1 | Accuracy |\n"
           "|---|---|---|---|---|---|---|---|---|\n"
           "| " +
           std::to_string(c.tp) + " | " + std::to_string(c.fp) + " | " + std::to_string(c.fn) + " | " +
           std::to_string(c.tn) + " | " + std::to_string(c.excluded) + " | " + fixed(c.precision, 3) + " | " +
           fixed(c.recall, 3) + " | " + fixed(c.f1, 3) + " | " + fixed(c.accuracy, 3) + " |\n";
}

std::string render_reduction_markdown(const ReductionReport& r) {
    return "| Evaluated | Rejected by key components | Reduction |\n|---|---|---|\n| " + std::to_string(r.evaluated) +
           " | " + std::to_string(r.rejected) + " | " + fixed(r.reduction_rate, 3) + " |\n";
}

}  // namespace mobench::metrics
