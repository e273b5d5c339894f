#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "mobench/agent/conformance.hpp"
#include "mobench/cli/config.hpp"
#include "mobench/cli/wiring.hpp"
#include "mobench/dataset/task.hpp"
#include "mobench/eval/cross.hpp"
#include "mobench/eval/run_eval.hpp"
#include "mobench/metrics/report.hpp"
#include "mobench/orchestrator/runner.hpp"
#include "mobench/util/fs.hpp"

namespace stdfs = std::filesystem;
using namespace mobench;

namespace {

constexpr int kOk = 0;
constexpr int kDomainFailure = 1;
constexpr int kUsage = 2;

struct Globals {
    std::string config_path;
    bool verbose = false;
    bool quiet = false;
};

cli::HarnessConfig load_config_or_default(const Globals& g) {
    if (g.config_path.empty()) return {};
    return cli::load_config(g.config_path);
}

stdfs::path require_existing(const std::string& path, const char* what) {
    if (path.empty()) throw ConfigError(std::string("no ") + what + " given");
    if (!stdfs::exists(path)) throw ConfigError(std::string(what) + " " + path + " does not exist");
    return path;
}

stdfs::path tasks_path(const std::string& flag, const cli::HarnessConfig& config) {
    if (!flag.empty()) return require_existing(flag, "task path");
    if (!config.tasks.empty()) return config.tasks;
    throw ConfigError("no task path: pass --tasks or set \"tasks\" in the config");
}

void print_violations(const ValidationError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    for (const auto& v : e.violations()) std::fprintf(stderr, "  - %s\n", v.c_str());
}

// ---- validate ---------------------------------------------------------------

struct ValidateArgs {
    std::string tasks;
};

int cmd_validate(const Globals& g, const ValidateArgs& a) {
    const auto config = load_config_or_default(g);
    const auto set = dataset::load_taskset(tasks_path(a.tasks, config));
    std::printf("%zu tasks valid\n", set.tasks.size());
    for (const auto& [key, n] : set.counts()) std::printf("  %s: %d\n", key.c_str(), n);
    return kOk;
}

// ---- run --------------------------------------------------------------------

struct RunArgs {
    std::string plan;
    std::string out;
    std::string tasks;
    bool resume = false;
    std::optional<int> concurrency;
};

int cmd_run(const Globals& g, const RunArgs& a) {
    const auto config = load_config_or_default(g);
    const auto plan_path = require_existing(a.plan, "plan file");
    auto plan_json = config.plan_defaults;
    const auto user_plan = nlohmann::json::parse(fs::read_file(plan_path), nullptr, false);
    if (user_plan.is_discarded() || !user_plan.is_object()) throw ConfigError("plan file is not a JSON object");
    for (const auto& [key, value] : user_plan.items()) plan_json[key] = value;
    if (a.concurrency) plan_json["concurrency"] = *a.concurrency;

    orchestrator::RunPlan plan;
    try {
        plan = orchestrator::parse_plan(plan_json.dump(), plan_path.parent_path());
    } catch (const ParseError& e) {
        throw ConfigError(std::string("plan: ") + e.what());
    }
    stdfs::path task_file;
    if (!a.tasks.empty()) {
        task_file = require_existing(a.tasks, "task path");
    } else if (!plan.task_file.empty()) {
        task_file = plan.task_file;
    } else {
        task_file = tasks_path("", config);
    }
    const auto tasks = dataset::load_taskset(task_file);

    stdfs::path out = a.out;
    if (out.empty()) {
        if (config.output_root.empty()) throw ConfigError("no output directory: pass --out or set output_root");
        out = config.output_root / plan_path.stem();
    }
    orchestrator::ExecuteOptions options;
    options.resume = a.resume;
    const auto record = orchestrator::execute_plan(plan, tasks, out, options);
    const auto done = record.count(orchestrator::PairStatus::done);
    std::printf("%zu/%zu pairs done in %s\n", done, record.pairs.size(), out.string().c_str());
    if (record.aborted) std::fprintf(stderr, "run aborted: no device left; rerun with --resume\n");
    return done == record.pairs.size() ? kOk : kDomainFailure;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
    std::string scope = "all";
    std::string run;
    std::string tasks;
    std::string mode;
    bool mock = false;
    bool force = false;
    std::string cassette;
    std::string record;
};

dataset::TaskSet run_tasks(const stdfs::path& run, const std::string& flag) {
    if (!flag.empty()) return dataset::load_taskset(require_existing(flag, "task path"));
    return dataset::load_taskset(require_existing((run / "tasks.json").string(), "run task file"));
}

int cmd_eval(const Globals& g, const EvalArgs& a) {
    const auto config = load_config_or_default(g);
    const auto run = require_existing(a.run, "run directory");
    const auto tasks = run_tasks(run, a.tasks);
    auto options = cli::eval_options(config);
    try {
        options.scope = eval::parse_eval_scope(a.scope);
    } catch (const ParseError& e) {
        throw ConfigError(e.what());
    }
    if (!a.mode.empty()) options.mode = cli::parse_mode_flag(a.mode);
    options.force = a.force;

    std::shared_ptr<providers::ChatProvider> chat;
    std::unique_ptr<providers::OcrEngine> ocr;
    if (a.mock) {
        chat = a.cassette.empty() ? std::make_shared<providers::MockChatProvider>()
                                  : std::make_shared<providers::MockChatProvider>(a.cassette);
        auto mock = cli::mock_ocr(cli::run_scenarios(run));
        if (!config.ocr.fixture.empty()) {
            const auto extra = providers::MockOcr::load(config.ocr.fixture.string());
            for (const auto& [digest, boxes] : extra.fixture()) mock->add(digest, boxes);
        }
        ocr = std::move(mock);
    } else {
        chat = cli::make_chat_provider(config.judge, a.record);
        ocr = cli::make_ocr(config.ocr);
    }
    const auto result = eval::evaluate_run(run, tasks, *chat, *ocr, options);
    int failures = 0;
    for (const auto& v : result.verdicts) failures += v.verdict.evaluation_failure;
    std::printf("%d judged, %d kept, %zu verdicts (%d evaluation failures) in %s\n", result.judged, result.skipped,
                result.verdicts.size(), failures, (run / "verdicts.json").string().c_str());
    return kOk;
}

// ---- report -----------------------------------------------------------------

struct ReportArgs {
    std::string run;
    std::string tasks;
    std::string labels;
};

int cmd_report(const Globals& g, const ReportArgs& a) {
    const auto config = load_config_or_default(g);
    const auto run = require_existing(a.run, "run directory");
    const auto tasks = run_tasks(run, a.tasks);
    metrics::ReportOptions options;
    options.costs = &config.costs;
    options.agent_models = config.agent_models;
    if (!a.labels.empty()) options.labels = metrics::parse_labels(fs::read_file(require_existing(a.labels, "label file")));
    const auto report = metrics::build_report(run, tasks, options);
    const auto md = metrics::render_report_markdown(report);
    fs::write_file_atomic(run / "report.md", md);
    const auto all = report.tables.find("all");
    fs::write_file_atomic(run / "report.csv", metrics::render_csv(all == report.tables.end() ? std::vector<metrics::AgentReport>{}
                                                                                               : all->second));
    std::fputs(md.c_str(), stdout);
    return report.episodes.empty() ? kDomainFailure : kOk;
}

// ---- review-subtasks ----------------------------------------------------------

struct ReviewArgs {
    std::string tasks;
    std::string task;
    std::string out;
    std::string review;
    bool mock = false;
};

int cmd_review_export(const Globals& g, const ReviewArgs& a) {
    const auto config = load_config_or_default(g);
    const auto set = dataset::load_taskset(tasks_path(a.tasks, config), dataset::Strictness::draft);
    const auto& task = set.at(a.task);
    if (task.scope != dataset::Scope::cross_app) throw ConfigError("task " + a.task + " is not a cross-app task");
    std::shared_ptr<providers::ChatProvider> chat;
    if (a.mock) {
        auto mock = std::make_shared<providers::MockChatProvider>();
        cli::add_subtask_responder(*mock, task);
        chat = mock;
    } else {
        chat = cli::make_chat_provider(config.judge);
    }
    eval::JudgeOptions judge = cli::eval_options(config).detect.judge;
    const auto proposal = eval::generate_subtasks(task, *chat, judge);
    fs::write_file_atomic(a.out, eval::export_review(task, proposal));
    std::printf("wrote %zu proposed subtasks to %s; set \"approved\": true after review\n", proposal.subtasks.size(),
                a.out.c_str());
    return kOk;
}

int cmd_review_import(const Globals& g, const ReviewArgs& a) {
    const auto config = load_config_or_default(g);
    const auto path = tasks_path(a.tasks, config);
    if (stdfs::is_directory(path)) throw ConfigError("review import needs a single task file, not a directory");
    auto set = dataset::load_taskset(path, dataset::Strictness::draft);
    const auto review = eval::import_review(fs::read_file(require_existing(a.review, "review file")));
    eval::apply_review(set, review);
    const auto out = a.out.empty() ? path : stdfs::path(a.out);
    fs::write_file_atomic(out, dataset::serialize_taskset(set));
    std::printf("applied %zu subtasks to %s in %s\n", review.subtasks.size(), review.task_id.c_str(),
                out.string().c_str());
    return kOk;
}

// ---- conformance --------------------------------------------------------------

struct ConformanceArgs {
    std::string agent;
    std::string golden;
    std::string write_golden;
    int steps = 3;
    long timeout_ms = 10000;
};

int cmd_conformance(const Globals&, const ConformanceArgs& a) {
    agent::ConformanceOptions options;
    options.steps = a.steps;
    options.timeouts.handshake = options.timeouts.decision = std::chrono::milliseconds(a.timeout_ms);
    if (!a.golden.empty()) options.golden = require_existing(a.golden, "golden transcript");
    const auto report = agent::check_conformance(a.agent, options);
    if (!a.write_golden.empty()) fs::write_file_atomic(a.write_golden, report.transcript_text());
    for (const auto& v : report.violations) {
        std::printf("FAIL %s: %s\n", std::string(agent::to_string(v.code)).c_str(), v.detail.c_str());
    }
    if (report.passed()) std::printf("PASS protocol v1 conformance\n");
    return report.passed() ? kOk : kDomainFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mobench: benchmark harness for smartphone-control agents"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "Harness config file (JSON)");
    app.add_flag("-v,--verbose", g.verbose, "Debug logging");
    app.add_flag("-q,--quiet", g.quiet, "Warnings and errors only");

    ValidateArgs validate_args;
    auto* validate = app.add_subcommand("validate", "Check a task file or directory");
    validate->add_option("--tasks", validate_args.tasks, "Task file or directory");

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Execute a run plan");
    run->add_option("--plan", run_args.plan, "Run plan file")->required();
    run->add_option("--out", run_args.out, "Run directory");
    run->add_option("--tasks", run_args.tasks, "Task file or directory");
    run->add_flag("--resume", run_args.resume, "Continue an interrupted run");
    run->add_option("--concurrency", run_args.concurrency, "Episodes in flight")->check(CLI::PositiveNumber);

    EvalArgs eval_args;
    auto* ev = app.add_subcommand("eval", "Judge the episodes of a run");
    ev->add_option("scope", eval_args.scope, "single, cross or all")->check(CLI::IsMember({"single", "cross", "all"}));
    ev->add_option("--run", eval_args.run, "Run directory")->required();
    ev->add_option("--tasks", eval_args.tasks, "Task file (default: the run's tasks.json)");
    ev->add_option("--mode", eval_args.mode, "reasoning:action for single-app tasks");
    ev->add_flag("--mock-providers", eval_args.mock, "Use the deterministic mock judge and OCR");
    ev->add_option("--cassette", eval_args.cassette, "Replay cassette for the mock judge");
    ev->add_option("--record", eval_args.record, "Record judge exchanges to a cassette");
    ev->add_flag("--force", eval_args.force, "Re-judge episodes that already have a verdict");

    ReportArgs report_args;
    auto* rep = app.add_subcommand("report", "Render metric tables for a judged run");
    rep->add_option("--run", report_args.run, "Run directory")->required();
    rep->add_option("--tasks", report_args.tasks, "Task file (default: the run's tasks.json)");
    rep->add_option("--labels", report_args.labels, "Human label CSV");

    ReviewArgs review_args;
    auto* review = app.add_subcommand("review-subtasks", "Propose and import reviewed cross-app subtasks");
    review->require_subcommand(1);
    auto* rexport = review->add_subcommand("export", "Write a subtask proposal for review");
    rexport->add_option("--tasks", review_args.tasks, "Task file");
    rexport->add_option("--task", review_args.task, "Task id")->required();
    rexport->add_option("--out", review_args.out, "Review file to write")->required();
    rexport->add_flag("--mock-providers", review_args.mock, "Use the mock model");
    auto* rimport = review->add_subcommand("import", "Apply an approved review file");
    rimport->add_option("--tasks", review_args.tasks, "Task file");
    rimport->add_option("--review", review_args.review, "Approved review file")->required();
    rimport->add_option("--out", review_args.out, "Task file to write (default: in place)");

    ConformanceArgs conf_args;
    auto* conf = app.add_subcommand("conformance", "Check an agent against protocol v1");
    conf->add_option("--agent", conf_args.agent, "Agent launch command")->required();
    conf->add_option("--golden", conf_args.golden, "Expected transcript");
    conf->add_option("--write-golden", conf_args.write_golden, "Write the observed transcript here");
    conf->add_option("--steps", conf_args.steps, "Observations to send")->check(CLI::PositiveNumber);
    conf->add_option("--timeout-ms", conf_args.timeout_ms, "Handshake and decision timeout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    auto logger = spdlog::stderr_color_mt("mobench");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(g.verbose ? spdlog::level::debug : g.quiet ? spdlog::level::warn : spdlog::level::info);

    try {
        if (*validate) return cmd_validate(g, validate_args);
        if (*run) return cmd_run(g, run_args);
        if (*ev) return cmd_eval(g, eval_args);
        if (*rep) return cmd_report(g, report_args);
        if (*rexport) return cmd_review_export(g, review_args);
        if (*rimport) return cmd_review_import(g, review_args);
        if (*conf) return cmd_conformance(g, conf_args);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const ValidationError& e) {
        print_violations(e);
        return kDomainFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kDomainFailure;
    }
    return kUsage;
}
