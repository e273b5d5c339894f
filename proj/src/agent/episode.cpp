#include "mobench/agent/episode.hpp"

#include <cstdio>

#include "mobench/util/fs.hpp"

namespace mobench::agent {

namespace {

std::string frame_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d.png", index);
    return buf;
}

struct EpisodeEnd {
    ErrorKind kind;
    std::string message;
};

}  // namespace

ErrorClass classify_error(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::protocol_violation:
        case ErrorKind::invalid_action:
        case ErrorKind::missing_input:
        case ErrorKind::agent_abort:
        case ErrorKind::agent_timeout:
        case ErrorKind::agent_crash:
            return ErrorClass::expected;
        case ErrorKind::device_offline:
        case ErrorKind::capture_timeout:
        case ErrorKind::device_failure:
        case ErrorKind::network_failure:
            return ErrorClass::unexpected;
    }
    return ErrorClass::unexpected;
}

ErrorKind error_kind_for(const device::DeviceError& e) {
    using Code = device::DeviceError::Code;
    switch (e.code()) {
        case Code::offline: return ErrorKind::device_offline;
        case Code::capture_timeout: return ErrorKind::capture_timeout;
        case Code::out_of_bounds: return ErrorKind::invalid_action;
        case Code::ui_tree_unavailable: return ErrorKind::missing_input;
        case Code::snapshot_unsupported:
        case Code::unknown_snapshot:
        case Code::command_failed: return ErrorKind::device_failure;
    }
    return ErrorKind::device_failure;
}

RerunDecision rerun_policy(const Trajectory& outcome, int reruns_so_far, int max_reruns) {
    if (outcome.termination != Termination::error) return RerunDecision::keep;
    if (outcome.error_class != ErrorClass::unexpected) return RerunDecision::keep;
    return reruns_so_far < max_reruns ? RerunDecision::rerun : RerunDecision::keep;
}

Trajectory run_episode(AgentSession& session, const dataset::TaskSpec& task, device::Device& dev, Clock& clock,
                       const EpisodeContext& ctx) {
    Trajectory t;
    t.task_id = task.id;
    t.agent_name = ctx.agent_name;
    t.step_budget = ctx.budget;
    t.device_serial = dev.handle().serial;
    t.started_at = clock.now();

    std::optional<EpisodeEnd> failure;
    auto fail = [&](ErrorKind kind, std::string message) { failure = EpisodeEnd{kind, std::move(message)}; };

    Capabilities caps;
    try {
        caps = session.start(Hello{task.id, task.description, ctx.budget, task.language});
    } catch (const AgentFailure& e) {
        fail(e.kind(), e.what());
    }
    if (!failure && caps.screenshot) std::filesystem::create_directories(ctx.workdir);

    for (int step = 0; !failure; ++step) {
        try {
            t.screenshots.push_back(dev.capture(step, clock));
        } catch (const device::DeviceError& e) {
            fail(error_kind_for(e), e.what());
            break;
        } catch (const Error& e) {
            fail(ErrorKind::device_failure, e.what());
            break;
        }
        if (step == ctx.budget) {
            t.termination = Termination::max_steps_reached;
            break;
        }

        Observation obs;
        obs.step = step;
        obs.task_description = task.description;
        obs.remaining_steps = ctx.budget - step;
        if (caps.screenshot) {
            const auto path = ctx.workdir / frame_name(step);
            fs::write_file(path, t.screenshots.back().png);
            obs.screenshot_path = std::filesystem::absolute(path).string();
        }
        if (caps.ui_tree != UiTreeWant::no) {
            try {
                obs.ui_tree = dev.dump_ui_tree();
                obs.ui_tree_status = UiTreeStatus::ok;
            } catch (const device::DeviceError& e) {
                if (e.code() != device::DeviceError::Code::ui_tree_unavailable) {
                    fail(error_kind_for(e), e.what());
                    break;
                }
                if (caps.ui_tree == UiTreeWant::required) {
                    fail(ErrorKind::missing_input, std::string("required UI tree unavailable: ") + e.what());
                    break;
                }
                obs.ui_tree_status = UiTreeStatus::unavailable;
            }
        }

        const double sent_at = clock.now();
        Decision d;
        try {
            d = session.decide(obs);
        } catch (const AgentFailure& e) {
            fail(e.kind(), e.what());
            break;
        }
        StepRecord rec{step, d.decision, 0.0, d.prompt_tokens, d.completion_tokens, d.log};

        if (d.decision.kind == DecisionKind::complete) {
            rec.latency_s = clock.now() - sent_at;
            t.final_decision = rec;
            t.termination = Termination::self_reported_completion;
            break;
        }
        if (d.decision.kind == DecisionKind::abort) {
            rec.latency_s = clock.now() - sent_at;
            t.final_decision = rec;
            const auto kind = d.decision.category == "network" ? ErrorKind::network_failure : ErrorKind::agent_abort;
            fail(kind, d.decision.reason.empty() ? "agent aborted" : d.decision.reason);
            break;
        }
        try {
            dev.perform(*d.decision.action, clock);
        } catch (const device::DeviceError& e) {
            rec.latency_s = clock.now() - sent_at;
            t.final_decision = rec;
            fail(error_kind_for(e), e.what());
            break;
        } catch (const Error& e) {
            rec.latency_s = clock.now() - sent_at;
            t.final_decision = rec;
            fail(ErrorKind::device_failure, e.what());
            break;
        }
        rec.latency_s = clock.now() - sent_at;
        t.steps.push_back(std::move(rec));
    }

    if (failure) {
        t.termination = Termination::error;
        t.error_kind = failure->kind;
        t.error_class = classify_error(failure->kind);
        t.error_message = failure->message;
    }
    const char* reason = t.termination == Termination::self_reported_completion ? "completed"
                         : t.termination == Termination::max_steps_reached     ? "max_steps"
                                                                               : "error";
    session.finish(Bye{reason});
    t.finished_at = clock.now();
    return t;
}

}  // namespace mobench::agent
