#include "mobench/agent/session.hpp"

#include <nlohmann/json.hpp>

#include "mobench/util/fs.hpp"
#include "mobench/util/text.hpp"

namespace mobench::agent {

using json = nlohmann::json;
namespace stdfs = std::filesystem;

void AgentDescriptor::validate() const {
    std::vector<std::string> v;
    if (name.empty()) v.push_back("agent name is empty");
    if (!name.empty() && (name.front() == '.' || name.find('/') != std::string::npos)) {
        v.push_back("agent name '" + name + "' cannot be used as a directory name");
    }
    if (launch.empty() == script.empty()) v.push_back("agent '" + name + "' needs exactly one of launch or script");
    if (!wants_screenshot && !wants_ui_tree) v.push_back("agent '" + name + "' requests no observation channel");
    if (!v.empty()) throw ValidationError(std::move(v));
}

ProcessAgentSession::ProcessAgentSession(const AgentDescriptor& descriptor, const std::string& task_id,
                                         const stdfs::path& workdir)
    : descriptor_(descriptor) {
    descriptor_.validate();
    stdfs::create_directories(workdir);
    const auto cmd = text::substitute(descriptor_.launch, {{"task_id", text::shell_quote(task_id)},
                                                           {"workdir", text::shell_quote(workdir.string())}});
    Process::Options options;
    options.env = descriptor_.env;
    options.env["MOBENCH_WORKDIR"] = workdir.string();
    options.env["MOBENCH_TASK_ID"] = task_id;
    options.stderr_path = (workdir / "agent.stderr").string();
    try {
        process_ = std::make_unique<Process>(std::vector<std::string>{"/bin/sh", "-c", cmd}, options);
    } catch (const Error& e) {
        throw AgentFailure(ErrorKind::agent_crash, std::string("cannot launch agent: ") + e.what());
    }
}

ProcessAgentSession::~ProcessAgentSession() {
    if (!finished_) finish(Bye{"error"});
}

AgentMessage ProcessAgentSession::exchange(const std::string& line, std::chrono::milliseconds timeout,
                                           const char* waiting_for) {
    if (!process_->write_line(line)) throw AgentFailure(ErrorKind::agent_crash, "agent closed its input");
    const auto reply = process_->read_line(timeout);
    if (!reply) {
        if (process_->eof()) {
            throw AgentFailure(ErrorKind::agent_crash, std::string("agent exited while waiting for ") + waiting_for);
        }
        throw AgentFailure(ErrorKind::agent_timeout, std::string("no ") + waiting_for + " within " +
                                                         std::to_string(timeout.count()) + " ms");
    }
    try {
        return parse_agent_message(*reply);
    } catch (const ProtocolError& e) {
        throw AgentFailure(ErrorKind::protocol_violation, e.what());
    }
}

Capabilities ProcessAgentSession::start(const Hello& hello) {
    const auto msg = exchange(encode(hello), descriptor_.timeouts.handshake, "capabilities");
    const auto* caps = std::get_if<Capabilities>(&msg);
    if (!caps) throw AgentFailure(ErrorKind::protocol_violation, "expected capabilities, got a decision");
    return *caps;
}

Decision ProcessAgentSession::decide(const Observation& obs) {
    const auto msg = exchange(encode(obs), descriptor_.timeouts.decision, "decision");
    const auto* d = std::get_if<Decision>(&msg);
    if (!d) throw AgentFailure(ErrorKind::protocol_violation, "expected a decision, got capabilities");
    if (d->step != obs.step) {
        throw AgentFailure(ErrorKind::protocol_violation, "decision for step " + std::to_string(d->step) +
                                                              " answers observation " + std::to_string(obs.step));
    }
    return *d;
}

void ProcessAgentSession::finish(const Bye& bye) {
    if (finished_) return;
    finished_ = true;
    process_->write_line(encode(bye));
    exit_code_ = process_->wait(descriptor_.timeouts.shutdown);
    if (!exit_code_) process_->kill();
}

ScriptedAgentSession::ScriptedAgentSession(std::vector<AgentDecision> script, Capabilities caps)
    : script_(std::move(script)), caps_(std::move(caps)) {}

Capabilities ScriptedAgentSession::start(const Hello& hello) {
    hello_ = hello;
    return caps_;
}

Decision ScriptedAgentSession::decide(const Observation& obs) {
    observations_.push_back(obs);
    Decision d;
    d.step = obs.step;
    if (next_ < script_.size()) {
        d.decision = script_[next_++];
    } else {
        d.decision.kind = DecisionKind::complete;
    }
    return d;
}

void ScriptedAgentSession::finish(const Bye& bye) { bye_ = bye; }

const std::vector<AgentDecision>& ReplayScript::for_task(const std::string& task_id) const {
    const auto it = tasks.find(task_id);
    return it == tasks.end() ? fallback : it->second;
}

namespace {

std::vector<AgentDecision> parse_decisions(const json& j, const std::string& where) {
    if (!j.is_array()) throw ParseError(where + " must be an array");
    std::vector<AgentDecision> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto at = where + "[" + std::to_string(i) + "]";
        try {
            auto d = decision_from_json(j[i]);
            if ((d.kind == DecisionKind::act) != d.action.has_value()) {
                throw ParseError("an action is required for act decisions only");
            }
            out.push_back(std::move(d));
        } catch (const ParseError& e) {
            throw ParseError(at + ": " + e.what());
        } catch (const json::exception& e) {
            throw ParseError(at + ": " + e.what());
        }
    }
    return out;
}

}  // namespace

ReplayScript parse_replay_script(std::string_view text) {
    const json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError("replay script must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (key != "default" && key != "tasks") throw ParseError("unknown replay script key '" + key + "'");
    }
    ReplayScript script;
    if (j.contains("default")) script.fallback = parse_decisions(j.at("default"), "default");
    if (j.contains("tasks")) {
        if (!j.at("tasks").is_object()) throw ParseError("tasks must be an object");
        for (const auto& [task, list] : j.at("tasks").items()) {
            script.tasks[task] = parse_decisions(list, "tasks." + task);
        }
    }
    return script;
}

ReplayScript load_replay_script(const stdfs::path& path) { return parse_replay_script(fs::read_file(path)); }

std::unique_ptr<AgentSession> open_session(const AgentDescriptor& descriptor, const std::string& task_id,
                                           const stdfs::path& workdir) {
    descriptor.validate();
    if (descriptor.script.empty()) return std::make_unique<ProcessAgentSession>(descriptor, task_id, workdir);
    Capabilities caps;
    caps.screenshot = descriptor.wants_screenshot;
    caps.ui_tree = descriptor.wants_ui_tree ? UiTreeWant::yes : UiTreeWant::no;
    caps.agent = descriptor.name;
    return std::make_unique<ScriptedAgentSession>(load_replay_script(descriptor.script).for_task(task_id), caps);
}

}  // namespace mobench::agent
