#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mobench/agent/protocol.hpp"
#include "mobench/agent/trajectory.hpp"
#include "mobench/util/subprocess.hpp"

namespace mobench::agent {

struct AgentTimeouts {
    std::chrono::milliseconds handshake{30000};
    std::chrono::milliseconds decision{120000};
    std::chrono::milliseconds shutdown{5000};
};

/// How to start one agent. `launch` is a shell command line; `{task_id}` and
/// `{workdir}` are substituted (shell-quoted) and MOBENCH_WORKDIR is exported.
/// A non-empty `script` selects the in-process replay agent instead.
struct AgentDescriptor {
    std::string name;
    std::string launch;
    std::filesystem::path script;
    bool wants_screenshot = true;
    bool wants_ui_tree = false;
    AgentTimeouts timeouts;
    std::map<std::string, std::string> env;

    /// Throws ValidationError.
    void validate() const;
};

/// The agent side failed; `kind` is one of the agent-caused ErrorKinds.
class AgentFailure : public Error {
public:
    AgentFailure(ErrorKind kind, const std::string& message) : Error(message), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// One agent attached to one episode.
class AgentSession {
public:
    virtual ~AgentSession() = default;
    /// Sends hello and returns the agent's capabilities. Throws AgentFailure.
    virtual Capabilities start(const Hello& hello) = 0;
    /// One decision per observation. Throws AgentFailure.
    virtual Decision decide(const Observation& obs) = 0;
    /// Sends bye and lets the agent exit; never throws.
    virtual void finish(const Bye& bye) = 0;
};

/// Agent running as a child process speaking protocol v1 on stdin/stdout.
/// stderr goes to `<workdir>/agent.stderr`.
class ProcessAgentSession final : public AgentSession {
public:
    ProcessAgentSession(const AgentDescriptor& descriptor, const std::string& task_id,
                        const std::filesystem::path& workdir);
    ~ProcessAgentSession() override;

    Capabilities start(const Hello& hello) override;
    Decision decide(const Observation& obs) override;
    void finish(const Bye& bye) override;

    /// Exit code after finish(); nullopt if the agent had to be killed.
    std::optional<int> exit_code() const noexcept { return exit_code_; }

private:
    AgentMessage exchange(const std::string& line, std::chrono::milliseconds timeout, const char* waiting_for);

    AgentDescriptor descriptor_;
    std::unique_ptr<Process> process_;
    std::optional<int> exit_code_;
    bool finished_ = false;
};

/// Replays a fixed decision list; declares completion once it runs out.
class ScriptedAgentSession final : public AgentSession {
public:
    explicit ScriptedAgentSession(std::vector<AgentDecision> script, Capabilities caps = {});

    Capabilities start(const Hello& hello) override;
    Decision decide(const Observation& obs) override;
    void finish(const Bye& bye) override;

    const std::vector<Observation>& observations() const noexcept { return observations_; }
    const std::optional<Hello>& hello() const noexcept { return hello_; }
    const std::optional<Bye>& bye() const noexcept { return bye_; }

private:
    std::vector<AgentDecision> script_;
    Capabilities caps_;
    std::size_t next_ = 0;
    std::optional<Hello> hello_;
    std::optional<Bye> bye_;
    std::vector<Observation> observations_;
};

/// Replay script file: {"default": [decision...], "tasks": {"<task_id>": [decision...]}}
/// where each decision is {"decision": "act"|"complete"|"abort", "action": {...}, ...}.
struct ReplayScript {
    std::vector<AgentDecision> fallback;
    std::map<std::string, std::vector<AgentDecision>> tasks;

    const std::vector<AgentDecision>& for_task(const std::string& task_id) const;
};

/// Throws ParseError.
ReplayScript parse_replay_script(std::string_view text);
ReplayScript load_replay_script(const std::filesystem::path& path);

/// Builds the session a descriptor asks for.
std::unique_ptr<AgentSession> open_session(const AgentDescriptor& descriptor, const std::string& task_id,
                                           const std::filesystem::path& workdir);

}  // namespace mobench::agent
