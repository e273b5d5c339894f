#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "mobench/agent/trajectory.hpp"
#include "mobench/dataset/task.hpp"

namespace mobench::agent {

/// Agent wire protocol v1: one JSON object per line over the agent's
/// stdin/stdout, keys sorted. See docs/agent-protocol.md.
inline constexpr std::string_view kProtocolVersion = "v1";

/// The agent broke the protocol: unparseable line, wrong message type,
/// missing field or bad value.
class ProtocolError : public Error {
public:
    using Error::Error;
};

struct Hello {
    std::string task_id;
    std::string task_description;
    int step_budget = 0;
    dataset::Language language = dataset::Language::english;
    friend bool operator==(const Hello&, const Hello&) = default;
};

enum class UiTreeWant { no, yes, required };

struct Capabilities {
    bool screenshot = true;
    UiTreeWant ui_tree = UiTreeWant::no;
    std::string agent;  ///< optional self-reported name
    friend bool operator==(const Capabilities&, const Capabilities&) = default;
};

enum class UiTreeStatus { ok, unavailable, not_requested };

std::string_view to_string(UiTreeStatus s);

struct Observation {
    int step = 0;
    std::string task_description;
    std::string screenshot_path;  ///< empty when the agent asked for no screenshot
    std::optional<std::string> ui_tree;
    UiTreeStatus ui_tree_status = UiTreeStatus::not_requested;
    int remaining_steps = 0;
    friend bool operator==(const Observation&, const Observation&) = default;
};

struct Decision {
    int step = 0;
    AgentDecision decision;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    std::string log;
    friend bool operator==(const Decision&, const Decision&) = default;
};

struct Bye {
    std::string reason;
    friend bool operator==(const Bye&, const Bye&) = default;
};

std::string encode(const Hello& m);
std::string encode(const Capabilities& m);
std::string encode(const Observation& m);
std::string encode(const Decision& m);
std::string encode(const Bye& m);

using HarnessMessage = std::variant<Hello, Observation, Bye>;
using AgentMessage = std::variant<Capabilities, Decision>;

/// Throw ProtocolError on anything that is not a well-formed message of the
/// given direction. Unknown extra keys are ignored.
AgentMessage parse_agent_message(std::string_view line);
HarnessMessage parse_harness_message(std::string_view line);

}  // namespace mobench::agent
