#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mobench/agent/session.hpp"

namespace mobench::agent {

enum class ConformanceCode {
    bad_handshake,
    malformed_message,
    duplicate_decision,
    missing_decision,
    wrong_step,
    shutdown_timeout,
    bad_exit,
    transcript_mismatch,
};

std::string_view to_string(ConformanceCode code);

struct ConformanceViolation {
    ConformanceCode code;
    std::string detail;
};

struct ConformanceOptions {
    /// Observations offered before the checker says bye (fewer if the agent
    /// completes or aborts first).
    int steps = 3;
    std::string task_id = "conformance";
    std::string task_description = "Open the settings screen";
    AgentTimeouts timeouts{std::chrono::milliseconds(10000), std::chrono::milliseconds(10000),
                           std::chrono::milliseconds(3000)};
    /// How long to listen for a second answer after each decision.
    std::chrono::milliseconds grace{150};
    /// Scratch directory for observation screenshots; a temporary one when empty.
    std::filesystem::path workdir;
    /// Expected transcript; compared after path normalization.
    std::optional<std::filesystem::path> golden;
};

struct ConformanceReport {
    std::vector<ConformanceViolation> violations;
    /// "> " lines were sent by the harness, "< " lines by the agent. The
    /// workdir prefix of screenshot paths is replaced by "{workdir}".
    std::vector<std::string> transcript;
    std::optional<int> exit_code;

    bool passed() const { return violations.empty(); }
    bool has(ConformanceCode code) const;
    std::string transcript_text() const;
};

/// Launches `launch` under /bin/sh and drives a short scripted session against
/// the mock device, recording every protocol violation.
ConformanceReport check_conformance(const std::string& launch, const ConformanceOptions& options = {});

}  // namespace mobench::agent
