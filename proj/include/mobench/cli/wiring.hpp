#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "mobench/cli/config.hpp"
#include "mobench/device/mock_device.hpp"
#include "mobench/eval/run_eval.hpp"
#include "mobench/providers/chat.hpp"
#include "mobench/providers/ocr.hpp"

namespace mobench::cli {

/// Judge client for the configured endpoint; the key is read from the
/// environment. With a non-empty `record_path` every exchange is also written
/// to a cassette.
std::shared_ptr<providers::ChatProvider> make_chat_provider(const JudgeConfig& judge,
                                                            const std::string& record_path = {});

/// Subprocess adapter when a command is configured, the fixture-backed mock
/// when only a fixture is, otherwise an engine that reports itself unavailable.
std::unique_ptr<providers::OcrEngine> make_ocr(const OcrConfig& ocr);

/// Mock OCR that knows the text of every screen of the given scenarios.
std::unique_ptr<providers::MockOcr> mock_ocr(const std::vector<device::MockScenario>& scenarios);

/// Scenarios of the mock devices recorded in `<run_dir>/plan.json`.
std::vector<device::MockScenario> run_scenarios(const std::filesystem::path& run_dir);

/// Mock chat with a subtask responder that proposes one subtask per app of
/// `task`, in order.
void add_subtask_responder(providers::MockChatProvider& chat, const dataset::TaskSpec& task);

eval::RunEvalOptions eval_options(const HarnessConfig& config);

}  // namespace mobench::cli
