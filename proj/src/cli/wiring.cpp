#include "mobench/cli/wiring.hpp"

#include "mobench/orchestrator/plan.hpp"
#include "mobench/providers/openai.hpp"
#include "mobench/util/encoding.hpp"
#include "mobench/util/fs.hpp"

namespace mobench::cli {

namespace stdfs = std::filesystem;

namespace {

class UnconfiguredOcr final : public providers::OcrEngine {
public:
    std::vector<providers::OcrBox> recognize(const std::string&) override {
        throw providers::OcrUnavailable("no OCR adapter configured (set ocr.command in the config)");
    }
};

}  // namespace

std::shared_ptr<providers::ChatProvider> make_chat_provider(const JudgeConfig& judge, const std::string& record_path) {
    providers::OpenAIOptions options;
    options.endpoint = judge.endpoint;
    options.timeout = std::chrono::seconds(judge.timeout_s);
    options.max_tokens = judge.max_tokens;
    std::shared_ptr<providers::ChatProvider> chat =
        std::make_shared<providers::OpenAICompatibleProvider>(options, providers::make_http_transport());
    if (judge.requests_per_minute > 0) {
        chat = std::make_shared<providers::RateLimitedProvider>(
            chat, std::make_shared<providers::RateLimiter>(judge.requests_per_minute));
    }
    if (!record_path.empty()) chat = std::make_shared<providers::RecordingProvider>(chat, record_path);
    return chat;
}

std::unique_ptr<providers::OcrEngine> make_ocr(const OcrConfig& ocr) {
    if (!ocr.command.empty()) {
        return std::make_unique<providers::SubprocessOcr>(ocr.command, std::chrono::seconds(ocr.timeout_s));
    }
    if (!ocr.fixture.empty()) {
        return std::make_unique<providers::MockOcr>(providers::MockOcr::load(ocr.fixture.string()));
    }
    return std::make_unique<UnconfiguredOcr>();
}

std::unique_ptr<providers::MockOcr> mock_ocr(const std::vector<device::MockScenario>& scenarios) {
    auto ocr = std::make_unique<providers::MockOcr>();
    for (const auto& s : scenarios) {
        device::MockDevice dev("ocr-fixture", device::DeviceKind::emulator, s);
        for (const auto& [digest, texts] : dev.ocr_fixture()) {
            std::vector<providers::OcrBox> boxes;
            for (const auto& t : texts) boxes.push_back({t.text, t.x, t.y, t.w, t.h, 1.0});
            ocr->add(digest, std::move(boxes));
        }
    }
    return ocr;
}

std::vector<device::MockScenario> run_scenarios(const stdfs::path& run_dir) {
    const auto path = run_dir / "plan.json";
    if (!stdfs::exists(path)) return {};
    const auto plan = orchestrator::parse_plan(fs::read_file(path));
    std::vector<device::MockScenario> out;
    for (const auto& d : plan.devices) {
        if (d.transport != orchestrator::Transport::mock) continue;
        auto s = d.scenario.empty() ? device::MockScenario::basic() : device::MockScenario::load(d.scenario);
        if (d.screen_size) s.screen_size = *d.screen_size;
        out.push_back(std::move(s));
    }
    return out;
}

void add_subtask_responder(providers::MockChatProvider& chat, const dataset::TaskSpec& task) {
    const auto apps = task.apps;
    const auto description = task.description;
    chat.on(providers::Purpose::subtasks, [apps, description](const providers::ChatRequest&) {
        nlohmann::ordered_json out = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < apps.size(); ++i) {
            out["subtask_" + std::to_string(i + 1)] = {{"app", apps[i]},
                                                       {"task", "In " + apps[i] + ", do the part of: " + description},
                                                       {"history", false},
                                                       {"memory", "None"}};
        }
        return out.dump(4);
    });
}

eval::RunEvalOptions eval_options(const HarnessConfig& config) {
    eval::RunEvalOptions o;
    o.language_modes = config.eval_modes;
    o.detect.judge.model_id = config.judge.model;
    o.detect.judge.temperature = config.judge.temperature;
    o.detect.judge.max_images = static_cast<std::size_t>(config.judge.max_images);
    o.detect.judge.parse_retries = config.judge.parse_retries;
    o.detect.coarse.eager = config.ocr.eager;
    o.detect.coarse.on_unavailable = config.ocr.on_unavailable;
    o.cross.judge = o.detect.judge;
    return o;
}

}  // namespace mobench::cli
