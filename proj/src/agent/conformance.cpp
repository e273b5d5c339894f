#include "mobench/agent/conformance.hpp"

#include <atomic>
#include <cstdio>

#include <unistd.h>

#include "mobench/device/mock_device.hpp"
#include "mobench/util/fs.hpp"
#include "mobench/util/text.hpp"

namespace mobench::agent {

namespace stdfs = std::filesystem;

std::string_view to_string(ConformanceCode code) {
    switch (code) {
        case ConformanceCode::bad_handshake: return "bad_handshake";
        case ConformanceCode::malformed_message: return "malformed_message";
        case ConformanceCode::duplicate_decision: return "duplicate_decision";
        case ConformanceCode::missing_decision: return "missing_decision";
        case ConformanceCode::wrong_step: return "wrong_step";
        case ConformanceCode::shutdown_timeout: return "shutdown_timeout";
        case ConformanceCode::bad_exit: return "bad_exit";
        case ConformanceCode::transcript_mismatch: return "transcript_mismatch";
    }
    return "unknown";
}

bool ConformanceReport::has(ConformanceCode code) const {
    for (const auto& v : violations) {
        if (v.code == code) return true;
    }
    return false;
}

std::string ConformanceReport::transcript_text() const {
    std::string out;
    for (const auto& line : transcript) {
        out += line;
        out.push_back('\n');
    }
    return out;
}

namespace {

class ScratchDir {
public:
    explicit ScratchDir(stdfs::path requested) {
        if (!requested.empty()) {
            path_ = std::move(requested);
        } else {
            static std::atomic<int> counter{0};
            path_ = stdfs::temp_directory_path() /
                    ("mobench-conformance-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
            owned_ = true;
        }
        stdfs::create_directories(path_);
        path_ = stdfs::absolute(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        if (owned_) stdfs::remove_all(path_, ec);
    }
    const stdfs::path& path() const { return path_; }

private:
    stdfs::path path_;
    bool owned_ = false;
};

class Checker {
public:
    Checker(const std::string& launch, const ConformanceOptions& options)
        : options_(options), scratch_(options.workdir) {
        Process::Options popts;
        popts.env["MOBENCH_WORKDIR"] = scratch_.path().string();
        popts.env["MOBENCH_TASK_ID"] = options.task_id;
        popts.stderr_path = (scratch_.path() / "agent.stderr").string();
        const auto cmd = text::substitute(launch, {{"task_id", text::shell_quote(options.task_id)},
                                                   {"workdir", text::shell_quote(scratch_.path().string())}});
        process_ = std::make_unique<Process>(std::vector<std::string>{"/bin/sh", "-c", cmd}, popts);
    }

    ConformanceReport run() {
        if (handshake()) steps();
        shutdown();
        if (options_.golden) compare_golden(*options_.golden);
        return std::move(report_);
    }

private:
    const ConformanceOptions& options_;
    ScratchDir scratch_;
    std::unique_ptr<Process> process_;
    ConformanceReport report_;

    void violate(ConformanceCode code, std::string detail) { report_.violations.push_back({code, std::move(detail)}); }

    std::string normalize(const std::string& line) const {
        std::string out = line;
        const auto prefix = scratch_.path().string();
        for (std::size_t pos = 0; (pos = out.find(prefix, pos)) != std::string::npos;) {
            out.replace(pos, prefix.size(), "{workdir}");
            pos += 9;
        }
        return out;
    }

    void send(const std::string& line) {
        report_.transcript.push_back("> " + normalize(line));
        process_->write_line(line);
    }

    std::optional<std::string> receive(std::chrono::milliseconds timeout) {
        auto line = process_->read_line(timeout);
        if (line) report_.transcript.push_back("< " + normalize(*line));
        return line;
    }

    std::string silence_reason(std::chrono::milliseconds timeout) const {
        return process_->eof() ? "agent exited" : "nothing within " + std::to_string(timeout.count()) + " ms";
    }

    bool handshake() {
        send(encode(Hello{options_.task_id, options_.task_description, options_.steps, dataset::Language::english}));
        const auto line = receive(options_.timeouts.handshake);
        if (!line) {
            violate(ConformanceCode::bad_handshake, "no capabilities: " + silence_reason(options_.timeouts.handshake));
            return false;
        }
        try {
            const auto msg = parse_agent_message(*line);
            if (const auto* caps = std::get_if<Capabilities>(&msg)) {
                caps_ = *caps;
                return true;
            }
            violate(ConformanceCode::bad_handshake, "first message is not capabilities");
        } catch (const ProtocolError& e) {
            violate(ConformanceCode::bad_handshake, e.what());
        }
        return false;
    }

    void steps() {
        device::MockDevice dev("conformance", device::DeviceKind::emulator, device::MockScenario::basic());
        SimulatedClock clock;
        for (int step = 0; step < options_.steps; ++step) {
            const auto shot = dev.capture(step, clock);
            Observation obs;
            obs.step = step;
            obs.task_description = options_.task_description;
            obs.remaining_steps = options_.steps - step;
            if (caps_.screenshot) {
                char name[16];
                std::snprintf(name, sizeof name, "%04d.png", step);
                const auto path = scratch_.path() / name;
                fs::write_file(path, shot.png);
                obs.screenshot_path = path.string();
            }
            if (caps_.ui_tree != UiTreeWant::no) {
                obs.ui_tree = dev.dump_ui_tree();
                obs.ui_tree_status = UiTreeStatus::ok;
            }
            send(encode(obs));

            const auto line = receive(options_.timeouts.decision);
            if (!line) {
                violate(ConformanceCode::missing_decision, "step " + std::to_string(step) + ": " +
                                                               silence_reason(options_.timeouts.decision));
                return;
            }
            Decision d;
            try {
                const auto msg = parse_agent_message(*line);
                const auto* dp = std::get_if<Decision>(&msg);
                if (!dp) {
                    violate(ConformanceCode::malformed_message, "step " + std::to_string(step) + ": expected a decision");
                    return;
                }
                d = *dp;
            } catch (const ProtocolError& e) {
                violate(ConformanceCode::malformed_message, "step " + std::to_string(step) + ": " + e.what());
                return;
            }
            if (d.step != step) {
                violate(ConformanceCode::wrong_step,
                        "observation " + std::to_string(step) + " answered as step " + std::to_string(d.step));
                return;
            }
            if (receive(options_.grace)) {
                violate(ConformanceCode::duplicate_decision, "second message after the decision for step " +
                                                                 std::to_string(step));
            }
            if (d.decision.kind != DecisionKind::act) return;
            try {
                dev.perform(*d.decision.action, clock);
            } catch (const device::DeviceError&) {
            }
        }
    }

    void shutdown() {
        send(encode(Bye{"completed"}));
        report_.exit_code = process_->wait(options_.timeouts.shutdown);
        if (!report_.exit_code) {
            violate(ConformanceCode::shutdown_timeout,
                    "agent still running " + std::to_string(options_.timeouts.shutdown.count()) + " ms after bye");
            process_->kill();
            return;
        }
        while (const auto extra = process_->read_line(std::chrono::milliseconds(0))) {
            report_.transcript.push_back("< " + normalize(*extra));
            violate(ConformanceCode::malformed_message, "output after bye");
        }
        if (*report_.exit_code != 0) {
            violate(ConformanceCode::bad_exit, "exit code " + std::to_string(*report_.exit_code));
        }
    }

    void compare_golden(const stdfs::path& golden) {
        const auto expected = text::split_lines(fs::read_file(golden));
        const auto& actual = report_.transcript;
        const auto n = std::max(expected.size(), actual.size());
        for (std::size_t i = 0; i < n; ++i) {
            const std::string e = i < expected.size() ? expected[i] : "<end of transcript>";
            const std::string a = i < actual.size() ? actual[i] : "<end of transcript>";
            if (e != a) {
                violate(ConformanceCode::transcript_mismatch,
                        "line " + std::to_string(i + 1) + ": expected " + e + ", got " + a);
                return;
            }
        }
    }

    Capabilities caps_;
};

}  // namespace

ConformanceReport check_conformance(const std::string& launch, const ConformanceOptions& options) {
    return Checker(launch, options).run();
}

}  // namespace mobench::agent
