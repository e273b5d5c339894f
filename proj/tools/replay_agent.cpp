#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "mobench/agent/protocol.hpp"
#include "mobench/agent/session.hpp"

using namespace mobench;
using namespace mobench::agent;

namespace {

void emit(const std::string& line) {
    std::cout << line << '\n' << std::flush;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Protocol v1 agent that replays scripted decisions"};
    std::string script_path;
    bool ui_tree = false;
    std::string misbehave;
    app.add_option("--script", script_path, "Replay script (JSON); complete immediately without one");
    app.add_flag("--ui-tree", ui_tree, "Ask for the UI tree as well as screenshots");
    app.add_option("--misbehave", misbehave, "Break the protocol on purpose")
        ->check(CLI::IsMember({"duplicate", "ignore-bye", "wrong-step", "malformed", "silent", "bad-handshake", "crash"}));
    CLI11_PARSE(app, argc, argv);

    ReplayScript script;
    try {
        if (!script_path.empty()) script = load_replay_script(script_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "replay agent: %s\n", e.what());
        return 2;
    }

    std::string line;
    std::vector<AgentDecision> decisions;
    std::size_t next = 0;
    while (std::getline(std::cin, line)) {
        HarnessMessage msg;
        try {
            msg = parse_harness_message(line);
        } catch (const ProtocolError& e) {
            std::fprintf(stderr, "replay agent: %s\n", e.what());
            return 3;
        }
        if (const auto* hello = std::get_if<Hello>(&msg)) {
            if (misbehave == "bad-handshake") {
                emit(R"({"type":"capabilities","protocol":"v0"})");
                continue;
            }
            decisions = script.for_task(hello->task_id);
            Capabilities caps;
            caps.ui_tree = ui_tree ? UiTreeWant::yes : UiTreeWant::no;
            caps.agent = "replay";
            emit(encode(caps));
        } else if (const auto* obs = std::get_if<Observation>(&msg)) {
            if (misbehave == "silent") continue;
            if (misbehave == "crash") return 9;
            if (misbehave == "malformed") {
                emit(R"({"type":"decision","step":)" + std::to_string(obs->step) + R"(,"decision":"fly"})");
                continue;
            }
            Decision d;
            d.step = misbehave == "wrong-step" ? obs->step + 1 : obs->step;
            if (next < decisions.size()) {
                d.decision = decisions[next++];
            } else {
                d.decision.kind = DecisionKind::complete;
            }
            d.log = "replay step " + std::to_string(obs->step);
            emit(encode(d));
            if (misbehave == "duplicate") emit(encode(d));
        } else if (std::holds_alternative<Bye>(msg)) {
            if (misbehave == "ignore-bye") {
                std::this_thread::sleep_for(std::chrono::seconds(30));
            }
            return 0;
        }
    }
    return 0;
}
