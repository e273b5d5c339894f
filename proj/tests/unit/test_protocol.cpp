#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "mobench/agent/conformance.hpp"
#include "mobench/agent/protocol.hpp"
#include "mobench/util/fs.hpp"
#include "mobench/util/text.hpp"

using namespace mobench;
using namespace mobench::agent;

namespace {

std::string replay_agent(const std::string& args) { return text::shell_quote(MOBENCH_REPLAY_AGENT) + " " + args; }

ConformanceOptions fast_options() {
    ConformanceOptions o;
    o.timeouts.handshake = o.timeouts.decision = std::chrono::milliseconds(2000);
    o.timeouts.shutdown = std::chrono::milliseconds(500);
    return o;
}

}  // namespace

TEST_CASE("encoded messages have sorted keys and parse back") {
    const Hello hello{"t1", "Open 设置", 8, dataset::Language::chinese};
    const auto line = encode(hello);
    CHECK(line ==
          R"({"language":"chinese","protocol":"v1","step_budget":8,"task_description":"Open 设置","task_id":"t1","type":"hello"})");
    CHECK(std::get<Hello>(parse_harness_message(line)) == hello);

    Observation obs{2, "desc", "/w/0002.png", std::string("<hierarchy/>"), UiTreeStatus::ok, 4};
    CHECK(std::get<Observation>(parse_harness_message(encode(obs))) == obs);
    obs.screenshot_path.clear();
    obs.ui_tree.reset();
    obs.ui_tree_status = UiTreeStatus::unavailable;
    CHECK(std::get<Observation>(parse_harness_message(encode(obs))) == obs);

    const Bye bye{"max_steps"};
    CHECK(std::get<Bye>(parse_harness_message(encode(bye))) == bye);

    for (auto want : {UiTreeWant::no, UiTreeWant::yes, UiTreeWant::required}) {
        const Capabilities caps{true, want, "agent"};
        CHECK(std::get<Capabilities>(parse_agent_message(encode(caps))) == caps);
    }
}

TEST_CASE("decision round trip property") {
    std::mt19937 rng(31);
    for (int i = 0; i < 300; ++i) {
        Decision d;
        d.step = testing::uniform(rng, 0, 40);
        const int kind = testing::uniform(rng, 0, 2);
        d.decision.kind = static_cast<DecisionKind>(kind);
        if (kind == 0) d.decision.action = device::Tap{testing::uniform(rng, 0, 1000), testing::uniform(rng, 0, 1000)};
        if (kind == 2) {
            d.decision.reason = "stuck";
            d.decision.category = testing::uniform(rng, 0, 1) ? "network" : "";
        }
        d.prompt_tokens = testing::uniform(rng, 0, 50000);
        d.completion_tokens = testing::uniform(rng, 0, 500);
        d.log = "step " + std::to_string(i) + "\n\"quoted\"";
        CHECK(std::get<Decision>(parse_agent_message(encode(d))) == d);
    }
}

TEST_CASE("protocol errors") {
    const char* bad_agent[] = {
        "not json",
        "[]",
        R"({"type":"hello"})",
        R"({"type":"capabilities","protocol":"v2","screenshot":true,"ui_tree":false})",
        R"({"type":"capabilities","protocol":"v1","screenshot":false,"ui_tree":false})",
        R"({"type":"capabilities","protocol":"v1","screenshot":true,"ui_tree":"maybe"})",
        R"({"type":"decision","step":0,"decision":"act","action":null})",
        R"({"type":"decision","step":0,"decision":"act","action":{"kind":"tap","x":1}})",
        R"({"type":"decision","step":"0","decision":"complete"})",
        R"({"type":"decision","step":0,"decision":"complete","usage":{"prompt_tokens":-1,"completion_tokens":0}})",
    };
    for (const char* line : bad_agent) CHECK_THROWS_AS(parse_agent_message(line), ProtocolError);
    CHECK_THROWS_AS(parse_harness_message(R"({"type":"decision"})"), ProtocolError);
    CHECK_NOTHROW(parse_agent_message(R"({"type":"decision","step":0,"decision":"complete","extra":1})"));
}

TEST_CASE("conformance: well-behaved agent matches the golden transcript") {
    auto options = fast_options();
    options.golden = testing::data_dir() / "conformance_golden.txt";
    const auto report = check_conformance(replay_agent("--script " + text::shell_quote(
                                                           (testing::data_dir() / "replay.json").string())),
                                          options);
    for (const auto& v : report.violations) INFO(v.detail);
    CHECK(report.passed());
    CHECK(report.exit_code == 0);
    CHECK(report.transcript.size() == 7);
}

TEST_CASE("conformance: golden mismatch is reported") {
    auto options = fast_options();
    options.golden = testing::data_dir() / "conformance_golden.txt";
    const auto report = check_conformance(replay_agent(""), options);
    CHECK(report.has(ConformanceCode::transcript_mismatch));
}

TEST_CASE("conformance: each misbehaviour yields its code") {
    const std::pair<const char*, ConformanceCode> cases[] = {
        {"duplicate", ConformanceCode::duplicate_decision},
        {"ignore-bye", ConformanceCode::shutdown_timeout},
        {"wrong-step", ConformanceCode::wrong_step},
        {"malformed", ConformanceCode::malformed_message},
        {"silent", ConformanceCode::missing_decision},
        {"bad-handshake", ConformanceCode::bad_handshake},
        {"crash", ConformanceCode::bad_exit},
    };
    for (const auto& [mode, code] : cases) {
        CAPTURE(mode);
        auto options = fast_options();
        options.timeouts.decision = std::chrono::milliseconds(800);
        const auto report = check_conformance(replay_agent(std::string("--misbehave ") + mode), options);
        CHECK(report.has(code));
        CHECK_FALSE(report.passed());
    }
}

TEST_CASE("conformance: transcript workdir is normalized") {
    testing::TempDir tmp;
    auto options = fast_options();
    options.workdir = tmp / "work";
    const auto report = check_conformance(replay_agent(""), options);
    CHECK(report.passed());
    const auto text = report.transcript_text();
    CHECK(text.find("{workdir}/0000.png") != std::string::npos);
    CHECK(text.find(tmp.path().string()) == std::string::npos);
}
