#include <doctest.h>

#include <cstdlib>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "mobench/cli/config.hpp"
#include "mobench/util/fs.hpp"
#include "mobench/util/subprocess.hpp"
#include "mobench/util/text.hpp"

using namespace mobench;
using json = nlohmann::json;
namespace stdfs = std::filesystem;

namespace {

CommandResult cli_run(std::vector<std::string> args) {
    args.insert(args.begin(), MOBENCH_BIN);
    return run_command(args, {}, std::chrono::minutes(2));
}

std::string data(const std::string& name) { return (testing::data_dir() / name).string(); }

std::string write_json(const testing::TempDir& tmp, const std::string& name, const json& j) {
    const auto path = (tmp / name).string();
    fs::write_file(path, j.dump(2));
    return path;
}

std::string replay_agent(const std::string& args) { return text::shell_quote(MOBENCH_REPLAY_AGENT) + " " + args; }

}  // namespace

TEST_CASE("usage errors exit 2") {
    CHECK(cli_run({}).exit_code == 2);
    CHECK(cli_run({"frobnicate"}).exit_code == 2);
    CHECK(cli_run({"run"}).exit_code == 2);
    CHECK(cli_run({"eval", "bogus", "--run", "."}).exit_code == 2);
    CHECK(cli_run({"--help"}).exit_code == 0);
}

TEST_CASE("validate") {
    const auto ok = cli_run({"validate", "--tasks", data("tasks.json")});
    CHECK(ok.exit_code == 0);
    CHECK(ok.out.rfind("10 tasks valid", 0) == 0);

    testing::TempDir tmp;
    auto broken = json::parse(fs::read_file(testing::data_dir() / "tasks.json"));
    broken["tasks"][0]["golden_steps"] = 0;
    broken["tasks"][1]["id"] = broken["tasks"][2]["id"];
    const auto bad = cli_run({"validate", "--tasks", write_json(tmp, "bad.json", broken)});
    CHECK(bad.exit_code == 1);
    CHECK(bad.err.find("en_single_fries") != std::string::npos);

    CHECK(cli_run({"validate", "--tasks", (tmp / "missing.json").string()}).exit_code == 2);
}

TEST_CASE("config is strict and never holds credentials") {
    testing::TempDir tmp;
    const auto with_key = write_json(tmp, "key.json", {{"judge", {{"api_key", "sk-secret"}}}});
    auto r = cli_run({"--config", with_key, "validate", "--tasks", data("tasks.json")});
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("HARNESS_API_KEY") != std::string::npos);

    const auto unknown = write_json(tmp, "unknown.json", {{"colour", "blue"}});
    CHECK(cli_run({"--config", unknown, "validate", "--tasks", data("tasks.json")}).exit_code == 2);

    const auto good = write_json(tmp, "good.json", {{"tasks", data("tasks.json")}});
    CHECK(cli_run({"--config", good, "validate"}).exit_code == 0);

    CHECK_THROWS_AS(cli::parse_config(R"({"judge": {"api_key": "x"}})"), ConfigError);
    CHECK_THROWS_AS(cli::parse_mode_flag("result_only"), ConfigError);
    CHECK(cli::parse_mode_flag("reason_and_result:no_action") ==
          eval::EvalMode{eval::Reasoning::reason_and_result, eval::ActionMode::no_action});
}

TEST_CASE("run, eval and report") {
    ::unsetenv("HARNESS_API_KEY");
    testing::TempDir tmp;
    const auto out = (tmp / "run").string();
    auto r = cli_run({"run", "--plan", data("plan.json"), "--out", out});
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("5/5 pairs done") != std::string::npos);
    CHECK(stdfs::exists(tmp / "run" / "index.json"));
    CHECK(cli_run({"run", "--plan", data("plan.json"), "--out", out}).exit_code == 2);
    CHECK(cli_run({"run", "--plan", data("plan.json"), "--out", out, "--resume"}).exit_code == 0);

    CHECK(cli_run({"report", "--run", out}).exit_code == 1);
    CHECK(cli_run({"eval", "--run", out}).exit_code == 2);

    r = cli_run({"eval", "all", "--run", out, "--mock-providers"});
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.rfind("5 judged", 0) == 0);
    const auto verdicts = fs::read_file(tmp / "run" / "verdicts.json");
    r = cli_run({"eval", "--run", out, "--mock-providers"});
    CHECK(r.out.rfind("0 judged, 5 kept", 0) == 0);
    CHECK(fs::read_file(tmp / "run" / "verdicts.json") == verdicts);
    CHECK(cli_run({"eval", "--run", out, "--mock-providers", "--force"}).out.rfind("5 judged", 0) == 0);
    CHECK(fs::read_file(tmp / "run" / "verdicts.json") == verdicts);
    CHECK(cli_run({"eval", "--run", out, "--mock-providers", "--mode", "nonsense"}).exit_code == 2);

    r = cli_run({"report", "--run", out});
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("| replay |") != std::string::npos);
    CHECK(stdfs::exists(tmp / "run" / "report.md"));
    CHECK(fs::read_file(tmp / "run" / "report.csv").rfind("agent,episodes,", 0) == 0);
}

TEST_CASE("conformance") {
    auto r = cli_run({"conformance", "--agent", replay_agent("--script " + text::shell_quote(data("replay.json"))),
                      "--golden", data("conformance_golden.txt")});
    INFO(r.out);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("PASS protocol v1 conformance") != std::string::npos);

    r = cli_run({"conformance", "--agent", replay_agent("--misbehave wrong-step"), "--timeout-ms", "1000"});
    CHECK(r.exit_code == 1);
    CHECK(r.out.find("FAIL wrong_step") != std::string::npos);
}

TEST_CASE("review-subtasks export and import") {
    testing::TempDir tmp;
    auto tasks = json::parse(fs::read_file(testing::data_dir() / "tasks.json"));
    for (auto& t : tasks["tasks"]) {
        if (t["id"] == "en_cross_vacuum") t.erase("subtasks");
    }
    const auto task_file = write_json(tmp, "tasks.json", tasks);
    CHECK(cli_run({"validate", "--tasks", task_file}).exit_code == 1);

    const auto review = (tmp / "review.json").string();
    auto r = cli_run({"review-subtasks", "export", "--tasks", task_file, "--task", "en_cross_vacuum", "--out", review,
                      "--mock-providers"});
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    CHECK(cli_run({"review-subtasks", "export", "--tasks", task_file, "--task", "en_single_fries", "--out", review,
                   "--mock-providers"})
              .exit_code == 2);

    const auto out = (tmp / "reviewed.json").string();
    CHECK(cli_run({"review-subtasks", "import", "--tasks", task_file, "--review", review, "--out", out}).exit_code == 1);

    auto doc = json::parse(fs::read_file(review));
    CHECK(doc["subtasks"].size() == 2);
    doc["approved"] = true;
    fs::write_file(review, doc.dump());
    r = cli_run({"review-subtasks", "import", "--tasks", task_file, "--review", review, "--out", out});
    INFO(r.err);
    CHECK(r.exit_code == 0);
    CHECK(cli_run({"validate", "--tasks", out}).exit_code == 0);
}
