#include <doctest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "mobench/dataset/task.hpp"
#include "mobench/util/fs.hpp"

using namespace mobench;
using namespace mobench::dataset;
using json = nlohmann::json;

namespace {

json base_file() { return json::parse(fs::read_file(testing::data_dir() / "tasks.json")); }

std::vector<std::string> violations_of(const json& doc) {
    try {
        parse_taskset(doc.dump());
    } catch (const ValidationError& e) {
        return e.violations();
    }
    return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
    for (const auto& s : v) {
        if (s.find(needle) != std::string::npos) return true;
    }
    return false;
}

json& task_by_id(json& doc, const std::string& id) {
    for (auto& t : doc["tasks"]) {
        if (t["id"] == id) return t;
    }
    throw std::runtime_error("no task " + id);
}

}  // namespace

TEST_CASE("sample task file loads") {
    const auto set = load_taskset(testing::data_dir() / "tasks.json");
    CHECK(set.tasks.size() == 10);
    const auto& fries = set.at("en_single_fries");
    CHECK(fries.key_components == std::vector<std::string>{"order", "fries"});
    const auto& vacuum = set.at("en_cross_vacuum");
    REQUIRE(vacuum.subtasks);
    CHECK((*vacuum.subtasks)[1].history);
    CHECK(placeholders((*vacuum.subtasks)[1].task) == std::vector<std::string>{"robotic vacuum cleaner"});
    CHECK(set.counts().at("chinese/single_app") == 2);
    CHECK_THROWS_AS(set.at("nope"), Error);
}

TEST_CASE("serialize round trip") {
    const auto set = load_taskset(testing::data_dir() / "tasks.json");
    CHECK(parse_taskset(serialize_taskset(set)) == set);
}

TEST_CASE("key components are stored lowercase") {
    auto doc = base_file();
    task_by_id(doc, "en_single_fries")["key_components"] = {"ORDER", "Fries"};
    const auto set = parse_taskset(doc.dump());
    CHECK(set.at("en_single_fries").key_components == std::vector<std::string>{"order", "fries"});
}

TEST_CASE("scope rules produce named violations") {
    SUBCASE("single app without key components") {
        auto doc = base_file();
        task_by_id(doc, "en_single_fries").erase("key_components");
        CHECK(mentions(violations_of(doc), "en_single_fries': single_app tasks need key_components"));
    }
    SUBCASE("single app with two apps") {
        auto doc = base_file();
        task_by_id(doc, "en_single_fries")["apps"] = {"A", "B"};
        CHECK(mentions(violations_of(doc), "exactly one app"));
    }
    SUBCASE("cross app difficulty 3") {
        auto doc = base_file();
        task_by_id(doc, "en_cross_vacuum")["difficulty"] = 3;
        CHECK(mentions(violations_of(doc), "cross_app difficulty must be 1 or 2"));
    }
    SUBCASE("cross app with key components") {
        auto doc = base_file();
        task_by_id(doc, "en_cross_vacuum")["key_components"] = {"x"};
        CHECK(mentions(violations_of(doc), "cannot have key_components"));
    }
    SUBCASE("cross app without subtasks") {
        auto doc = base_file();
        task_by_id(doc, "en_cross_vacuum").erase("subtasks");
        CHECK(mentions(violations_of(doc), "need reviewed subtasks"));
        CHECK_NOTHROW(parse_taskset(doc.dump(), Strictness::draft));
    }
    SUBCASE("closed task without golden steps") {
        auto doc = base_file();
        task_by_id(doc, "en_single_display").erase("golden_steps");
        CHECK(mentions(violations_of(doc), "golden_steps is required"));
    }
    SUBCASE("open ended with subtasks") {
        auto doc = base_file();
        task_by_id(doc, "en_open_music")["subtasks"] = json::array();
        CHECK(mentions(violations_of(doc), "open_ended tasks cannot have subtasks"));
    }
    SUBCASE("duplicate ids") {
        auto doc = base_file();
        doc["tasks"].push_back(task_by_id(doc, "en_open_music"));
        CHECK(mentions(violations_of(doc), "duplicate task id"));
    }
    SUBCASE("every violation is reported at once") {
        auto doc = base_file();
        task_by_id(doc, "en_single_fries").erase("key_components");
        task_by_id(doc, "en_cross_vacuum")["difficulty"] = 3;
        CHECK(violations_of(doc).size() == 2);
    }
}

TEST_CASE("subtask chain rules") {
    const std::vector<SubtaskSpec> ok{{"X", "Find it", false, "item"}, {"Amazon", "Buy the {item}", true, std::nullopt}};
    CHECK(validate_subtasks(ok, "t").empty());

    auto same_app = ok;
    same_app[1].app = "X";
    CHECK(mentions(validate_subtasks(same_app, "t"), "adjacent subtasks use the same app"));

    auto unknown = ok;
    unknown[1].task = "Buy the {thing}";
    CHECK(mentions(validate_subtasks(unknown, "t"), "{thing} does not match"));

    auto no_history = ok;
    no_history[1].history = false;
    CHECK(mentions(validate_subtasks(no_history, "t"), "history=false but the task contains placeholder"));

    auto no_placeholder = ok;
    no_placeholder[1].task = "Buy it";
    CHECK(mentions(validate_subtasks(no_placeholder, "t"), "no {phrase} placeholder"));

    auto later_memory = ok;
    std::swap(later_memory[0], later_memory[1]);
    CHECK_FALSE(validate_subtasks(later_memory, "t").empty());
}

TEST_CASE("malformed files are parse errors") {
    CHECK_THROWS_AS(parse_taskset("{"), ParseError);
    CHECK_THROWS_AS(parse_taskset(R"({"format": "other", "tasks": []})"), ParseError);
    CHECK_THROWS_AS(parse_taskset(R"({"format": "mobench.tasks"})"), ParseError);
    CHECK_THROWS_AS(parse_language("klingon"), ParseError);
    CHECK_THROWS_AS(parse_scope("multi"), ParseError);
}

TEST_CASE("directory loading merges files and catches cross-file duplicates") {
    testing::TempDir tmp;
    auto doc = base_file();
    json a = doc, b = doc;
    a["tasks"] = json::array({doc["tasks"][0], doc["tasks"][1]});
    b["tasks"] = json::array({doc["tasks"][2]});
    fs::write_file(tmp / "a.json", a.dump());
    fs::write_file(tmp / "b.json", b.dump());
    fs::write_file(tmp / "notes.txt", "ignored");
    CHECK(load_taskset(tmp.path()).tasks.size() == 3);
    b["tasks"] = json::array({doc["tasks"][0]});
    fs::write_file(tmp / "b.json", b.dump());
    CHECK_THROWS_AS(load_taskset(tmp.path()), ValidationError);
}

TEST_CASE("app keys suffix repeated apps only") {
    CHECK(app_keys({"AppA", "AppB", "AppA"}) == std::vector<std::string>{"AppA_1", "AppB", "AppA_2"});
    CHECK(app_keys({"X", "Amazon"}) == std::vector<std::string>{"X", "Amazon"});
    CHECK(app_keys({"A", "B", "A", "C", "A"}) == std::vector<std::string>{"A_1", "B", "A_2", "C", "A_3"});
}

TEST_CASE("step budget property") {
    std::mt19937 rng(42);
    for (int i = 0; i < 500; ++i) {
        const int golden = testing::uniform(rng, 1, 60);
        const int tenths = testing::uniform(rng, 10, 40);
        const auto t = testing::single_task("t", {"x"}, golden);
        CHECK(step_budget(t, tenths / 10.0) == (tenths * golden + 9) / 10);
        CHECK(step_budget(t) == 2 * golden);
    }
    CHECK(step_budget(testing::open_task("o")) == 20);
    CHECK(step_budget(testing::open_task("o"), 2.0, 7) == 7);
}
