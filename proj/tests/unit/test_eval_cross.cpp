#include <doctest.h>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "mobench/eval/cross.hpp"
#include "mobench/util/image.hpp"

using namespace mobench;
using namespace mobench::eval;
using providers::ChatRequest;
using providers::MockChatProvider;
using providers::Purpose;
using json = nlohmann::json;

namespace {

dataset::TaskSpec vacuum_task() {
    auto t = testing::cross_task("vac", {"X", "Amazon"});
    t.description = "Find a product on X and search for it on Amazon";
    t.subtasks = std::vector<dataset::SubtaskSpec>{
        {"X", "Find the robotic vacuum cleaner post", false, "robotic vacuum cleaner"},
        {"Amazon", "Search Amazon for the {robotic vacuum cleaner}", true, std::nullopt}};
    return t;
}

agent::Trajectory six_step_trajectory() {
    std::vector<std::string> pngs;
    for (int i = 0; i < 6; ++i) pngs.push_back(testing::solid_png(300 + i));
    return testing::make_trajectory("a", "vac", pngs);
}

std::string split_reply(int s1, int e1, int s2, int e2) {
    return "### Final Output:\n" + nlohmann::ordered_json{{"X", {{"start screen", s1}, {"end screen", e1}}},
                                        {"Amazon", {{"start screen", s2}, {"end screen", e2}}}}
                                       .dump();
}

}  // namespace

TEST_CASE("parse_subtasks") {
    const auto subs = parse_subtasks(R"(Sure!
```python
{'subtask_2': {'app': 'Amazon', 'task': 'Search for {item}', 'history': True, 'memory': None},
 'subtask_1': {'app': 'X', 'task': 'Find the item', 'history': False, 'memory': 'item'}}
```)");
    REQUIRE(subs.size() == 2);
    CHECK(subs[0] == dataset::SubtaskSpec{"X", "Find the item", false, "item"});
    CHECK(subs[1] == dataset::SubtaskSpec{"Amazon", "Search for {item}", true, std::nullopt});

    const auto strs = parse_subtasks(
        R"({"subtask_1": {"app": "A", "task": "t", "history": "false", "memory": "None"}})");
    CHECK_FALSE(strs[0].memory.has_value());

    CHECK_THROWS_AS(parse_subtasks("no json here"), ParseError);
    CHECK_THROWS_AS(parse_subtasks(R"({"step_1": {"app": "A", "task": "t"}})"), ParseError);
    CHECK_THROWS_AS(parse_subtasks(R"({"subtask_1": {"app": "A", "task": "t", "history": "maybe"}})"), ParseError);
}

TEST_CASE("subtask generation regenerates unparseable replies") {
    const auto task = vacuum_task();
    MockChatProvider chat;
    int n = 0;
    chat.on(Purpose::subtasks, [&](const ChatRequest&) {
        return ++n < 3 ? std::string("thinking...")
                       : std::string(R"({"subtask_1": {"app": "X", "task": "find it", "history": false, "memory": "it"},
                                         "subtask_2": {"app": "Amazon", "task": "buy {it}", "history": true, "memory": "None"}})");
    });
    const auto proposal = generate_subtasks(task, chat, {});
    CHECK(proposal.attempts == 3);
    CHECK(proposal.subtasks.size() == 2);

    MockChatProvider mute;
    mute.on(Purpose::subtasks, [](const ChatRequest&) { return std::string("nope"); });
    CHECK_THROWS_AS(generate_subtasks(task, mute, {}), Error);
    CHECK(mute.calls() == 3);
    CHECK_THROWS_AS(generate_subtasks(testing::single_task("s", {"x"}), chat, {}), Error);
}

TEST_CASE("review export, import and apply") {
    auto task = vacuum_task();
    SubtaskProposal proposal;
    proposal.task_id = task.id;
    proposal.subtasks = *task.subtasks;
    proposal.attempts = 1;
    const auto exported = export_review(task, proposal);
    auto doc = json::parse(exported);
    CHECK(doc["approved"] == false);
    CHECK(doc["open_issues"].empty());
    CHECK_THROWS_AS(import_review(exported), ValidationError);

    doc["approved"] = true;
    doc["subtasks"][0]["task"] = "Find the robotic vacuum cleaner on X";
    const auto reviewed = import_review(doc.dump());
    CHECK(reviewed.subtasks[0].task == "Find the robotic vacuum cleaner on X");

    dataset::TaskSet set;
    set.tasks.push_back(task);
    apply_review(set, reviewed);
    CHECK(set.tasks[0].subtasks->at(0).task == "Find the robotic vacuum cleaner on X");

    auto wrong_app = reviewed;
    wrong_app.subtasks[1].app = "eBay";
    CHECK_THROWS_AS(apply_review(set, wrong_app), ValidationError);
    auto unknown = reviewed;
    unknown.task_id = "ghost";
    CHECK_THROWS_AS(apply_review(set, unknown), ValidationError);

    doc["subtasks"][1]["task"] = "Search Amazon for the {missing phrase}";
    CHECK_THROWS_AS(import_review(doc.dump()), ValidationError);
    CHECK_THROWS_AS(import_review("{}"), ParseError);
    CHECK_THROWS_AS(import_review("[1"), ParseError);
}

TEST_CASE("parse_segmentation") {
    auto seg = parse_segmentation(split_reply(1, 3, 4, 6));
    CHECK(seg == Segmentation{{"X", 0, 2}, {"Amazon", 3, 5}});

    seg = parse_segmentation(R"(Example: {"a": 1}
Final: {"Maps": {"start screen": "2", "end screen": 3.0}, "WhatsApp": {"start screen": -1, "end screen": -1}})");
    CHECK(seg == Segmentation{{"Maps", 1, 2}, {"WhatsApp", -1, -1}});

    seg = parse_segmentation(R"({"A": {"start screen": 0, "end screen": 2}})");
    CHECK(seg[0].start == kOutOfRangeIndex);

    CHECK_THROWS_AS(parse_segmentation("I could not tell"), ParseError);
    CHECK_THROWS_AS(parse_segmentation(R"({"A": {"start screen": "one", "end screen": 2}})"), ParseError);
    CHECK(from_provider_index(-1) == -1);
    CHECK(from_provider_index(1) == 0);
    CHECK(from_provider_index(-7) == kOutOfRangeIndex);
}

TEST_CASE("validate_segmentation reports app order") {
    const Segmentation seg{{"Amazon", 0, 2}, {"X", 3, 5}};
    const auto v = validate_segmentation(seg, 6, {"X", "Amazon"});
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == SegmentViolationKind::app_order);
    CHECK(validate_segmentation(seg, 6, {"Amazon", "X"}).empty());
}

TEST_CASE("split_trajectory downsamples and retries once") {
    const std::vector<std::string> big{encode_png(Image(1080, 2400, kWhite)), encode_png(Image(1080, 2400, kBlack))};
    MockChatProvider chat;
    int n = 0;
    chat.on(Purpose::split, [&](const ChatRequest&) {
        return ++n == 1 ? std::string("hmm")
                        : std::string(R"({"A": {"start screen": 1, "end screen": 1}, "B": {"start screen": 2, "end screen": 2}})");
    });
    const auto r = split_trajectory(big, {"A", "B"}, "task", chat, {});
    CHECK(r.parsed);
    CHECK(r.calls == 2);
    CHECK(r.downsampled);
    const auto sent = std::get<providers::ImagePart>(chat.requests().back().messages[1].parts[1]).png;
    CHECK(png_dimensions(sent) == std::pair{461, 1024});
    CHECK(chat.requests().back().all_text().find("[\"A\",\"B\"]") != std::string::npos);
}

TEST_CASE("memory store and history resolution") {
    MemoryStore m;
    m.put("item", "a red kettle");
    m.put("item", "a blue kettle");
    m.put("place", "Paris");
    CHECK(m.entries().size() == 2);
    CHECK(*m.find("item") == "a blue kettle");
    CHECK(m.find("other") == nullptr);

    CHECK(resolve_history({"A", "Buy {item} in {place}", true, std::nullopt}, m) == "Buy a blue kettle in Paris");
    CHECK(resolve_history({"A", "Keep {item} literal", false, std::nullopt}, m) == "Keep {item} literal");
    CHECK_THROWS_AS(resolve_history({"A", "Buy {thing}", true, std::nullopt}, m), Error);

    MockChatProvider chat;
    chat.on(Purpose::memory, [](const ChatRequest&) { return std::string("line one\n\n  line two  \n"); });
    CHECK(summarize_memory({testing::solid_png(1)}, "item", chat, {}) == "line one line two");
    CHECK(summarize_memory({testing::solid_png(1)}, "  ", chat, {}).empty());
    CHECK(chat.calls() == 1);
}

TEST_CASE("detect_cross: success propagates memory into the next subtask") {
    MockChatProvider chat;
    chat.on(Purpose::split, [](const ChatRequest&) { return split_reply(1, 3, 4, 6); });
    chat.on(Purpose::memory, [](const ChatRequest&) { return std::string("the Roborock S8"); });
    chat.on(Purpose::judge, [](const ChatRequest&) { return std::string("Reason: done\nResult: 1"); });
    const auto cv = detect_cross(vacuum_task(), six_step_trajectory(), chat, {});
    CHECK(cv.verdict.success);
    CHECK_FALSE(cv.verdict.evaluation_failure);
    CHECK(cv.verdict.judge_calls == 2);
    REQUIRE(cv.subtasks.size() == 2);
    CHECK(cv.subtasks[0].memory_summary == std::string("the Roborock S8"));
    CHECK(cv.subtasks[1].description == "Search Amazon for the the Roborock S8");
    CHECK(cv.subtasks[1].start == 3);
    const auto judged = chat.requests().back();
    CHECK(judged.purpose == Purpose::judge);
    CHECK(judged.all_text().find("Search Amazon for the the Roborock S8") != std::string::npos);
    CHECK(judged.image_count() == 3);
    CHECK(cross_audit_to_json(cv)["subtasks"].size() == 2);
}

TEST_CASE("detect_cross: failures") {
    SUBCASE("first subtask fails, no memory and no further judging") {
        MockChatProvider chat;
        chat.on(Purpose::split, [](const ChatRequest&) { return split_reply(1, 3, 4, 6); });
        chat.on(Purpose::judge, [](const ChatRequest&) { return std::string("Reason: wrong post\nResult: 0"); });
        const auto cv = detect_cross(vacuum_task(), six_step_trajectory(), chat, {});
        CHECK_FALSE(cv.verdict.success);
        CHECK_FALSE(cv.verdict.evaluation_failure);
        CHECK(cv.subtasks.size() == 1);
        CHECK(chat.calls(Purpose::memory) == 0);
        CHECK(chat.calls(Purpose::judge) == 1);
    }
    SUBCASE("invalid segmentation fails without judging") {
        MockChatProvider chat;
        chat.on(Purpose::split, [](const ChatRequest&) { return split_reply(1, 4, 3, 6); });
        const auto cv = detect_cross(vacuum_task(), six_step_trajectory(), chat, {});
        CHECK_FALSE(cv.verdict.success);
        CHECK_FALSE(cv.verdict.evaluation_failure);
        CHECK_FALSE(cv.violations.empty());
        CHECK(chat.calls(Purpose::judge) == 0);
    }
    SUBCASE("missing app fails") {
        MockChatProvider chat;
        chat.on(Purpose::split, [](const ChatRequest&) { return split_reply(1, 6, -1, -1); });
        const auto cv = detect_cross(vacuum_task(), six_step_trajectory(), chat, {});
        CHECK_FALSE(cv.verdict.success);
        REQUIRE(cv.violations.size() == 1);
        CHECK(cv.violations[0].kind == SegmentViolationKind::missing_app);
    }
    SUBCASE("unparseable segmentation is a task failure") {
        MockChatProvider chat;
        chat.on(Purpose::split, [](const ChatRequest&) { return std::string("no idea"); });
        const auto cv = detect_cross(vacuum_task(), six_step_trajectory(), chat, {});
        CHECK_FALSE(cv.verdict.success);
        CHECK_FALSE(cv.verdict.evaluation_failure);
        CHECK(chat.calls(Purpose::split) == 2);
    }
    SUBCASE("unreviewed task is an evaluation failure") {
        MockChatProvider chat;
        auto task = vacuum_task();
        task.subtasks.reset();
        CHECK(detect_cross(task, six_step_trajectory(), chat, {}).verdict.evaluation_failure);
        CHECK(chat.calls() == 0);
    }
}
