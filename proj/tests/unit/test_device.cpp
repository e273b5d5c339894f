#include <doctest.h>

#include <cstdlib>
#include <random>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "mobench/device/adb_device.hpp"
#include "mobench/device/mock_device.hpp"
#include "mobench/util/encoding.hpp"
#include "mobench/util/fs.hpp"
#include "mobench/util/image.hpp"
#include "mobench/util/text.hpp"

using namespace mobench;
using namespace mobench::device;

namespace {

MockDevice sample_device() {
    return MockDevice("mock-1", DeviceKind::emulator, MockScenario::load(testing::data_dir() / "scenario.json"));
}

UiAction random_action(std::mt19937& rng) {
    using testing::uniform;
    switch (uniform(rng, 0, 4)) {
        case 0: return Tap{uniform(rng, -50, 1200), uniform(rng, -50, 2000)};
        case 1: return LongPress{uniform(rng, 0, 1079), uniform(rng, 0, 1919), uniform(rng, 1, 3000)};
        case 2: return Swipe{uniform(rng, 0, 1079), uniform(rng, 0, 1919), uniform(rng, 0, 1200), uniform(rng, 0, 2000),
                             uniform(rng, 1, 900)};
        case 3: return TypeText{uniform(rng, 0, 1) ? "hello world" : "你好"};
        default: return KeyPress{static_cast<Key>(uniform(rng, 0, 2))};
    }
}

}  // namespace

TEST_CASE("action json round trip property") {
    std::mt19937 rng(11);
    for (int i = 0; i < 500; ++i) {
        const auto a = random_action(rng);
        CHECK(action_from_json(action_to_json(a)) == a);
    }
    CHECK_THROWS_AS(action_from_json(nlohmann::json{{"kind", "teleport"}}), ParseError);
    CHECK_THROWS_AS(action_from_json(nlohmann::json{{"kind", "tap"}, {"x", "1"}, {"y", 2}}), ParseError);
    CHECK(action_from_json(nlohmann::json{{"kind", "swipe"}, {"x1", 0}, {"y1", 0}, {"x2", 1}, {"y2", 1}}) ==
          UiAction{Swipe{0, 0, 1, 1, kDefaultSwipeMs}});
}

TEST_CASE("bounds check against an independent rule") {
    std::mt19937 rng(12);
    const ScreenSize size{1080, 1920};
    const auto in = [&](int x, int y) { return x >= 0 && y >= 0 && x < size.width && y < size.height; };
    for (int i = 0; i < 1000; ++i) {
        const auto a = random_action(rng);
        bool ok = true;
        if (const auto* t = std::get_if<Tap>(&a)) ok = in(t->x, t->y);
        if (const auto* s = std::get_if<Swipe>(&a)) ok = in(s->x1, s->y1) && in(s->x2, s->y2);
        CHECK(bounds_violation(a, size).has_value() == !ok);
    }
}

TEST_CASE("describe and action_point") {
    CHECK(describe(Tap{540, 960}) == "Tap at (540, 960)");
    CHECK(describe(KeyPress{Key::back}) == "Press Back");
    CHECK(describe(TypeText{"fries"}) == "Type text \"fries\"");
    CHECK(action_point(LongPress{1, 2}) == std::pair{1, 2});
    CHECK_FALSE(action_point(Swipe{}).has_value());
}

TEST_CASE("mock device follows the scenario") {
    auto dev = sample_device();
    SimulatedClock clock;
    CHECK(dev.current_screen() == "home");
    dev.perform(Tap{200, 430}, clock);
    CHECK(dev.current_screen() == "deliveroo");
    dev.perform(TypeText{"burgers"}, clock);
    CHECK(dev.current_screen() == "deliveroo");
    dev.perform(TypeText{"fries"}, clock);
    CHECK(dev.current_screen() == "deliveroo_fries");
    dev.perform(KeyPress{Key::home}, clock);
    CHECK(dev.current_screen() == "home");
    CHECK(dev.action_log().size() == 4);
    CHECK_THROWS_AS(dev.perform(Tap{5000, 10}, clock), DeviceError);
    CHECK(dev.action_log().size() == 4);
}

TEST_CASE("mock rendering is deterministic and screens differ") {
    auto a = sample_device();
    auto b = sample_device();
    SimulatedClock clock;
    const auto s1 = a.capture(0, clock);
    const auto s2 = b.capture(0, clock);
    CHECK(s1.png == s2.png);
    CHECK(png_dimensions(s1.png) == std::pair{1080, 1920});
    const auto fixture = a.ocr_fixture();
    CHECK(fixture.size() == a.scenario().screens.size());
    CHECK(fixture.at(sha256_hex(s1.png)).size() == 5);
}

TEST_CASE("mock ui tree and snapshots") {
    auto dev = sample_device();
    SimulatedClock clock;
    CHECK(dev.dump_ui_tree().find("Deliveroo") != std::string::npos);
    dev.perform(Tap{200, 1230}, clock);
    dev.perform(Tap{150, 1740}, clock);
    CHECK(dev.current_screen() == "moments");
    CHECK_THROWS_AS(dev.dump_ui_tree(), DeviceError);
    dev.snapshot_load("clean");
    CHECK(dev.current_screen() == "home");
    CHECK_THROWS_AS(dev.snapshot_load("nope"), DeviceError);
}

TEST_CASE("physical devices refuse snapshots") {
    MockDevice dev("phone", DeviceKind::physical, MockScenario::basic());
    try {
        dev.snapshot_load("clean");
        FAIL("expected DeviceError");
    } catch (const DeviceError& e) {
        CHECK(e.code() == DeviceError::Code::snapshot_unsupported);
    }
}

TEST_CASE("offline fault injection") {
    auto scenario = MockScenario::basic();
    scenario.offline_after_captures = 2;
    MockDevice dev("mock", DeviceKind::emulator, scenario);
    SimulatedClock clock;
    dev.capture(0, clock);
    dev.capture(1, clock);
    CHECK_FALSE(dev.reachable());
    try {
        dev.capture(2, clock);
        FAIL("expected DeviceError");
    } catch (const DeviceError& e) {
        CHECK(e.code() == DeviceError::Code::offline);
    }
}

TEST_CASE("scenario parse errors") {
    CHECK_THROWS_AS(MockScenario::parse("{"), ParseError);
    CHECK_THROWS_AS(MockScenario::parse(R"({"screens": [{"id": "a"}], "initial": "b"})"), Error);
}

TEST_CASE("adb argument construction") {
    using V = std::vector<std::string>;
    CHECK(AdbDevice::action_arguments(Tap{1, 2}) == V{"shell", "input", "tap", "1", "2"});
    CHECK(AdbDevice::action_arguments(LongPress{3, 4, 1000}) == V{"shell", "input", "swipe", "3", "4", "3", "4", "1000"});
    CHECK(AdbDevice::action_arguments(Swipe{1, 2, 3, 4, 300}) == V{"shell", "input", "swipe", "1", "2", "3", "4", "300"});
    CHECK(AdbDevice::action_arguments(KeyPress{Key::home}) == V{"shell", "input", "keyevent", "3"});
    CHECK(AdbDevice::action_arguments(TypeText{"a b"}) == V{"shell", "input", "text", "a%sb"});
    const auto cjk = AdbDevice::action_arguments(TypeText{"你好"});
    CHECK(cjk.back() == base64_encode("你好"));
    CHECK(AdbDevice::escape_input_text("it's $5 (now)") == "it\\'s%s\\$5%s\\(now\\)");
    CHECK(AdbDevice::parse_wm_size("Physical size: 1080x2400\n") == ScreenSize{1080, 2400});
    CHECK(AdbDevice::parse_wm_size("Physical size: 1080x2400\nOverride size: 720x1600\n") == ScreenSize{720, 1600});
    CHECK_FALSE(AdbDevice::parse_wm_size("garbage").has_value());
}

TEST_CASE("adb device against a fake adb") {
    testing::TempDir tmp;
    const auto png = encode_png(Image(10, 20, kRed));
    fs::write_file(tmp / "screen.png", png);
    const auto log = (tmp / "adb.log").string();
    ::setenv("FAKE_ADB_LOG", log.c_str(), 1);
    ::setenv("FAKE_ADB_PNG", (tmp / "screen.png").c_str(), 1);
    AdbOptions options;
    options.adb_path = (testing::data_dir() / "fake_adb.sh").string();
    AdbDevice dev("emulator-5554", DeviceKind::emulator, std::nullopt, options);
    CHECK(dev.handle().screen_size == ScreenSize{1080, 2400});
    CHECK(dev.reachable());
    SimulatedClock clock;
    CHECK(dev.capture(0, clock).png == png);
    dev.perform(Tap{10, 20}, clock);
    CHECK(dev.dump_ui_tree().find("<hierarchy") != std::string::npos);
    dev.snapshot_load("clean");
    CHECK_THROWS_AS(dev.snapshot_load("missing"), DeviceError);

    const auto lines = text::split_lines(fs::read_file(log));
    CHECK(std::find(lines.begin(), lines.end(), "-s emulator-5554 shell input tap 10 20") != lines.end());
    CHECK(std::find(lines.begin(), lines.end(), "-s emulator-5554 emu avd snapshot load clean") != lines.end());

    ::setenv("FAKE_ADB_NO_TREE", "1", 1);
    try {
        dev.dump_ui_tree();
        FAIL("expected DeviceError");
    } catch (const DeviceError& e) {
        CHECK(e.code() == DeviceError::Code::ui_tree_unavailable);
    }
    ::unsetenv("FAKE_ADB_NO_TREE");

    ::setenv("FAKE_ADB_OFFLINE", "1", 1);
    CHECK_FALSE(dev.reachable());
    try {
        dev.capture(1, clock);
        FAIL("expected DeviceError");
    } catch (const DeviceError& e) {
        CHECK(e.code() == DeviceError::Code::offline);
    }
    ::unsetenv("FAKE_ADB_OFFLINE");
}
