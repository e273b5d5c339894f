#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mobench/device/device.hpp"
#include "mobench/util/image.hpp"

namespace mobench::device {

/// A text fragment drawn on a mock screen; doubles as the OCR ground truth.
struct MockText {
    std::string text;
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;
};

struct MockScreen {
    std::string id;
    Rgb background = kWhite;
    std::vector<MockText> texts;
    /// nullopt: generated from `texts`. Ignored when ui_tree_available is false.
    std::optional<std::string> ui_tree;
    bool ui_tree_available = true;
};

/// Edge of the screen state machine. `from` may be "*". `kind` is an action
/// kind ("tap", "long_press", "swipe", "type_text", "key"); taps and long
/// presses match only inside `region` (x, y, w, h) when given.
struct MockTransition {
    std::string from;
    std::string kind;
    std::optional<std::array<int, 4>> region;
    std::optional<Key> key;
    std::optional<std::string> text;
    std::string to;
};

struct MockScenario {
    ScreenSize screen_size{1080, 1920};
    std::string initial;
    std::map<std::string, MockScreen> screens;
    std::vector<MockTransition> transitions;
    /// snapshot id -> screen id
    std::map<std::string, std::string> snapshots;
    /// Fault injection: the device drops offline once this many captures happened.
    std::optional<int> offline_after_captures;

    static MockScenario parse(std::string_view json_text);
    static MockScenario load(const std::filesystem::path& path);
    /// Home screen plus one app screen; snapshot "clean" points at home.
    static MockScenario basic();
};

/// Scripted screen/state table standing in for an Android device. Rendering
/// is deterministic: the same screen always yields byte-identical PNG data.
class MockDevice final : public Device {
public:
    MockDevice(std::string serial, DeviceKind kind, MockScenario scenario);

    bool reachable() override;

    void set_offline(bool offline);
    std::string current_screen() const;
    std::vector<UiAction> action_log() const;
    int capture_count() const;

    /// PNG of a screen by id (cached).
    std::string render(const std::string& screen_id);

    /// sha256(PNG) -> text boxes for every screen: the mock OCR fixture.
    std::map<std::string, std::vector<MockText>> ocr_fixture();

    const MockScenario& scenario() const noexcept { return scenario_; }

protected:
    std::string do_capture() override;
    void do_perform(const UiAction& action) override;
    std::string do_dump_ui_tree() override;
    void do_snapshot_save(const std::string& id) override;
    void do_snapshot_load(const std::string& id) override;

private:
    MockScenario scenario_;
    mutable std::mutex mutex_;
    std::string current_;
    bool offline_ = false;
    int captures_ = 0;
    std::vector<UiAction> log_;
    std::map<std::string, std::string> png_cache_;

    void check_online() const;
    std::string render_locked(const std::string& screen_id);
};

}  // namespace mobench::device
