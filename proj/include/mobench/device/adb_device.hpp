#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "mobench/device/device.hpp"

namespace mobench::device {

struct AdbOptions {
    std::string adb_path = "adb";
    std::chrono::milliseconds command_timeout{20'000};
    std::chrono::milliseconds capture_timeout{10'000};
    std::string ui_dump_path = "/sdcard/window_dump.xml";
};

/// Device driven through the Android debug bridge. Every operation is one or
/// two `adb -s <serial> ...` invocations; see docs/adb-commands.md.
class AdbDevice final : public Device {
public:
    /// Queries `wm size` when `screen_size` is not given.
    AdbDevice(std::string serial, DeviceKind kind, std::optional<ScreenSize> screen_size = std::nullopt,
              AdbOptions options = {});

    bool reachable() override;

    /// Arguments after `adb -s <serial>` for dispatching `action`.
    static std::vector<std::string> action_arguments(const UiAction& action);

    /// Escapes text for `input text`: spaces become %s and shell
    /// metacharacters are backslash-escaped.
    static std::string escape_input_text(std::string_view text);

    static std::optional<ScreenSize> parse_wm_size(std::string_view output);

protected:
    std::string do_capture() override;
    void do_perform(const UiAction& action) override;
    std::string do_dump_ui_tree() override;
    void do_snapshot_save(const std::string& id) override;
    void do_snapshot_load(const std::string& id) override;

private:
    AdbOptions options_;

    std::string adb(const std::vector<std::string>& args, std::chrono::milliseconds timeout, bool capture = false);
};

}  // namespace mobench::device
