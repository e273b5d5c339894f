#include "mobench/device/adb_device.hpp"

#include <regex>

#include "mobench/util/encoding.hpp"
#include "mobench/util/subprocess.hpp"
#include "mobench/util/text.hpp"

namespace mobench::device {

namespace {

constexpr std::string_view kShellSpecials = "\\'\"`$&|;<>()*?!#~[]{}";

// Keycodes from android.view.KeyEvent.
std::string keycode(Key key) {
    switch (key) {
        case Key::back: return "4";
        case Key::home: return "3";
        case Key::enter: return "66";
    }
    return "4";
}

bool looks_offline(const std::string& err) {
    for (const char* marker : {"not found", "offline", "no devices", "unauthorized", "closed"}) {
        if (err.find(marker) != std::string::npos) return true;
    }
    return false;
}

}  // namespace

AdbDevice::AdbDevice(std::string serial, DeviceKind kind, std::optional<ScreenSize> screen_size, AdbOptions options)
    : Device(DeviceHandle{std::move(serial), kind, screen_size.value_or(ScreenSize{})}), options_(std::move(options)) {
    if (!screen_size) {
        const auto out = adb({"shell", "wm", "size"}, options_.command_timeout);
        const auto parsed = parse_wm_size(out);
        if (!parsed) throw DeviceError(DeviceError::Code::command_failed, "cannot parse `wm size` output: " + out);
        handle_.screen_size = *parsed;
    }
}

std::optional<ScreenSize> AdbDevice::parse_wm_size(std::string_view output) {
    // "Physical size: 1080x2400" optionally followed by "Override size: ...";
    // the override wins.
    static const std::regex re(R"((Physical|Override) size:\s*(\d+)x(\d+))");
    std::optional<ScreenSize> found;
    const std::string s(output);
    for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
        found = ScreenSize{std::stoi((*it)[2]), std::stoi((*it)[3])};
    }
    return found;
}

std::string AdbDevice::adb(const std::vector<std::string>& args, std::chrono::milliseconds timeout, bool capture) {
    std::vector<std::string> argv{options_.adb_path, "-s", handle_.serial};
    argv.insert(argv.end(), args.begin(), args.end());
    CommandResult r;
    try {
        r = run_command(argv, {}, timeout);
    } catch (const Error& e) {
        throw DeviceError(DeviceError::Code::command_failed, e.what());
    }
    if (r.timed_out) {
        throw DeviceError(capture ? DeviceError::Code::capture_timeout : DeviceError::Code::offline,
                          "adb command timed out on " + handle_.serial);
    }
    if (r.exit_code != 0) {
        const auto code = looks_offline(r.err) ? DeviceError::Code::offline : DeviceError::Code::command_failed;
        throw DeviceError(code, "adb failed on " + handle_.serial + ": " + text::trim(r.err));
    }
    return r.out;
}

bool AdbDevice::reachable() {
    try {
        return text::trim(adb({"get-state"}, options_.command_timeout)) == "device";
    } catch (const DeviceError&) {
        return false;
    }
}

std::string AdbDevice::escape_input_text(std::string_view text) {
    std::string out;
    for (char c : text) {
        if (c == ' ') {
            out += "%s";
        } else if (kShellSpecials.find(c) != std::string_view::npos) {
            out.push_back('\\');
            out.push_back(c);
        } else {
            out.push_back(c);
        }
    }
    return out;
}

std::vector<std::string> AdbDevice::action_arguments(const UiAction& action) {
    if (const auto* a = std::get_if<Tap>(&action)) {
        return {"shell", "input", "tap", std::to_string(a->x), std::to_string(a->y)};
    }
    if (const auto* a = std::get_if<LongPress>(&action)) {
        // A zero-distance swipe held for the duration is a long press.
        return {"shell", "input", "swipe", std::to_string(a->x), std::to_string(a->y),
                std::to_string(a->x), std::to_string(a->y), std::to_string(a->duration_ms)};
    }
    if (const auto* a = std::get_if<Swipe>(&action)) {
        return {"shell", "input", "swipe", std::to_string(a->x1), std::to_string(a->y1),
                std::to_string(a->x2), std::to_string(a->y2), std::to_string(a->duration_ms)};
    }
    if (const auto* a = std::get_if<TypeText>(&action)) {
        if (text::is_ascii(a->text)) return {"shell", "input", "text", escape_input_text(a->text)};
        // Non-ASCII goes through the ADBKeyBoard IME broadcast channel.
        return {"shell", "am", "broadcast", "-a", "ADB_INPUT_B64", "--es", "msg", base64_encode(a->text)};
    }
    const auto& k = std::get<KeyPress>(action);
    return {"shell", "input", "keyevent", keycode(k.key)};
}

std::string AdbDevice::do_capture() {
    auto png = adb({"exec-out", "screencap", "-p"}, options_.capture_timeout, true);
    if (png.size() < 8 || png.compare(0, 8, std::string("\x89PNG\r\n\x1a\n", 8)) != 0) {
        throw DeviceError(DeviceError::Code::command_failed, "screencap did not return a PNG on " + handle_.serial);
    }
    return png;
}

void AdbDevice::do_perform(const UiAction& action) { adb(action_arguments(action), options_.command_timeout); }

std::string AdbDevice::do_dump_ui_tree() {
    const auto dump = adb({"shell", "uiautomator", "dump", options_.ui_dump_path}, options_.command_timeout);
    if (dump.find("ERROR") != std::string::npos || dump.find("null root node") != std::string::npos) {
        throw DeviceError(DeviceError::Code::ui_tree_unavailable, "ui dump unavailable: " + text::trim(dump));
    }
    auto xml = adb({"exec-out", "cat", options_.ui_dump_path}, options_.command_timeout);
    if (xml.find("<hierarchy") == std::string::npos) {
        throw DeviceError(DeviceError::Code::ui_tree_unavailable, "ui dump returned no hierarchy");
    }
    return xml;
}

void AdbDevice::do_snapshot_save(const std::string& id) {
    const auto out = adb({"emu", "avd", "snapshot", "save", id}, options_.command_timeout);
    if (out.find("KO") != std::string::npos) {
        throw DeviceError(DeviceError::Code::command_failed, "snapshot save failed: " + text::trim(out));
    }
}

void AdbDevice::do_snapshot_load(const std::string& id) {
    const auto out = adb({"emu", "avd", "snapshot", "load", id}, options_.command_timeout);
    if (out.find("KO") != std::string::npos) {
        throw DeviceError(DeviceError::Code::unknown_snapshot, "snapshot load failed: " + text::trim(out));
    }
}

}  // namespace mobench::device
