#include "mobench/device/device.hpp"

namespace mobench::device {

std::string_view to_string(DeviceKind kind) { return kind == DeviceKind::emulator ? "emulator" : "physical"; }

DeviceKind parse_device_kind(std::string_view s) {
    if (s == "emulator") return DeviceKind::emulator;
    if (s == "physical") return DeviceKind::physical;
    throw ParseError("unknown device kind '" + std::string(s) + "'");
}

std::string_view to_string(DeviceError::Code code) {
    switch (code) {
        case DeviceError::Code::offline: return "device_offline";
        case DeviceError::Code::capture_timeout: return "capture_timeout";
        case DeviceError::Code::out_of_bounds: return "out_of_bounds";
        case DeviceError::Code::ui_tree_unavailable: return "ui_tree_unavailable";
        case DeviceError::Code::snapshot_unsupported: return "snapshot_unsupported";
        case DeviceError::Code::unknown_snapshot: return "unknown_snapshot";
        case DeviceError::Code::command_failed: return "command_failed";
    }
    return "?";
}

Screenshot Device::capture(int index, Clock& clock) {
    Screenshot shot;
    shot.index = index;
    shot.png = do_capture();
    shot.captured_at = clock.now();
    return shot;
}

double Device::perform(const UiAction& action, Clock& clock) {
    if (auto why = bounds_violation(action, handle_.screen_size)) {
        throw DeviceError(DeviceError::Code::out_of_bounds, *why);
    }
    const double start = clock.now();
    do_perform(action);
    return clock.now() - start;
}

void Device::snapshot_save(const std::string& id) {
    if (handle_.kind != DeviceKind::emulator) {
        throw DeviceError(DeviceError::Code::snapshot_unsupported,
                          "snapshots are not supported on physical device " + handle_.serial);
    }
    do_snapshot_save(id);
}

void Device::snapshot_load(const std::string& id) {
    if (handle_.kind != DeviceKind::emulator) {
        throw DeviceError(DeviceError::Code::snapshot_unsupported,
                          "snapshots are not supported on physical device " + handle_.serial);
    }
    do_snapshot_load(id);
}

}  // namespace mobench::device
