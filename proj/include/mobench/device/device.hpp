#pragma once

#include <string>

#include "mobench/device/action.hpp"
#include "mobench/util/clock.hpp"
#include "mobench/util/error.hpp"

namespace mobench::device {

enum class DeviceKind { emulator, physical };

std::string_view to_string(DeviceKind kind);
DeviceKind parse_device_kind(std::string_view s);

struct DeviceHandle {
    std::string serial;
    DeviceKind kind = DeviceKind::emulator;
    ScreenSize screen_size;
};

struct Screenshot {
    int index = 0;
    std::string png;
    double captured_at = 0.0;

    friend bool operator==(const Screenshot&, const Screenshot&) = default;
};

class DeviceError : public Error {
public:
    enum class Code {
        offline,
        capture_timeout,
        out_of_bounds,
        ui_tree_unavailable,
        snapshot_unsupported,
        unknown_snapshot,
        command_failed,
    };

    DeviceError(Code code, const std::string& message) : Error(message), code_(code) {}
    Code code() const noexcept { return code_; }

private:
    Code code_;
};

std::string_view to_string(DeviceError::Code code);

/// Uniform control surface over one device. Public calls validate and time;
/// transports implement the protected hooks. A Device is used by one worker
/// at a time.
class Device {
public:
    virtual ~Device() = default;

    const DeviceHandle& handle() const noexcept { return handle_; }

    /// Screenshot of the current screen, stamped with `index` and clock time.
    Screenshot capture(int index, Clock& clock);

    /// Bounds-checks then dispatches. Returns dispatch latency in seconds.
    double perform(const UiAction& action, Clock& clock);

    /// View hierarchy XML; DeviceError{ui_tree_unavailable} when the screen
    /// blocks dumps.
    std::string dump_ui_tree() { return do_dump_ui_tree(); }

    void snapshot_save(const std::string& id);
    void snapshot_load(const std::string& id);

    virtual bool reachable() = 0;

protected:
    explicit Device(DeviceHandle handle) : handle_(std::move(handle)) {}

    virtual std::string do_capture() = 0;
    virtual void do_perform(const UiAction& action) = 0;
    virtual std::string do_dump_ui_tree() = 0;
    virtual void do_snapshot_save(const std::string& id) = 0;
    virtual void do_snapshot_load(const std::string& id) = 0;

    DeviceHandle handle_;
};

}  // namespace mobench::device
