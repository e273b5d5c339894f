#pragma once

#include <optional>
#include <string>
#include <variant>

#include <nlohmann/json_fwd.hpp>

namespace mobench::device {

struct ScreenSize {
    int width = 0;
    int height = 0;

    friend bool operator==(const ScreenSize&, const ScreenSize&) = default;
};

inline constexpr int kDefaultSwipeMs = 300;
inline constexpr int kDefaultLongPressMs = 1000;

enum class Key { back, home, enter };

struct Tap {
    int x = 0;
    int y = 0;
    friend bool operator==(const Tap&, const Tap&) = default;
};

struct LongPress {
    int x = 0;
    int y = 0;
    int duration_ms = kDefaultLongPressMs;
    friend bool operator==(const LongPress&, const LongPress&) = default;
};

struct Swipe {
    int x1 = 0;
    int y1 = 0;
    int x2 = 0;
    int y2 = 0;
    int duration_ms = kDefaultSwipeMs;
    friend bool operator==(const Swipe&, const Swipe&) = default;
};

struct TypeText {
    std::string text;
    friend bool operator==(const TypeText&, const TypeText&) = default;
};

struct KeyPress {
    Key key = Key::back;
    friend bool operator==(const KeyPress&, const KeyPress&) = default;
};

using UiAction = std::variant<Tap, LongPress, Swipe, TypeText, KeyPress>;

std::string_view to_string(Key key);
Key parse_key(std::string_view s);

/// Why `action` cannot be dispatched on a screen of `size`, or nullopt if it can.
std::optional<std::string> bounds_violation(const UiAction& action, ScreenSize size);

/// One-line English description used in judge evidence ("Tap at (540, 960)").
std::string describe(const UiAction& action);

/// Screen point of a single-position action (tap, long press), if any.
std::optional<std::pair<int, int>> action_point(const UiAction& action);

/// Wire form: {"kind": "tap", "x": .., "y": ..} etc. Throws ParseError.
nlohmann::json action_to_json(const UiAction& action);
UiAction action_from_json(const nlohmann::json& j);

}  // namespace mobench::device
