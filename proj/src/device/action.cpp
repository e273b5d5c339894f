#include "mobench/device/action.hpp"

#include <nlohmann/json.hpp>

#include "mobench/util/error.hpp"

namespace mobench::device {

using json = nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool inside(int x, int y, ScreenSize s) { return x >= 0 && y >= 0 && x < s.width && y < s.height; }

std::string point(int x, int y) { return "(" + std::to_string(x) + ", " + std::to_string(y) + ")"; }

int require_int(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_number_integer()) {
        throw ParseError(std::string("action field '") + key + "' must be an integer");
    }
    return it->get<int>();
}

}  // namespace

std::string_view to_string(Key key) {
    switch (key) {
        case Key::back: return "back";
        case Key::home: return "home";
        case Key::enter: return "enter";
    }
    return "?";
}

Key parse_key(std::string_view s) {
    if (s == "back") return Key::back;
    if (s == "home") return Key::home;
    if (s == "enter") return Key::enter;
    throw ParseError("unknown key '" + std::string(s) + "'");
}

std::optional<std::string> bounds_violation(const UiAction& action, ScreenSize size) {
    return std::visit(
        overloaded{
            [&](const Tap& a) -> std::optional<std::string> {
                if (!inside(a.x, a.y, size)) return "tap " + point(a.x, a.y) + " is outside the screen";
                return std::nullopt;
            },
            [&](const LongPress& a) -> std::optional<std::string> {
                if (!inside(a.x, a.y, size)) return "long press " + point(a.x, a.y) + " is outside the screen";
                if (a.duration_ms <= 0) return std::string("long press duration must be positive");
                return std::nullopt;
            },
            [&](const Swipe& a) -> std::optional<std::string> {
                if (!inside(a.x1, a.y1, size) || !inside(a.x2, a.y2, size)) {
                    return "swipe " + point(a.x1, a.y1) + " -> " + point(a.x2, a.y2) + " leaves the screen";
                }
                if (a.duration_ms <= 0) return std::string("swipe duration must be positive");
                return std::nullopt;
            },
            [](const TypeText&) -> std::optional<std::string> { return std::nullopt; },
            [](const KeyPress&) -> std::optional<std::string> { return std::nullopt; },
        },
        action);
}

std::string describe(const UiAction& action) {
    return std::visit(overloaded{
                          [](const Tap& a) { return "Tap at " + point(a.x, a.y); },
                          [](const LongPress& a) {
                              return "Long press at " + point(a.x, a.y) + " for " + std::to_string(a.duration_ms) +
                                     " ms";
                          },
                          [](const Swipe& a) {
                              return "Swipe from " + point(a.x1, a.y1) + " to " + point(a.x2, a.y2);
                          },
                          [](const TypeText& a) { return "Type text \"" + a.text + "\""; },
                          [](const KeyPress& a) {
                              switch (a.key) {
                                  case Key::back: return std::string("Press Back");
                                  case Key::home: return std::string("Press Home");
                                  case Key::enter: return std::string("Press Enter");
                              }
                              return std::string("Press key");
                          },
                      },
                      action);
}

std::optional<std::pair<int, int>> action_point(const UiAction& action) {
    if (const auto* t = std::get_if<Tap>(&action)) return std::pair{t->x, t->y};
    if (const auto* l = std::get_if<LongPress>(&action)) return std::pair{l->x, l->y};
    return std::nullopt;
}

json action_to_json(const UiAction& action) {
    return std::visit(overloaded{
                          [](const Tap& a) { return json{{"kind", "tap"}, {"x", a.x}, {"y", a.y}}; },
                          [](const LongPress& a) {
                              return json{{"kind", "long_press"}, {"x", a.x}, {"y", a.y}, {"duration_ms", a.duration_ms}};
                          },
                          [](const Swipe& a) {
                              return json{{"kind", "swipe"}, {"x1", a.x1}, {"y1", a.y1}, {"x2", a.x2},
                                          {"y2", a.y2},      {"duration_ms", a.duration_ms}};
                          },
                          [](const TypeText& a) { return json{{"kind", "type_text"}, {"text", a.text}}; },
                          [](const KeyPress& a) { return json{{"kind", "key"}, {"key", to_string(a.key)}}; },
                      },
                      action);
}

UiAction action_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("action must be an object");
    const auto kind_it = j.find("kind");
    if (kind_it == j.end() || !kind_it->is_string()) throw ParseError("action needs a string 'kind'");
    const auto kind = kind_it->get<std::string>();
    if (kind == "tap") return Tap{require_int(j, "x"), require_int(j, "y")};
    if (kind == "long_press") {
        LongPress a{require_int(j, "x"), require_int(j, "y")};
        if (j.contains("duration_ms")) a.duration_ms = require_int(j, "duration_ms");
        return a;
    }
    if (kind == "swipe") {
        Swipe a{require_int(j, "x1"), require_int(j, "y1"), require_int(j, "x2"), require_int(j, "y2")};
        if (j.contains("duration_ms")) a.duration_ms = require_int(j, "duration_ms");
        return a;
    }
    if (kind == "type_text") {
        const auto it = j.find("text");
        if (it == j.end() || !it->is_string()) throw ParseError("type_text needs a string 'text'");
        return TypeText{it->get<std::string>()};
    }
    if (kind == "key") {
        const auto it = j.find("key");
        if (it == j.end() || !it->is_string()) throw ParseError("key action needs a string 'key'");
        return KeyPress{parse_key(it->get<std::string>())};
    }
    throw ParseError("unknown action kind '" + kind + "'");
}

}  // namespace mobench::device
