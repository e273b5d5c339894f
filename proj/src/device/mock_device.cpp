#include "mobench/device/mock_device.hpp"

#include <nlohmann/json.hpp>

#include "mobench/util/encoding.hpp"
#include "mobench/util/fs.hpp"

namespace mobench::device {

using json = nlohmann::json;

namespace {

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string generated_ui_tree(const MockScreen& screen, ScreenSize size) {
    std::string xml = "<?xml version='1.0' encoding='UTF-8' standalone='yes' ?><hierarchy rotation=\"0\">";
    xml += "<node index=\"0\" class=\"android.widget.FrameLayout\" clickable=\"false\" bounds=\"[0,0][" +
           std::to_string(size.width) + "," + std::to_string(size.height) + "]\">";
    int index = 0;
    for (const auto& t : screen.texts) {
        xml += "<node index=\"" + std::to_string(index++) + "\" text=\"" + xml_escape(t.text) +
               "\" class=\"android.widget.TextView\" clickable=\"true\" bounds=\"[" + std::to_string(t.x) + "," +
               std::to_string(t.y) + "][" + std::to_string(t.x + t.w) + "," + std::to_string(t.y + t.h) + "]\" />";
    }
    xml += "</node></hierarchy>";
    return xml;
}

std::string_view action_kind(const UiAction& a) {
    switch (a.index()) {
        case 0: return "tap";
        case 1: return "long_press";
        case 2: return "swipe";
        case 3: return "type_text";
        default: return "key";
    }
}

bool matches(const MockTransition& t, const std::string& current, const UiAction& action) {
    if (t.from != "*" && t.from != current) return false;
    if (t.kind != action_kind(action)) return false;
    if (t.region) {
        const auto point = action_point(action);
        if (!point) return false;
        const auto& [rx, ry, rw, rh] = *t.region;
        if (point->first < rx || point->first >= rx + rw || point->second < ry || point->second >= ry + rh) return false;
    }
    if (t.key) {
        const auto* k = std::get_if<KeyPress>(&action);
        if (!k || k->key != *t.key) return false;
    }
    if (t.text) {
        const auto* typed = std::get_if<TypeText>(&action);
        if (!typed || typed->text != *t.text) return false;
    }
    return true;
}

Rgb read_rgb(const json& j) {
    const auto v = j.get<std::vector<int>>();
    if (v.size() != 3) throw ParseError("colour must be [r, g, b]");
    return Rgb{static_cast<std::uint8_t>(v[0]), static_cast<std::uint8_t>(v[1]), static_cast<std::uint8_t>(v[2])};
}

}  // namespace

MockScenario MockScenario::parse(std::string_view json_text) {
    MockScenario s;
    try {
        const auto doc = json::parse(json_text);
        if (doc.contains("screen_size")) {
            const auto v = doc.at("screen_size").get<std::vector<int>>();
            if (v.size() != 2 || v[0] <= 0 || v[1] <= 0) throw ParseError("screen_size must be [width, height] > 0");
            s.screen_size = {v[0], v[1]};
        }
        for (const auto& sj : doc.at("screens")) {
            MockScreen screen;
            screen.id = sj.at("id").get<std::string>();
            if (sj.contains("background")) screen.background = read_rgb(sj.at("background"));
            for (const auto& tj : sj.value("texts", json::array())) {
                const auto box = tj.at("bbox").get<std::vector<int>>();
                if (box.size() != 4) throw ParseError("bbox must be [x, y, w, h]");
                screen.texts.push_back({tj.at("text").get<std::string>(), box[0], box[1], box[2], box[3]});
            }
            if (sj.contains("ui_tree") && !sj.at("ui_tree").is_null()) screen.ui_tree = sj.at("ui_tree").get<std::string>();
            screen.ui_tree_available = sj.value("ui_tree_available", true);
            if (!s.screens.emplace(screen.id, screen).second) throw ParseError("duplicate screen id '" + screen.id + "'");
        }
        s.initial = doc.value("initial", s.screens.empty() ? std::string() : s.screens.begin()->first);
        for (const auto& tj : doc.value("transitions", json::array())) {
            MockTransition t;
            t.from = tj.at("from").get<std::string>();
            t.to = tj.at("to").get<std::string>();
            const auto& on = tj.at("on");
            t.kind = on.at("kind").get<std::string>();
            if (on.contains("region")) {
                const auto r = on.at("region").get<std::vector<int>>();
                if (r.size() != 4) throw ParseError("region must be [x, y, w, h]");
                t.region = std::array<int, 4>{r[0], r[1], r[2], r[3]};
            }
            if (on.contains("key")) t.key = parse_key(on.at("key").get<std::string>());
            if (on.contains("text")) t.text = on.at("text").get<std::string>();
            s.transitions.push_back(std::move(t));
        }
        if (doc.contains("snapshots")) s.snapshots = doc.at("snapshots").get<std::map<std::string, std::string>>();
        if (doc.contains("offline_after_captures")) s.offline_after_captures = doc.at("offline_after_captures").get<int>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed mock scenario: ") + e.what());
    }
    if (!s.screens.count(s.initial)) throw ParseError("mock scenario initial screen '" + s.initial + "' is not defined");
    for (const auto& t : s.transitions) {
        if (t.from != "*" && !s.screens.count(t.from)) throw ParseError("transition from unknown screen '" + t.from + "'");
        if (!s.screens.count(t.to)) throw ParseError("transition to unknown screen '" + t.to + "'");
    }
    for (const auto& [id, screen] : s.snapshots) {
        if (!s.screens.count(screen)) throw ParseError("snapshot '" + id + "' names unknown screen '" + screen + "'");
    }
    return s;
}

MockScenario MockScenario::load(const std::filesystem::path& path) { return parse(fs::read_file(path)); }

MockScenario MockScenario::basic() {
    MockScenario s;
    s.initial = "home";
    s.screens["home"] = MockScreen{"home", Rgb{230, 230, 240}, {{"Settings", 80, 400, 300, 60}}, std::nullopt, true};
    s.screens["settings"] =
        MockScreen{"settings", kWhite, {{"Settings", 60, 120, 400, 80}, {"Display", 60, 400, 300, 60}}, std::nullopt, true};
    s.transitions.push_back({"home", "tap", std::array<int, 4>{80, 400, 300, 60}, std::nullopt, std::nullopt, "settings"});
    s.transitions.push_back({"*", "key", std::nullopt, Key::home, std::nullopt, "home"});
    s.snapshots["clean"] = "home";
    return s;
}

MockDevice::MockDevice(std::string serial, DeviceKind kind, MockScenario scenario)
    : Device(DeviceHandle{std::move(serial), kind, scenario.screen_size}),
      scenario_(std::move(scenario)),
      current_(scenario_.initial) {}

bool MockDevice::reachable() {
    std::lock_guard lock(mutex_);
    return !offline_;
}

void MockDevice::set_offline(bool offline) {
    std::lock_guard lock(mutex_);
    offline_ = offline;
}

std::string MockDevice::current_screen() const {
    std::lock_guard lock(mutex_);
    return current_;
}

std::vector<UiAction> MockDevice::action_log() const {
    std::lock_guard lock(mutex_);
    return log_;
}

int MockDevice::capture_count() const {
    std::lock_guard lock(mutex_);
    return captures_;
}

void MockDevice::check_online() const {
    if (offline_) throw DeviceError(DeviceError::Code::offline, "device " + handle_.serial + " is offline");
}

std::string MockDevice::render(const std::string& screen_id) {
    std::lock_guard lock(mutex_);
    return render_locked(screen_id);
}

std::string MockDevice::render_locked(const std::string& screen_id) {
    if (const auto it = png_cache_.find(screen_id); it != png_cache_.end()) return it->second;
    const auto& screen = scenario_.screens.at(screen_id);
    Image image(scenario_.screen_size.width, scenario_.screen_size.height, screen.background);
    // Screen id in the corner keeps visually similar screens distinct.
    draw_text(image, screen.id, 8, 28, 0.8, Rgb{128, 128, 128}, 1);
    for (const auto& t : screen.texts) {
        const double scale = std::max(0.4, t.h / 40.0);
        draw_text(image, t.text, t.x, t.y + (t.h * 3) / 4, scale, kBlack, 2);
    }
    auto png = encode_png(image);
    png_cache_.emplace(screen_id, png);
    return png;
}

std::map<std::string, std::vector<MockText>> MockDevice::ocr_fixture() {
    std::lock_guard lock(mutex_);
    std::map<std::string, std::vector<MockText>> out;
    for (const auto& [id, screen] : scenario_.screens) {
        out[sha256_hex(render_locked(id))] = screen.texts;
    }
    return out;
}

std::string MockDevice::do_capture() {
    std::lock_guard lock(mutex_);
    check_online();
    ++captures_;
    if (scenario_.offline_after_captures && captures_ >= *scenario_.offline_after_captures) offline_ = true;
    return render_locked(current_);
}

void MockDevice::do_perform(const UiAction& action) {
    std::lock_guard lock(mutex_);
    check_online();
    log_.push_back(action);
    for (const auto& t : scenario_.transitions) {
        if (matches(t, current_, action)) {
            current_ = t.to;
            return;
        }
    }
}

std::string MockDevice::do_dump_ui_tree() {
    std::lock_guard lock(mutex_);
    check_online();
    const auto& screen = scenario_.screens.at(current_);
    if (!screen.ui_tree_available) {
        throw DeviceError(DeviceError::Code::ui_tree_unavailable, "screen '" + current_ + "' blocks view hierarchy dumps");
    }
    return screen.ui_tree ? *screen.ui_tree : generated_ui_tree(screen, scenario_.screen_size);
}

void MockDevice::do_snapshot_save(const std::string& id) {
    std::lock_guard lock(mutex_);
    check_online();
    scenario_.snapshots[id] = current_;
}

void MockDevice::do_snapshot_load(const std::string& id) {
    std::lock_guard lock(mutex_);
    check_online();
    const auto it = scenario_.snapshots.find(id);
    if (it == scenario_.snapshots.end()) {
        throw DeviceError(DeviceError::Code::unknown_snapshot, "unknown snapshot '" + id + "' on " + handle_.serial);
    }
    current_ = it->second;
}

}  // namespace mobench::device
