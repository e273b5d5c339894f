#include "mobench/agent/protocol.hpp"

#include <nlohmann/json.hpp>

namespace mobench::agent {

using json = nlohmann::json;

namespace {

json parse_object(std::string_view line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ProtocolError("message is not valid JSON");
    if (!j.is_object()) throw ProtocolError("message is not a JSON object");
    if (!j.contains("type") || !j.at("type").is_string()) throw ProtocolError("message has no string 'type'");
    return j;
}

const json& field(const json& j, const char* key) {
    if (!j.contains(key)) throw ProtocolError(std::string("missing field '") + key + "'");
    return j.at(key);
}

int int_field(const json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_number_integer()) throw ProtocolError(std::string("field '") + key + "' must be an integer");
    return v.get<int>();
}

std::string string_field(const json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_string()) throw ProtocolError(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

std::string optional_string(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return {};
    if (!j.at(key).is_string()) throw ProtocolError(std::string("field '") + key + "' must be a string");
    return j.at(key).get<std::string>();
}

long optional_count(const json& j, const char* key) {
    if (!j.contains(key)) return 0;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long>() < 0) {
        throw ProtocolError(std::string("field '") + key + "' must be a non-negative integer");
    }
    return v.get<long>();
}

void check_protocol(const json& j) {
    const auto p = string_field(j, "protocol");
    if (p != kProtocolVersion) throw ProtocolError("unsupported protocol '" + p + "'");
}

UiTreeStatus parse_status(std::string_view s) {
    if (s == "ok") return UiTreeStatus::ok;
    if (s == "unavailable") return UiTreeStatus::unavailable;
    if (s == "not_requested") return UiTreeStatus::not_requested;
    throw ProtocolError("unknown ui_tree_status '" + std::string(s) + "'");
}

}  // namespace

std::string_view to_string(UiTreeStatus s) {
    switch (s) {
        case UiTreeStatus::ok: return "ok";
        case UiTreeStatus::unavailable: return "unavailable";
        case UiTreeStatus::not_requested: return "not_requested";
    }
    return "not_requested";
}

std::string encode(const Hello& m) {
    return json{{"type", "hello"},
                {"protocol", kProtocolVersion},
                {"task_id", m.task_id},
                {"task_description", m.task_description},
                {"step_budget", m.step_budget},
                {"language", dataset::to_string(m.language)}}
        .dump();
}

std::string encode(const Capabilities& m) {
    json ui = m.ui_tree == UiTreeWant::required ? json("required") : json(m.ui_tree == UiTreeWant::yes);
    json j{{"type", "capabilities"}, {"protocol", kProtocolVersion}, {"screenshot", m.screenshot}, {"ui_tree", ui}};
    if (!m.agent.empty()) j["agent"] = m.agent;
    return j.dump();
}

std::string encode(const Observation& m) {
    return json{{"type", "observation"},
                {"step", m.step},
                {"task_description", m.task_description},
                {"screenshot", m.screenshot_path.empty() ? json(nullptr) : json(m.screenshot_path)},
                {"ui_tree", m.ui_tree ? json(*m.ui_tree) : json(nullptr)},
                {"ui_tree_status", to_string(m.ui_tree_status)},
                {"remaining_steps", m.remaining_steps}}
        .dump();
}

std::string encode(const Decision& m) {
    json j = decision_to_json(m.decision);
    j["type"] = "decision";
    j["step"] = m.step;
    j["usage"] = {{"prompt_tokens", m.prompt_tokens}, {"completion_tokens", m.completion_tokens}};
    j["log"] = m.log;
    return j.dump();
}

std::string encode(const Bye& m) { return json{{"type", "bye"}, {"reason", m.reason}}.dump(); }

AgentMessage parse_agent_message(std::string_view line) {
    const auto j = parse_object(line);
    const auto type = j.at("type").get<std::string>();
    if (type == "capabilities") {
        check_protocol(j);
        Capabilities c;
        const auto& shot = field(j, "screenshot");
        if (!shot.is_boolean()) throw ProtocolError("field 'screenshot' must be a boolean");
        c.screenshot = shot.get<bool>();
        const auto& ui = field(j, "ui_tree");
        if (ui.is_boolean()) {
            c.ui_tree = ui.get<bool>() ? UiTreeWant::yes : UiTreeWant::no;
        } else if (ui.is_string() && ui.get<std::string>() == "required") {
            c.ui_tree = UiTreeWant::required;
        } else {
            throw ProtocolError("field 'ui_tree' must be true, false or \"required\"");
        }
        if (!c.screenshot && c.ui_tree == UiTreeWant::no) throw ProtocolError("agent requests no observation channel");
        c.agent = optional_string(j, "agent");
        return c;
    }
    if (type == "decision") {
        Decision d;
        d.step = int_field(j, "step");
        const auto kind = string_field(j, "decision");
        if (kind == "act") {
            d.decision.kind = DecisionKind::act;
            const auto& a = field(j, "action");
            if (!a.is_object()) throw ProtocolError("act decision needs an action object");
            try {
                d.decision.action = device::action_from_json(a);
            } catch (const ParseError& e) {
                throw ProtocolError(std::string("bad action: ") + e.what());
            }
        } else if (kind == "complete") {
            d.decision.kind = DecisionKind::complete;
        } else if (kind == "abort") {
            d.decision.kind = DecisionKind::abort;
        } else {
            throw ProtocolError("unknown decision '" + kind + "'");
        }
        d.decision.reason = optional_string(j, "reason");
        d.decision.category = optional_string(j, "category");
        if (j.contains("usage")) {
            const auto& u = j.at("usage");
            if (!u.is_object()) throw ProtocolError("field 'usage' must be an object");
            d.prompt_tokens = optional_count(u, "prompt_tokens");
            d.completion_tokens = optional_count(u, "completion_tokens");
        }
        d.log = optional_string(j, "log");
        return d;
    }
    throw ProtocolError("unexpected message type '" + type + "' from agent");
}

HarnessMessage parse_harness_message(std::string_view line) {
    const auto j = parse_object(line);
    const auto type = j.at("type").get<std::string>();
    try {
        if (type == "hello") {
            check_protocol(j);
            Hello h;
            h.task_id = string_field(j, "task_id");
            h.task_description = string_field(j, "task_description");
            h.step_budget = int_field(j, "step_budget");
            h.language = dataset::parse_language(string_field(j, "language"));
            return h;
        }
        if (type == "observation") {
            Observation o;
            o.step = int_field(j, "step");
            o.task_description = string_field(j, "task_description");
            o.screenshot_path = optional_string(j, "screenshot");
            if (j.contains("ui_tree") && !j.at("ui_tree").is_null()) o.ui_tree = string_field(j, "ui_tree");
            o.ui_tree_status = parse_status(string_field(j, "ui_tree_status"));
            o.remaining_steps = int_field(j, "remaining_steps");
            return o;
        }
        if (type == "bye") return Bye{optional_string(j, "reason")};
    } catch (const ParseError& e) {
        throw ProtocolError(e.what());
    }
    throw ProtocolError("unexpected message type '" + type + "' from harness");
}

}  // namespace mobench::agent
