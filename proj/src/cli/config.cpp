#include "mobench/cli/config.hpp"

#include "mobench/util/fs.hpp"

namespace mobench::cli {

using json = nlohmann::json;
namespace stdfs = std::filesystem;

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const auto a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError("unknown config key '" + key + "' in " + where);
    }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

stdfs::path existing(const stdfs::path& base, const std::string& p, const std::string& what) {
    if (p.empty()) return {};
    stdfs::path path(p);
    if (path.is_relative() && !base.empty()) path = base / path;
    if (!stdfs::exists(path)) throw ConfigError(what + " " + path.string() + " does not exist");
    return path;
}

eval::EvalMode parse_mode_object(const json& j, const std::string& where) {
    check_keys(j, {"reasoning", "action"}, where);
    try {
        return {eval::parse_reasoning(get<std::string>(j, "reasoning", where, "result_only")),
                eval::parse_action_mode(get<std::string>(j, "action", where, "image_action"))};
    } catch (const ParseError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

}  // namespace

eval::EvalMode parse_mode_flag(std::string_view s) {
    const auto colon = s.find(':');
    if (colon == std::string_view::npos) throw ConfigError("mode must look like reasoning:action");
    try {
        return {eval::parse_reasoning(s.substr(0, colon)), eval::parse_action_mode(s.substr(colon + 1))};
    } catch (const ParseError& e) {
        throw ConfigError(std::string("bad mode: ") + e.what());
    }
}

HarnessConfig parse_config(std::string_view json_text, const stdfs::path& base_dir) {
    const json j = json::parse(json_text, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config is not valid JSON");
    check_keys(j,
               {"tasks", "output_root", "judge", "ocr", "costs", "agent_models", "eval_modes", "devices", "snapshot_id",
                "max_reruns", "budget", "concurrency", "clock"},
               "config");
    HarnessConfig c;
    c.tasks = existing(base_dir, get<std::string>(j, "tasks", "config", ""), "task path");
    if (const auto root = get<std::string>(j, "output_root", "config", ""); !root.empty()) {
        c.output_root = stdfs::path(root).is_relative() && !base_dir.empty() ? base_dir / root : stdfs::path(root);
    }
    if (j.contains("judge")) {
        const auto& jj = j.at("judge");
        check_keys(jj,
                   {"endpoint", "model", "temperature", "max_images", "parse_retries", "requests_per_minute",
                    "max_tokens", "timeout_s", "api_key"},
                   "judge");
        if (jj.contains("api_key")) {
            throw ConfigError("judge.api_key is not accepted; export HARNESS_API_KEY instead");
        }
        auto& g = c.judge;
        g.endpoint = get<std::string>(jj, "endpoint", "judge", g.endpoint);
        g.model = get<std::string>(jj, "model", "judge", g.model);
        g.temperature = get<double>(jj, "temperature", "judge", g.temperature);
        g.max_images = get<int>(jj, "max_images", "judge", g.max_images);
        g.parse_retries = get<int>(jj, "parse_retries", "judge", g.parse_retries);
        g.requests_per_minute = get<double>(jj, "requests_per_minute", "judge", g.requests_per_minute);
        if (jj.contains("max_tokens")) g.max_tokens = get<int>(jj, "max_tokens", "judge", 0);
        g.timeout_s = get<int>(jj, "timeout_s", "judge", g.timeout_s);
        if (g.temperature < 0) throw ConfigError("judge.temperature must be non-negative");
        if (g.max_images < 2) throw ConfigError("judge.max_images must be at least 2");
        if (g.parse_retries < 0) throw ConfigError("judge.parse_retries must be non-negative");
    }
    if (j.contains("ocr")) {
        const auto& jo = j.at("ocr");
        check_keys(jo, {"command", "timeout_s", "on_unavailable", "eager", "fixture"}, "ocr");
        c.ocr.command = get<std::vector<std::string>>(jo, "command", "ocr", {});
        c.ocr.timeout_s = get<int>(jo, "timeout_s", "ocr", c.ocr.timeout_s);
        const auto policy = get<std::string>(jo, "on_unavailable", "ocr", "fail");
        if (policy == "fail") {
            c.ocr.on_unavailable = eval::OcrPolicy::fail;
        } else if (policy == "empty") {
            c.ocr.on_unavailable = eval::OcrPolicy::empty;
        } else {
            throw ConfigError("ocr.on_unavailable must be \"fail\" or \"empty\"");
        }
        c.ocr.eager = get<bool>(jo, "eager", "ocr", false);
        c.ocr.fixture = existing(base_dir, get<std::string>(jo, "fixture", "ocr", ""), "OCR fixture");
    }
    if (j.contains("costs")) {
        try {
            c.costs = providers::CostTable::from_json(j.at("costs"));
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(std::string("costs: ") + e.what());
        }
    }
    c.agent_models = get<std::map<std::string, std::string>>(j, "agent_models", "config", {});
    if (j.contains("eval_modes")) {
        const auto& jm = j.at("eval_modes");
        check_keys(jm, {"english", "chinese"}, "eval_modes");
        for (const auto& [lang, mode] : jm.items()) {
            c.eval_modes[dataset::parse_language(lang)] = parse_mode_object(mode, "eval_modes." + lang);
        }
    }
    for (const char* key : {"devices", "snapshot_id", "max_reruns", "budget", "concurrency", "clock"}) {
        if (j.contains(key)) c.plan_defaults[key] = j.at(key);
    }
    if (c.plan_defaults.contains("devices")) {
        for (auto& d : c.plan_defaults["devices"]) {
            if (d.is_object() && d.contains("scenario") && d["scenario"].is_string()) {
                d["scenario"] = existing(base_dir, d["scenario"].get<std::string>(), "scenario").string();
            }
        }
    }
    return c;
}

HarnessConfig load_config(const stdfs::path& path) {
    if (!stdfs::exists(path)) throw ConfigError("config file " + path.string() + " does not exist");
    return parse_config(fs::read_file(path), path.parent_path());
}

}  // namespace mobench::cli
