#include "mobench/dataset/task.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mobench/util/error.hpp"
#include "mobench/util/fs.hpp"
#include "mobench/util/text.hpp"

namespace mobench::dataset {

using json = nlohmann::json;

namespace {

constexpr std::string_view kFormat = "mobench.tasks";

const std::set<std::string> kTaskKeys = {"id",          "language",     "scope",       "apps",
                                         "category",    "difficulty",   "description", "golden_steps",
                                         "key_components", "subtasks",  "manual_cleanup"};
const std::set<std::string> kSubtaskKeys = {"app", "task", "history", "memory"};

/// Collects violations while reading one task object; never throws for
/// content problems, so a file reports all of them at once.
class TaskReader {
public:
    TaskReader(const json& node, std::string label, std::vector<std::string>& violations)
        : node_(node), label_(std::move(label)), violations_(violations) {}

    void fail(const std::string& what) { violations_.push_back(label_ + ": " + what); }

    template <typename T>
    std::optional<T> get(const char* key, bool required) {
        const auto it = node_.find(key);
        if (it == node_.end() || it->is_null()) {
            if (required) fail(std::string("missing field '") + key + "'");
            return std::nullopt;
        }
        try {
            return it->get<T>();
        } catch (const json::exception&) {
            fail(std::string("field '") + key + "' has the wrong type");
            return std::nullopt;
        }
    }

private:
    const json& node_;
    std::string label_;
    std::vector<std::string>& violations_;
};

SubtaskSpec read_subtask(const json& node, const std::string& label, std::vector<std::string>& violations) {
    SubtaskSpec sub;
    if (!node.is_object()) {
        violations.push_back(label + ": subtask must be an object");
        return sub;
    }
    TaskReader r(node, label, violations);
    for (const auto& [key, _] : node.items()) {
        if (!kSubtaskKeys.count(key)) r.fail("unknown field '" + key + "'");
    }
    sub.app = r.get<std::string>("app", true).value_or("");
    sub.task = r.get<std::string>("task", true).value_or("");
    sub.history = r.get<bool>("history", true).value_or(false);
    sub.memory = r.get<std::string>("memory", false);
    return sub;
}

TaskSpec read_task(const json& node, std::size_t index, std::vector<std::string>& violations) {
    TaskSpec task;
    const std::string fallback = "task #" + std::to_string(index);
    if (!node.is_object()) {
        violations.push_back(fallback + ": task must be an object");
        return task;
    }
    std::string label = fallback;
    if (const auto it = node.find("id"); it != node.end() && it->is_string()) {
        label = "task '" + it->get<std::string>() + "'";
    }
    TaskReader r(node, label, violations);
    for (const auto& [key, _] : node.items()) {
        if (!kTaskKeys.count(key)) r.fail("unknown field '" + key + "'");
    }
    task.id = r.get<std::string>("id", true).value_or("");
    if (auto lang = r.get<std::string>("language", true)) {
        try {
            task.language = parse_language(*lang);
        } catch (const ParseError& e) {
            r.fail(e.what());
        }
    }
    if (auto scope = r.get<std::string>("scope", true)) {
        try {
            task.scope = parse_scope(*scope);
        } catch (const ParseError& e) {
            r.fail(e.what());
        }
    }
    task.apps = r.get<std::vector<std::string>>("apps", true).value_or(std::vector<std::string>{});
    task.category = r.get<std::string>("category", false).value_or("");
    task.difficulty = r.get<int>("difficulty", true).value_or(0);
    task.description = r.get<std::string>("description", true).value_or("");
    task.golden_steps = r.get<int>("golden_steps", false);
    if (auto components = r.get<std::vector<std::string>>("key_components", false)) {
        for (auto& c : *components) c = text::to_lower(c);
        task.key_components = std::move(components);
    }
    if (const auto it = node.find("subtasks"); it != node.end() && !it->is_null()) {
        if (!it->is_array()) {
            r.fail("field 'subtasks' must be an array");
        } else {
            std::vector<SubtaskSpec> subs;
            for (std::size_t i = 0; i < it->size(); ++i) {
                subs.push_back(read_subtask((*it)[i], label + " subtask " + std::to_string(i + 1), violations));
            }
            task.subtasks = std::move(subs);
        }
    }
    task.manual_cleanup = r.get<bool>("manual_cleanup", false).value_or(false);
    return task;
}

json write_task(const TaskSpec& t) {
    json j = {{"id", t.id},
              {"language", to_string(t.language)},
              {"scope", to_string(t.scope)},
              {"apps", t.apps},
              {"category", t.category},
              {"difficulty", t.difficulty},
              {"description", t.description}};
    if (t.golden_steps) j["golden_steps"] = *t.golden_steps;
    if (t.key_components) j["key_components"] = *t.key_components;
    if (t.subtasks) {
        json subs = json::array();
        for (const auto& s : *t.subtasks) {
            json sj = {{"app", s.app}, {"task", s.task}, {"history", s.history}};
            if (s.memory) sj["memory"] = *s.memory;
            subs.push_back(std::move(sj));
        }
        j["subtasks"] = std::move(subs);
    }
    if (t.manual_cleanup) j["manual_cleanup"] = true;
    return j;
}

}  // namespace

std::string_view to_string(Language language) {
    return language == Language::english ? "english" : "chinese";
}

std::string_view to_string(Scope scope) {
    switch (scope) {
        case Scope::single_app: return "single_app";
        case Scope::cross_app: return "cross_app";
        case Scope::open_ended: return "open_ended";
    }
    return "?";
}

Language parse_language(std::string_view s) {
    if (s == "english") return Language::english;
    if (s == "chinese") return Language::chinese;
    throw ParseError("unknown language '" + std::string(s) + "'");
}

Scope parse_scope(std::string_view s) {
    if (s == "single_app") return Scope::single_app;
    if (s == "cross_app") return Scope::cross_app;
    if (s == "open_ended") return Scope::open_ended;
    throw ParseError("unknown scope '" + std::string(s) + "'");
}

const TaskSpec* TaskSet::find(std::string_view id) const {
    const auto it = std::find_if(tasks.begin(), tasks.end(), [&](const TaskSpec& t) { return t.id == id; });
    return it == tasks.end() ? nullptr : &*it;
}

const TaskSpec& TaskSet::at(std::string_view id) const {
    if (const auto* t = find(id)) return *t;
    throw Error("unknown task id '" + std::string(id) + "'");
}

std::map<std::string, int> TaskSet::counts() const {
    std::map<std::string, int> out;
    for (const auto& t : tasks) {
        ++out[std::string(to_string(t.language)) + "/" + std::string(to_string(t.scope))];
    }
    return out;
}

std::vector<std::string> placeholders(std::string_view task) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while ((i = task.find('{', i)) != std::string_view::npos) {
        const auto close = task.find('}', i + 1);
        if (close == std::string_view::npos) break;
        out.emplace_back(task.substr(i + 1, close - i - 1));
        i = close + 1;
    }
    return out;
}

std::vector<std::string> validate_subtasks(const std::vector<SubtaskSpec>& subtasks, std::string_view task_id) {
    std::vector<std::string> v;
    const std::string label = "task '" + std::string(task_id) + "'";
    std::vector<std::string> memories;
    for (std::size_t i = 0; i < subtasks.size(); ++i) {
        const auto& s = subtasks[i];
        const std::string sl = label + " subtask " + std::to_string(i + 1);
        if (s.app.empty()) v.push_back(sl + ": app is empty");
        if (s.task.empty()) v.push_back(sl + ": task is empty");
        if (s.memory && s.memory->empty()) v.push_back(sl + ": memory must be non-empty when present");
        if (i > 0 && subtasks[i - 1].app == s.app) {
            v.push_back(label + " subtasks " + std::to_string(i) + " and " + std::to_string(i + 1) +
                        ": adjacent subtasks use the same app '" + s.app + "'");
        }
        const auto phrases = placeholders(s.task);
        if (s.history) {
            if (phrases.empty()) v.push_back(sl + ": history=true but the task has no {phrase} placeholder");
            for (const auto& p : phrases) {
                if (std::find(memories.begin(), memories.end(), p) == memories.end()) {
                    v.push_back(sl + ": placeholder {" + p + "} does not match the memory of an earlier subtask");
                }
            }
        } else if (!phrases.empty()) {
            v.push_back(sl + ": history=false but the task contains placeholder {" + phrases.front() + "}");
        }
        if (s.memory && !s.memory->empty()) memories.push_back(*s.memory);
    }
    return v;
}

std::vector<std::string> validate_task(const TaskSpec& t, Strictness strictness) {
    std::vector<std::string> v;
    const std::string label = "task '" + t.id + "'";
    if (t.id.empty()) v.push_back(label + ": id is empty");
    if (t.description.empty()) v.push_back(label + ": description is empty");
    if (t.apps.empty()) v.push_back(label + ": apps must list at least one app");
    if (std::any_of(t.apps.begin(), t.apps.end(), [](const auto& a) { return a.empty(); })) {
        v.push_back(label + ": app names must be non-empty");
    }
    if (t.golden_steps && *t.golden_steps < 1) v.push_back(label + ": golden_steps must be >= 1");
    if (t.key_components) {
        for (const auto& c : *t.key_components) {
            if (text::strip_whitespace(c).empty()) v.push_back(label + ": key components must be non-empty");
        }
    }
    switch (t.scope) {
        case Scope::single_app:
            if (t.apps.size() != 1) v.push_back(label + ": single_app tasks need exactly one app");
            if (t.subtasks) v.push_back(label + ": single_app tasks cannot have subtasks");
            if (!t.key_components) v.push_back(label + ": single_app tasks need key_components");
            if (!t.golden_steps) v.push_back(label + ": golden_steps is required for closed tasks");
            if (t.difficulty < 1 || t.difficulty > 3) v.push_back(label + ": single_app difficulty must be 1, 2 or 3");
            break;
        case Scope::cross_app:
            if (t.apps.size() < 2) v.push_back(label + ": cross_app tasks need at least two apps");
            if ((!t.subtasks || t.subtasks->empty()) && strictness == Strictness::full) {
                v.push_back(label + ": cross_app tasks need reviewed subtasks");
            }
            if (t.key_components) v.push_back(label + ": cross_app tasks cannot have key_components");
            if (!t.golden_steps) v.push_back(label + ": golden_steps is required for closed tasks");
            if (t.difficulty < 1 || t.difficulty > 2) v.push_back(label + ": cross_app difficulty must be 1 or 2");
            if (t.subtasks) {
                auto sv = validate_subtasks(*t.subtasks, t.id);
                v.insert(v.end(), sv.begin(), sv.end());
            }
            break;
        case Scope::open_ended:
            if (t.apps.size() != 1) v.push_back(label + ": open_ended tasks need exactly one app");
            if (t.subtasks) v.push_back(label + ": open_ended tasks cannot have subtasks");
            if (t.difficulty < 1 || t.difficulty > 3) v.push_back(label + ": open_ended difficulty must be 1, 2 or 3");
            break;
    }
    return v;
}

TaskSet parse_taskset(std::string_view json_text, Strictness strictness) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed task file: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("task file must be a JSON object");
    if (doc.value("format", std::string()) != kFormat) {
        throw ParseError("task file must declare \"format\": \"" + std::string(kFormat) + "\"");
    }
    const auto tasks_it = doc.find("tasks");
    if (tasks_it == doc.end() || !tasks_it->is_array()) throw ParseError("task file needs a \"tasks\" array");

    TaskSet set;
    set.version = doc.value("version", 1);
    std::vector<std::string> violations;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < tasks_it->size(); ++i) {
        auto task = read_task((*tasks_it)[i], i, violations);
        auto tv = validate_task(task, strictness);
        violations.insert(violations.end(), tv.begin(), tv.end());
        if (!task.id.empty() && !seen.insert(task.id).second) {
            violations.push_back("task '" + task.id + "': duplicate task id");
        }
        set.tasks.push_back(std::move(task));
    }
    if (!violations.empty()) throw ValidationError(std::move(violations));
    return set;
}

TaskSet load_taskset(const std::filesystem::path& path, Strictness strictness) {
    namespace stdfs = std::filesystem;
    if (!stdfs::exists(path)) throw Error("task path does not exist: " + path.string());
    if (!stdfs::is_directory(path)) return parse_taskset(fs::read_file(path), strictness);

    std::vector<stdfs::path> files;
    for (const auto& entry : stdfs::directory_iterator(path)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    TaskSet merged;
    std::vector<std::string> violations;
    std::set<std::string> seen;
    for (const auto& file : files) {
        TaskSet part;
        try {
            part = parse_taskset(fs::read_file(file), strictness);
        } catch (const ValidationError& e) {
            for (const auto& v : e.violations()) violations.push_back(file.filename().string() + ": " + v);
            continue;
        } catch (const ParseError& e) {
            throw ParseError(file.filename().string() + ": " + e.what());
        }
        for (auto& t : part.tasks) {
            if (!seen.insert(t.id).second) {
                violations.push_back(file.filename().string() + ": task '" + t.id + "': duplicate task id");
            }
            merged.tasks.push_back(std::move(t));
        }
        merged.version = std::max(merged.version, part.version);
    }
    if (!violations.empty()) throw ValidationError(std::move(violations));
    return merged;
}

std::string serialize_taskset(const TaskSet& set) {
    json tasks = json::array();
    for (const auto& t : set.tasks) tasks.push_back(write_task(t));
    json doc = {{"format", kFormat}, {"version", set.version}, {"tasks", std::move(tasks)}};
    return doc.dump(2) + "\n";
}

int step_budget(const TaskSpec& task, double multiplier, int open_ended_cap) {
    if (!(multiplier > 0)) throw std::invalid_argument("step multiplier must be positive");
    if (open_ended_cap < 1) throw std::invalid_argument("open-ended step cap must be positive");
    if (task.scope == Scope::open_ended || !task.golden_steps) return open_ended_cap;
    const double raw = multiplier * static_cast<double>(*task.golden_steps);
    return std::max(1, static_cast<int>(std::ceil(raw - 1e-9)));
}

}  // namespace mobench::dataset

namespace mobench::dataset {

std::vector<std::string> app_keys(const std::vector<std::string>& apps) {
    std::map<std::string, int> total;
    for (const auto& a : apps) ++total[a];
    std::map<std::string, int> seen;
    std::vector<std::string> keys;
    keys.reserve(apps.size());
    for (const auto& a : apps) {
        if (total[a] == 1) {
            keys.push_back(a);
        } else {
            keys.push_back(a + "_" + std::to_string(++seen[a]));
        }
    }
    return keys;
}

}  // namespace mobench::dataset
