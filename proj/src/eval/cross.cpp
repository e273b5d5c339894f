#include "mobench/eval/cross.hpp"

#include <algorithm>
#include <map>

#include <nlohmann/json.hpp>

#include "mobench/eval/prompts.hpp"
#include "mobench/util/image.hpp"
#include "mobench/util/json_scan.hpp"
#include "mobench/util/text.hpp"

namespace mobench::eval {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
using providers::ChatRequest;
using providers::ImagePart;
using providers::Role;
using providers::TextPart;

namespace {

std::optional<bool> loose_bool(const ordered_json& j) {
    if (j.is_boolean()) return j.get<bool>();
    if (j.is_string()) {
        const auto s = text::to_lower(text::trim(j.get<std::string>()));
        if (s == "true") return true;
        if (s == "false") return false;
    }
    return std::nullopt;
}

std::optional<long> loose_int(const ordered_json& j) {
    if (j.is_number_integer()) return j.get<long>();
    if (j.is_number_float()) {
        const double d = j.get<double>();
        if (d == static_cast<double>(static_cast<long>(d))) return static_cast<long>(d);
        return std::nullopt;
    }
    if (j.is_string()) {
        const auto s = text::trim(j.get<std::string>());
        try {
            std::size_t used = 0;
            const long v = std::stol(s, &used);
            if (used == s.size()) return v;
        } catch (const std::exception&) {
        }
    }
    return std::nullopt;
}

json subtask_to_json(const dataset::SubtaskSpec& s) {
    return json{{"app", s.app}, {"task", s.task}, {"history", s.history},
                {"memory", s.memory ? json(*s.memory) : json(nullptr)}};
}

std::optional<int> subtask_number(const std::string& key) {
    static constexpr std::string_view prefix = "subtask_";
    if (key.rfind(prefix, 0) != 0) return std::nullopt;
    const auto digits = key.substr(prefix.size());
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        return std::nullopt;
    }
    return std::stoi(digits);
}

std::optional<std::vector<dataset::SubtaskSpec>> subtasks_from_object(const ordered_json& obj) {
    if (!obj.is_object() || obj.empty()) return std::nullopt;
    std::vector<std::pair<int, dataset::SubtaskSpec>> numbered;
    for (const auto& [key, value] : obj.items()) {
        const auto n = subtask_number(key);
        if (!n || !value.is_object()) return std::nullopt;
        if (!value.contains("app") || !value.contains("task") || !value.at("app").is_string() ||
            !value.at("task").is_string()) {
            return std::nullopt;
        }
        dataset::SubtaskSpec s;
        s.app = value.at("app").get<std::string>();
        s.task = value.at("task").get<std::string>();
        const auto history = value.contains("history") ? loose_bool(value.at("history")) : std::optional<bool>(false);
        if (!history) return std::nullopt;
        s.history = *history;
        if (value.contains("memory") && value.at("memory").is_string()) {
            const auto m = text::trim(value.at("memory").get<std::string>());
            if (!m.empty() && m != "None" && m != "none") s.memory = m;
        }
        numbered.emplace_back(*n, std::move(s));
    }
    std::sort(numbered.begin(), numbered.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < numbered.size(); ++i) {
        if (numbered[i].first == numbered[i - 1].first) return std::nullopt;
    }
    std::vector<dataset::SubtaskSpec> out;
    for (auto& [_, s] : numbered) out.push_back(std::move(s));
    return out;
}

std::vector<std::string> downsample_all(const std::vector<std::string>& pngs, int max_edge, bool& changed) {
    std::vector<std::string> out;
    out.reserve(pngs.size());
    changed = false;
    for (const auto& png : pngs) {
        const auto [w, h] = png_dimensions(png);
        if (std::max(w, h) <= max_edge) {
            out.push_back(png);
            continue;
        }
        out.push_back(encode_png(downscale_to_max_edge(decode_png(png), max_edge)));
        changed = true;
    }
    return out;
}

}  // namespace

std::vector<dataset::SubtaskSpec> parse_subtasks(std::string_view reply) {
    for (const auto candidate : json_object_candidates(reply)) {
        auto obj = ordered_json::parse(candidate, nullptr, false);
        if (obj.is_discarded()) obj = ordered_json::parse(pythonic_to_json(candidate), nullptr, false);
        if (obj.is_discarded()) continue;
        if (auto subtasks = subtasks_from_object(obj)) return *subtasks;
    }
    throw ParseError("reply contains no subtask object");
}

SubtaskProposal generate_subtasks(const dataset::TaskSpec& task, providers::ChatProvider& chat,
                                  const JudgeOptions& options, int max_regenerations) {
    if (task.scope != dataset::Scope::cross_app) throw Error("task " + task.id + " is not a cross-app task");
    ChatRequest req;
    req.model_id = options.model_id;
    req.temperature = options.temperature;
    req.purpose = providers::Purpose::subtasks;
    req.messages.push_back({Role::system, {TextPart{subtask_system_prompt()}}});
    req.messages.push_back({Role::user, {TextPart{subtask_user_prompt(task.description)}}});

    SubtaskProposal proposal;
    proposal.task_id = task.id;
    for (int attempt = 0; attempt <= max_regenerations; ++attempt) {
        const auto response = chat.complete(req);
        ++proposal.attempts;
        proposal.usage += response.usage;
        proposal.raw_reply = response.text;
        try {
            proposal.subtasks = parse_subtasks(response.text);
            return proposal;
        } catch (const ParseError&) {
        }
    }
    throw Error("no parseable subtask proposal for " + task.id + " after " + std::to_string(proposal.attempts) +
                " attempts; author the review file manually");
}

std::string export_review(const dataset::TaskSpec& task, const SubtaskProposal& proposal) {
    json subtasks = json::array();
    for (const auto& s : proposal.subtasks) subtasks.push_back(subtask_to_json(s));
    const auto violations = dataset::validate_subtasks(proposal.subtasks, task.id);
    const json doc{{"format", "mobench.subtask_review"},
                   {"version", 1},
                   {"task_id", task.id},
                   {"description", task.description},
                   {"apps", task.apps},
                   {"approved", false},
                   {"subtasks", subtasks},
                   {"open_issues", violations},
                   {"generator", {{"attempts", proposal.attempts}, {"raw_reply", proposal.raw_reply}}}};
    return doc.dump(2) + "\n";
}

ReviewedSubtasks import_review(std::string_view review_json) {
    ReviewedSubtasks out;
    bool approved = false;
    try {
        const auto doc = json::parse(review_json);
        if (doc.value("format", "") != "mobench.subtask_review") throw ParseError("not a subtask review file");
        out.task_id = doc.at("task_id").get<std::string>();
        approved = doc.at("approved").get<bool>();
        for (const auto& s : doc.at("subtasks")) {
            dataset::SubtaskSpec spec;
            spec.app = s.at("app").get<std::string>();
            spec.task = s.at("task").get<std::string>();
            spec.history = s.at("history").get<bool>();
            if (s.contains("memory") && !s.at("memory").is_null()) spec.memory = s.at("memory").get<std::string>();
            out.subtasks.push_back(std::move(spec));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed review file: ") + e.what());
    }
    std::vector<std::string> violations;
    if (!approved) violations.push_back(out.task_id + ": review file is not approved");
    if (out.subtasks.empty()) violations.push_back(out.task_id + ": review file has no subtasks");
    auto sub = dataset::validate_subtasks(out.subtasks, out.task_id);
    violations.insert(violations.end(), sub.begin(), sub.end());
    if (!violations.empty()) throw ValidationError(std::move(violations));
    return out;
}

void apply_review(dataset::TaskSet& set, const ReviewedSubtasks& review) {
    auto it = std::find_if(set.tasks.begin(), set.tasks.end(), [&](const auto& t) { return t.id == review.task_id; });
    if (it == set.tasks.end()) throw ValidationError({"unknown task id '" + review.task_id + "'"});
    auto updated = *it;
    updated.subtasks = review.subtasks;
    auto violations = dataset::validate_task(updated);
    for (const auto& s : review.subtasks) {
        if (std::find(updated.apps.begin(), updated.apps.end(), s.app) == updated.apps.end()) {
            violations.push_back(review.task_id + ": subtask app '" + s.app + "' is not one of the task's apps");
        }
    }
    if (!violations.empty()) throw ValidationError(std::move(violations));
    *it = std::move(updated);
}

int from_provider_index(long raw) {
    if (raw == -1) return -1;
    if (raw >= 1 && raw <= 1'000'000) return static_cast<int>(raw - 1);
    return kOutOfRangeIndex;
}

std::string_view to_string(SegmentViolationKind kind) {
    switch (kind) {
        case SegmentViolationKind::missing_app: return "missing_app";
        case SegmentViolationKind::malformed: return "malformed";
        case SegmentViolationKind::inverted: return "inverted";
        case SegmentViolationKind::out_of_range: return "out_of_range";
        case SegmentViolationKind::too_short: return "too_short";
        case SegmentViolationKind::overlap: return "overlap";
        case SegmentViolationKind::order: return "order";
        case SegmentViolationKind::app_order: return "app_order";
    }
    return "?";
}

Segmentation parse_segmentation(std::string_view reply) {
    for (const auto candidate : json_object_candidates(reply)) {
        const auto obj = ordered_json::parse(candidate, nullptr, false);
        if (obj.is_discarded() || !obj.is_object() || obj.empty()) continue;
        Segmentation seg;
        bool shape_ok = true;
        for (const auto& [key, value] : obj.items()) {
            if (!value.is_object() || !value.contains("start screen") || !value.contains("end screen")) {
                shape_ok = false;
                break;
            }
            const auto start = loose_int(value.at("start screen"));
            const auto end = loose_int(value.at("end screen"));
            if (!start || !end) {
                shape_ok = false;
                break;
            }
            seg.push_back({key, from_provider_index(*start), from_provider_index(*end)});
        }
        if (shape_ok) return seg;
    }
    throw ParseError("reply contains no segmentation object");
}

std::vector<SegmentViolation> validate_segmentation(const Segmentation& seg, int traj_len,
                                                    const std::vector<std::string>& expected_keys) {
    std::vector<SegmentViolation> v;
    using K = SegmentViolationKind;
    if (!expected_keys.empty()) {
        std::vector<std::string> keys;
        for (const auto& s : seg) keys.push_back(s.app_key);
        if (keys != expected_keys) {
            v.push_back({K::app_order, "segment keys " + json(keys).dump() + " differ from app list " +
                                           json(expected_keys).dump()});
        }
    }
    const auto n = seg.size();
    std::vector<std::size_t> good;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = seg[i];
        const auto name = "'" + s.app_key + "'";
        if (s.start == -1 && s.end == -1) {
            v.push_back({K::missing_app, name + " is missing from the trajectory"});
            continue;
        }
        if (s.start == -1 || s.end == -1) {
            v.push_back({K::malformed, name + " has only one of start/end set to -1"});
            continue;
        }
        if (s.start < 0 || s.end < 0 || s.start >= traj_len || s.end >= traj_len) {
            v.push_back({K::out_of_range, name + " indices fall outside the " + std::to_string(traj_len) + " screenshots"});
            continue;
        }
        if (s.start > s.end) {
            v.push_back({K::inverted, name + " starts after it ends"});
            continue;
        }
        if (i + 1 < n && s.end - s.start + 1 < 2) {
            v.push_back({K::too_short, name + " spans a single screenshot but is not the final app"});
        }
        good.push_back(i);
    }
    for (std::size_t k = 1; k < good.size(); ++k) {
        const auto& a = seg[good[k - 1]];
        const auto& b = seg[good[k]];
        if (b.start <= a.start) {
            v.push_back({K::order, "'" + b.app_key + "' does not start after '" + a.app_key + "'"});
        }
    }
    auto by_start = good;
    std::stable_sort(by_start.begin(), by_start.end(), [&](std::size_t a, std::size_t b) { return seg[a].start < seg[b].start; });
    for (std::size_t k = 1; k < by_start.size(); ++k) {
        const auto& a = seg[by_start[k - 1]];
        const auto& b = seg[by_start[k]];
        if (b.start <= a.end) v.push_back({K::overlap, "'" + a.app_key + "' and '" + b.app_key + "' overlap"});
    }
    return v;
}

SplitResult split_trajectory(const std::vector<std::string>& pngs, const std::vector<std::string>& apps,
                             std::string_view task_description, providers::ChatProvider& chat,
                             const JudgeOptions& options, int max_edge) {
    SplitResult result;
    ChatRequest req;
    req.model_id = options.model_id;
    req.temperature = options.temperature;
    req.purpose = providers::Purpose::split;
    req.messages.push_back({Role::system, {TextPart{split_system_prompt(task_description)}}});
    providers::ChatMessage user{Role::user, {TextPart{split_user_prompt(apps)}}};
    for (auto& png : downsample_all(pngs, max_edge, result.downsampled)) user.parts.push_back(ImagePart{std::move(png)});
    req.messages.push_back(std::move(user));

    for (int attempt = 0; attempt < 2; ++attempt) {
        const auto response = chat.complete(req);
        ++result.calls;
        result.usage += response.usage;
        result.raw_reply = response.text;
        try {
            result.segmentation = parse_segmentation(response.text);
            result.parsed = true;
            return result;
        } catch (const ParseError&) {
        }
    }
    return result;
}

void MemoryStore::put(const std::string& phrase, const std::string& summary) {
    for (auto& [p, s] : entries_) {
        if (p == phrase) {
            s = summary;
            return;
        }
    }
    entries_.emplace_back(phrase, summary);
}

const std::string* MemoryStore::find(std::string_view phrase) const {
    for (const auto& [p, s] : entries_) {
        if (p == phrase) return &s;
    }
    return nullptr;
}

std::string summarize_memory(const std::vector<std::string>& pngs, std::string_view phrase,
                             providers::ChatProvider& chat, const JudgeOptions& options, providers::Usage* usage) {
    if (text::trim(phrase).empty()) return {};
    ChatRequest req;
    req.model_id = options.model_id;
    req.temperature = options.temperature;
    req.purpose = providers::Purpose::memory;
    req.messages.push_back({Role::system, {TextPart{memory_system_prompt()}}});
    providers::ChatMessage user{Role::user, {TextPart{memory_user_prompt(phrase)}}};
    for (const auto& png : pngs) user.parts.push_back(ImagePart{png});
    req.messages.push_back(std::move(user));
    const auto response = chat.complete(req);
    if (usage) *usage += response.usage;
    std::string folded;
    for (const auto& line : text::split_lines(response.text)) {
        const auto t = text::trim(line);
        if (t.empty()) continue;
        if (!folded.empty()) folded.push_back(' ');
        folded += t;
    }
    return folded;
}

std::string resolve_history(const dataset::SubtaskSpec& sub, const MemoryStore& memory) {
    if (!sub.history) return sub.task;
    std::vector<std::pair<std::string, std::string>> values;
    for (const auto& phrase : dataset::placeholders(sub.task)) {
        const auto* summary = memory.find(phrase);
        if (!summary) throw Error("no stored memory for '{" + phrase + "}'");
        values.emplace_back(phrase, *summary);
    }
    return text::substitute(sub.task, values);
}

json cross_audit_to_json(const CrossVerdict& cv) {
    json segments = json::array();
    for (const auto& s : cv.segmentation) segments.push_back({{"app_key", s.app_key}, {"start", s.start}, {"end", s.end}});
    json violations = json::array();
    for (const auto& v : cv.violations) violations.push_back({{"kind", to_string(v.kind)}, {"detail", v.detail}});
    json subtasks = json::array();
    for (const auto& a : cv.subtasks) {
        subtasks.push_back({{"index", a.index},
                            {"app_key", a.app_key},
                            {"description", a.description},
                            {"start", a.start},
                            {"end", a.end},
                            {"judged", a.judged},
                            {"success", a.success},
                            {"reason", a.reason ? json(*a.reason) : json(nullptr)},
                            {"memory_summary", a.memory_summary ? json(*a.memory_summary) : json(nullptr)}});
    }
    return json{{"app_keys", cv.app_keys},
                {"segmentation", segments},
                {"violations", violations},
                {"subtasks", subtasks}};
}

CrossVerdict detect_cross(const dataset::TaskSpec& task, const agent::Trajectory& traj,
                          providers::ChatProvider& chat, const CrossOptions& options) {
    CrossVerdict cv;
    auto& v = cv.verdict;
    v.stage = Stage::cross;
    const auto fail_eval = [&](const std::string& message) {
        v.success = false;
        v.evaluation_failure = true;
        v.failure_message = message;
        return cv;
    };
    if (task.scope != dataset::Scope::cross_app || !task.subtasks || task.subtasks->empty()) {
        return fail_eval("task " + task.id + " has no reviewed subtasks");
    }
    if (traj.screenshots.empty()) return fail_eval("trajectory has no screenshots");

    const auto& subtasks = *task.subtasks;
    std::vector<std::string> apps;
    for (const auto& s : subtasks) apps.push_back(s.app);
    cv.app_keys = dataset::app_keys(apps);

    std::vector<std::string> pngs;
    for (const auto& s : traj.screenshots) pngs.push_back(s.png);

    SplitResult split;
    try {
        split = split_trajectory(pngs, apps, task.description, chat, options.judge, options.stage1_max_edge);
    } catch (const providers::ProviderError& e) {
        return fail_eval(std::string("segmentation provider error: ") + e.what());
    }
    v.judge_usage += split.usage;
    if (split.downsampled) {
        v.warnings.push_back("stage-1 screenshots downsampled to " + std::to_string(options.stage1_max_edge) + " px");
    }
    if (!split.parsed) {
        v.success = false;
        v.warnings.push_back("segmentation reply unparseable after retry");
        return cv;
    }
    cv.segmentation = split.segmentation;
    cv.violations = validate_segmentation(cv.segmentation, static_cast<int>(pngs.size()), cv.app_keys);
    if (!cv.violations.empty()) {
        v.success = false;
        return cv;
    }

    for (std::size_t i = 0; i < subtasks.size(); ++i) {
        const auto& sub = subtasks[i];
        const auto& seg = cv.segmentation[i];
        SubtaskAudit audit;
        audit.index = static_cast<int>(i);
        audit.app_key = seg.app_key;
        audit.start = seg.start;
        audit.end = seg.end;
        try {
            audit.description = resolve_history(sub, cv.memory);
        } catch (const Error& e) {
            cv.subtasks.push_back(audit);
            return fail_eval(e.what());
        }

        JudgeInput input;
        input.task_description = audit.description;
        for (int k = seg.start; k <= seg.end; ++k) {
            input.pngs.push_back(pngs[static_cast<std::size_t>(k)]);
            input.actions.push_back(k < seg.end ? traj.action_after(static_cast<std::size_t>(k)) : std::nullopt);
        }
        const auto sv = judge(input, options.subtask_mode, chat, options.judge);
        v.judge_calls += sv.judge_calls;
        v.judge_usage += sv.judge_usage;
        v.images_sent += sv.images_sent;
        v.subsampled = v.subsampled || sv.subsampled;
        v.warnings.insert(v.warnings.end(), sv.warnings.begin(), sv.warnings.end());
        audit.judged = true;
        audit.success = sv.success;
        audit.reason = sv.judge_reason;
        if (sv.evaluation_failure) {
            cv.subtasks.push_back(audit);
            return fail_eval("subtask " + std::to_string(i + 1) + ": " + sv.failure_message);
        }
        if (!sv.success) {
            cv.subtasks.push_back(audit);
            v.success = false;
            v.judge_reason = "subtask " + std::to_string(i + 1) + " (" + seg.app_key + ") failed" +
                             (sv.judge_reason ? ": " + *sv.judge_reason : std::string());
            return cv;
        }
        if (sub.memory) {
            try {
                const auto summary = summarize_memory(input.pngs, *sub.memory, chat, options.judge, &v.judge_usage);
                cv.memory.put(*sub.memory, summary);
                audit.memory_summary = summary;
            } catch (const providers::ProviderError& e) {
                cv.subtasks.push_back(audit);
                return fail_eval("memory summary for subtask " + std::to_string(i + 1) + ": " + e.what());
            }
        }
        cv.subtasks.push_back(std::move(audit));
    }
    v.success = true;
    return cv;
}

}  // namespace mobench::eval
