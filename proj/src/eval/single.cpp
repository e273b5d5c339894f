#include "mobench/eval/single.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>

#include "mobench/eval/prompts.hpp"
#include "mobench/util/text.hpp"

namespace mobench::eval {

using providers::ChatRequest;
using providers::ImagePart;
using providers::Role;
using providers::TextPart;

std::string normalize(const std::vector<providers::OcrBox>& boxes) {
    std::string out;
    for (const auto& b : boxes) out += text::strip_whitespace(text::to_lower(b.text));
    return out;
}

std::string normalize_component(std::string_view component) {
    return text::strip_whitespace(text::to_lower(component));
}

CoarseResult coarse_scan(std::size_t count, const std::vector<std::string>& components,
                         const std::function<std::string(std::size_t)>& text_at) {
    CoarseResult result;
    result.normalized_texts.resize(count);
    for (std::size_t i = count; i-- > 0;) {
        auto& slot = result.normalized_texts[i];
        if (!slot) slot = text_at(i);
        const bool all = std::all_of(components.begin(), components.end(),
                                     [&](const std::string& c) { return slot->find(c) != std::string::npos; });
        if (all) {
            result.matched = true;
            result.matched_index = static_cast<int>(i);
            break;
        }
    }
    return result;
}

CoarseResult coarse_match(const std::vector<std::string>& pngs, const std::vector<std::string>& components,
                          providers::OcrEngine& ocr, const CoarseOptions& options, std::vector<std::string>* warnings) {
    std::vector<std::string> needles;
    needles.reserve(components.size());
    for (const auto& c : components) needles.push_back(normalize_component(c));

    const auto read = [&](std::size_t i) -> std::string {
        try {
            return normalize(ocr.recognize(pngs[i]));
        } catch (const providers::OcrUnavailable& e) {
            if (options.on_unavailable == OcrPolicy::fail) throw;
            if (warnings) warnings->push_back("OCR unavailable for screenshot " + std::to_string(i) + ": " + e.what());
            return {};
        }
    };

    if (!options.eager) return coarse_scan(pngs.size(), needles, read);
    std::vector<std::string> texts;
    texts.reserve(pngs.size());
    for (std::size_t i = 0; i < pngs.size(); ++i) texts.push_back(read(i));
    auto result = coarse_scan(pngs.size(), needles, [&](std::size_t i) { return texts[i]; });
    for (std::size_t i = 0; i < texts.size(); ++i) result.normalized_texts[i] = texts[i];
    return result;
}

void draw_action_dot(Image& image, const device::UiAction& action) {
    if (const auto p = device::action_point(action)) fill_disc(image, p->first, p->second, kDotRadius, kRed);
}

Image with_action_strip(const Image& screenshot, std::string_view description) {
    const int w = screenshot.width();
    Image strip(w, kSeparatorHeight + kStripHeight, kWhite);
    fill_rect(strip, 0, 0, w, kSeparatorHeight, kBlue);

    const double scale = std::clamp(w / 900.0, 0.4, 1.5);
    const int thickness = scale >= 0.8 ? 2 : 1;
    const int margin = std::max(4, w / 60);
    const int line_h = text_height(scale, thickness) + std::max(4, static_cast<int>(10 * scale));
    auto lines = wrap_text(description, w - 2 * margin, scale, thickness);
    const int max_lines = std::max(1, (kStripHeight - margin) / line_h);
    if (static_cast<int>(lines.size()) > max_lines) {
        lines.resize(max_lines);
        lines.back() += "...";
    }
    int baseline = kSeparatorHeight + margin + text_height(scale, thickness);
    for (const auto& line : lines) {
        draw_text(strip, line, margin, baseline, scale, kBlack, thickness);
        baseline += line_h;
    }
    return stack_vertical(screenshot, strip);
}

std::string extra_action_text(const std::vector<std::optional<device::UiAction>>& actions) {
    std::string out;
    for (std::size_t i = 0; i < actions.size(); ++i) {
        if (!actions[i]) continue;
        if (!out.empty()) out += "\n";
        out += "Screenshot " + std::to_string(i + 1) + ": " + device::describe(*actions[i]);
    }
    return out;
}

Evidence render_action_evidence(const std::vector<std::string>& pngs,
                                const std::vector<std::optional<device::UiAction>>& actions, ActionMode mode) {
    Evidence ev;
    if (mode == ActionMode::no_action) {
        ev.pngs = pngs;
        return ev;
    }
    std::vector<std::optional<device::UiAction>> aligned(pngs.size());
    for (std::size_t i = 0; i + 1 < pngs.size() && i < actions.size(); ++i) aligned[i] = actions[i];

    ev.pngs.reserve(pngs.size());
    for (std::size_t i = 0; i < pngs.size(); ++i) {
        if (!aligned[i]) {
            ev.pngs.push_back(pngs[i]);
            continue;
        }
        Image img = decode_png(pngs[i]);
        draw_action_dot(img, *aligned[i]);
        if (mode == ActionMode::image_action) img = with_action_strip(img, device::describe(*aligned[i]));
        ev.pngs.push_back(encode_png(img));
    }
    if (mode == ActionMode::text_action) ev.extra_action = extra_action_text(aligned);
    return ev;
}

std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx;
    if (k == 0) return idx;
    if (n <= k) {
        for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
        return idx;
    }
    if (k == 1) return {n - 1};
    idx.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        // round(i * (n-1) / (k-1)) in integers.
        idx.push_back((2 * i * (n - 1) + (k - 1)) / (2 * (k - 1)));
    }
    return idx;
}

namespace {

bool is_markup(char c) {
    return c != '\0' && (std::isspace(static_cast<unsigned char>(c)) || std::strchr("*_`'\"<[(", c) != nullptr);
}

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_word(char c) { return is_alnum(c) || c == '_'; }

bool iequals_at(std::string_view s, std::size_t pos, std::string_view word) {
    if (pos + word.size() > s.size()) return false;
    for (std::size_t i = 0; i < word.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[pos + i])) != word[i]) return false;
    }
    return true;
}

/// Bit of a well-formed "result: <bit>" starting at `pos`, if any.
std::optional<bool> verdict_at(std::string_view s, std::size_t pos) {
    if (!iequals_at(s, pos, "result")) return std::nullopt;
    std::size_t j = pos + 6;
    while (j < s.size() && is_markup(s[j])) ++j;
    if (j >= s.size() || s[j] != ':') return std::nullopt;
    ++j;
    while (j < s.size() && is_markup(s[j])) ++j;
    if (j >= s.size() || (s[j] != '0' && s[j] != '1')) return std::nullopt;
    const bool bit = s[j] == '1';
    ++j;
    if (j < s.size() && is_alnum(s[j])) return std::nullopt;
    // An echoed template ("Result: <1 OR 0>") is not an answer.
    std::size_t k = j;
    while (k < s.size() && std::isspace(static_cast<unsigned char>(s[k]))) ++k;
    if (iequals_at(s, k, "or") && (k + 2 >= s.size() || !is_word(s[k + 2]))) return std::nullopt;
    return bit;
}

std::size_t rfind_ci(std::string_view s, std::string_view word, std::size_t before) {
    for (std::size_t i = std::min(before, s.size()); i-- > 0;) {
        if (iequals_at(s, i, word)) return i;
    }
    return std::string_view::npos;
}

}  // namespace

bool parse_verdict(std::string_view reply) {
    for (std::size_t i = reply.size(); i-- > 0;) {
        if (const auto bit = verdict_at(reply, i)) return *bit;
    }
    throw ParseError("no 'Result: 0|1' in judge reply");
}

std::optional<std::string> parse_reason(std::string_view reply) {
    const auto pos = rfind_ci(reply, "reason", reply.size());
    if (pos == std::string_view::npos) return std::nullopt;
    auto start = pos + 6;
    while (start < reply.size() && is_markup(reply[start])) ++start;
    if (start >= reply.size() || reply[start] != ':') return std::nullopt;
    ++start;
    while (start < reply.size() && (reply[start] == '*' || reply[start] == '_')) ++start;
    auto end = reply.size();
    for (std::size_t i = start; i < reply.size(); ++i) {
        if (verdict_at(reply, i) || iequals_at(reply, i, "result:")) {
            end = i;
            break;
        }
    }
    auto reason = text::trim(reply.substr(start, end - start));
    while (!reason.empty() && (reason.back() == '*' || reason.back() == '_')) reason.pop_back();
    reason = text::trim(reason);
    if (reason.empty()) return std::nullopt;
    return reason;
}

JudgeInput judge_input(const dataset::TaskSpec& task, const agent::Trajectory& traj) {
    JudgeInput in;
    in.task_description = task.description;
    for (std::size_t i = 0; i < traj.screenshots.size(); ++i) {
        in.pngs.push_back(traj.screenshots[i].png);
        in.actions.push_back(traj.action_after(i));
    }
    return in;
}

ChatRequest build_judge_request(const JudgeInput& input, const EvalMode& mode, const JudgeOptions& options,
                                bool* subsampled) {
    const auto keep = subsample_indices(input.pngs.size(), options.max_images);
    if (subsampled) *subsampled = keep.size() < input.pngs.size();
    std::vector<std::string> pngs;
    std::vector<std::optional<device::UiAction>> actions;
    for (const auto i : keep) {
        pngs.push_back(input.pngs[i]);
        actions.push_back(i < input.actions.size() ? input.actions[i] : std::nullopt);
    }
    const auto evidence = render_action_evidence(pngs, actions, mode.action);

    ChatRequest req;
    req.model_id = options.model_id;
    req.temperature = options.temperature;
    req.purpose = providers::Purpose::judge;
    req.messages.push_back({Role::system, {TextPart{judge_system_prompt(mode.action)}}});
    providers::ChatMessage user{Role::user, {}};
    user.parts.push_back(
        TextPart{judge_base_prompt(input.task_description, input.history_info, mode, evidence.extra_action)});
    for (const auto& png : evidence.pngs) user.parts.push_back(ImagePart{png});
    req.messages.push_back(std::move(user));
    return req;
}

Verdict judge(const JudgeInput& input, const EvalMode& mode, providers::ChatProvider& chat,
              const JudgeOptions& options) {
    Verdict v;
    v.stage = Stage::fine;
    if (input.pngs.empty()) {
        v.evaluation_failure = true;
        v.failure_message = "no screenshots to judge";
        return v;
    }
    const auto request = build_judge_request(input, mode, options, &v.subsampled);
    v.images_sent = request.image_count();
    if (v.subsampled) {
        v.warnings.push_back("subsampled " + std::to_string(input.pngs.size()) + " screenshots to " +
                             std::to_string(v.images_sent));
    }
    std::string last_reply;
    for (int attempt = 0; attempt <= options.parse_retries; ++attempt) {
        providers::ChatResponse response;
        try {
            response = chat.complete(request);
        } catch (const providers::ProviderError& e) {
            v.evaluation_failure = true;
            v.failure_message = std::string("judge provider error: ") + e.what();
            return v;
        }
        ++v.judge_calls;
        v.judge_usage += response.usage;
        last_reply = response.text;
        try {
            v.success = parse_verdict(response.text);
            v.judge_reason = parse_reason(response.text);
            return v;
        } catch (const ParseError&) {
            v.warnings.push_back("unparseable judge reply on attempt " + std::to_string(attempt + 1));
        }
    }
    v.success = false;
    v.evaluation_failure = true;
    v.failure_message = "unparseable judge reply: " + last_reply.substr(0, 200);
    return v;
}

Verdict detect_single(const dataset::TaskSpec& task, const agent::Trajectory& traj, const EvalMode& mode,
                      providers::OcrEngine& ocr, providers::ChatProvider& chat, const DetectOptions& options) {
    if (task.scope == dataset::Scope::cross_app) throw Error("detect_single called on cross-app task " + task.id);
    auto input = judge_input(task, traj);
    if (input.pngs.empty()) {
        Verdict v;
        v.evaluation_failure = true;
        v.failure_message = "trajectory has no screenshots";
        return v;
    }
    std::optional<int> matched_index;
    std::vector<std::string> warnings;
    if (task.scope == dataset::Scope::single_app) {
        CoarseResult coarse;
        try {
            coarse = coarse_match(input.pngs, task.key_components.value_or(std::vector<std::string>{}), ocr,
                                  options.coarse, &warnings);
        } catch (const providers::OcrUnavailable& e) {
            Verdict v;
            v.evaluation_failure = true;
            v.failure_message = std::string("OCR unavailable: ") + e.what();
            return v;
        }
        if (!coarse.matched) {
            Verdict v;
            v.success = false;
            v.stage = Stage::coarse_reject;
            v.warnings = std::move(warnings);
            return v;
        }
        matched_index = coarse.matched_index;
    }
    auto v = judge(input, mode, chat, options.judge);
    v.coarse_matched_index = matched_index;
    v.warnings.insert(v.warnings.begin(), warnings.begin(), warnings.end());
    return v;
}

}  // namespace mobench::eval
