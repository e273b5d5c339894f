#include "mobench/providers/chat.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <nlohmann/json.hpp>

#include "mobench/dataset/task.hpp"
#include "mobench/util/encoding.hpp"
#include "mobench/util/fs.hpp"
#include "mobench/util/text.hpp"

namespace mobench::providers {

using json = nlohmann::json;

std::string_view to_string(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

std::string_view to_string(Purpose purpose) {
    switch (purpose) {
        case Purpose::judge: return "judge";
        case Purpose::split: return "split";
        case Purpose::memory: return "memory";
        case Purpose::subtasks: return "subtasks";
        case Purpose::other: return "other";
    }
    return "other";
}

int ChatRequest::image_count() const {
    int n = 0;
    for (const auto& m : messages) {
        for (const auto& p : m.parts) n += std::holds_alternative<ImagePart>(p) ? 1 : 0;
    }
    return n;
}

std::string ChatRequest::all_text() const {
    std::string out;
    for (const auto& m : messages) {
        for (const auto& p : m.parts) {
            if (const auto* t = std::get_if<TextPart>(&p)) out += t->text;
        }
    }
    return out;
}

std::string request_digest(const ChatRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) {
        json parts = json::array();
        for (const auto& p : m.parts) {
            if (const auto* t = std::get_if<TextPart>(&p)) {
                parts.push_back({{"type", "text"}, {"text", t->text}});
            } else {
                parts.push_back({{"type", "image"}, {"sha256", sha256_hex(std::get<ImagePart>(p).png)}});
            }
        }
        messages.push_back({{"role", to_string(m.role)}, {"parts", std::move(parts)}});
    }
    const json canonical{{"model", request.model_id}, {"temperature", request.temperature}, {"messages", messages}};
    return sha256_hex(canonical.dump());
}

std::chrono::milliseconds RetryPolicy::delay_after(int attempt) const {
    auto delay = base_delay;
    for (int i = 1; i < attempt && delay < max_delay; ++i) delay *= 2;
    return std::min(delay, max_delay);
}

ChatResponse with_retry(const std::function<ChatResponse()>& fn, const RetryPolicy& policy, const Sleeper& sleep) {
    const int attempts = std::max(1, policy.max_attempts);
    for (int attempt = 1;; ++attempt) {
        try {
            auto response = fn();
            response.attempts = attempt;
            return response;
        } catch (const ProviderError& e) {
            if (!e.retryable() || attempt >= attempts) throw;
        }
        const auto delay = policy.delay_after(attempt);
        if (sleep) {
            sleep(delay);
        } else {
            std::this_thread::sleep_for(delay);
        }
    }
}

RateLimiter::RateLimiter(double requests_per_minute, Sleeper sleep)
    : interval_(requests_per_minute > 0
                    ? std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                          std::chrono::duration<double>(60.0 / requests_per_minute))
                    : std::chrono::steady_clock::duration::zero()),
      next_(std::chrono::steady_clock::now()),
      sleep_(std::move(sleep)) {}

void RateLimiter::acquire() {
    std::chrono::steady_clock::duration wait{};
    {
        std::lock_guard lock(mutex_);
        const auto now = std::chrono::steady_clock::now();
        const auto slot = std::max(now, next_);
        wait = slot - now;
        next_ = slot + interval_;
    }
    if (wait > std::chrono::steady_clock::duration::zero()) {
        const auto ms = std::chrono::ceil<std::chrono::milliseconds>(wait);
        if (sleep_) {
            sleep_(ms);
        } else {
            std::this_thread::sleep_for(ms);
        }
    }
}

ChatResponse RateLimitedProvider::complete(const ChatRequest& request) {
    limiter_->acquire();
    return inner_->complete(request);
}

std::map<std::string, ChatResponse> load_cassette(const std::string& path) {
    std::map<std::string, ChatResponse> entries;
    try {
        const auto doc = json::parse(fs::read_file(path));
        if (doc.value("format", "") != "mobench.cassette") throw ParseError("not a cassette file: " + path);
        for (const auto& e : doc.at("entries")) {
            ChatResponse r;
            r.text = e.at("text").get<std::string>();
            r.usage.prompt_tokens = e.value("prompt_tokens", 0L);
            r.usage.completion_tokens = e.value("completion_tokens", 0L);
            entries[e.at("digest").get<std::string>()] = std::move(r);
        }
    } catch (const json::exception& e) {
        throw ParseError("malformed cassette " + path + ": " + e.what());
    }
    return entries;
}

void save_cassette(const std::string& path, const std::map<std::string, ChatResponse>& entries) {
    json list = json::array();
    for (const auto& [digest, r] : entries) {
        list.push_back({{"digest", digest},
                        {"text", r.text},
                        {"prompt_tokens", r.usage.prompt_tokens},
                        {"completion_tokens", r.usage.completion_tokens}});
    }
    const json doc{{"format", "mobench.cassette"}, {"version", 1}, {"entries", list}};
    fs::write_file_atomic(path, doc.dump(2) + "\n");
}

RecordingProvider::RecordingProvider(std::shared_ptr<ChatProvider> inner, std::string cassette_path)
    : inner_(std::move(inner)), path_(std::move(cassette_path)) {
    if (std::filesystem::exists(path_)) entries_ = load_cassette(path_);
}

ChatResponse RecordingProvider::complete(const ChatRequest& request) {
    auto response = inner_->complete(request);
    std::lock_guard lock(mutex_);
    entries_[request_digest(request)] = response;
    save_cassette(path_, entries_);
    return response;
}

MockChatProvider::MockChatProvider(const std::string& cassette_path) : cassette_(load_cassette(cassette_path)) {}

void MockChatProvider::on(Purpose purpose, Responder responder) {
    std::lock_guard lock(mutex_);
    responders_[purpose] = std::move(responder);
}

void MockChatProvider::add_cassette_entry(const std::string& digest, ChatResponse response) {
    std::lock_guard lock(mutex_);
    cassette_[digest] = std::move(response);
}

int MockChatProvider::calls() const {
    std::lock_guard lock(mutex_);
    return static_cast<int>(log_.size());
}

int MockChatProvider::calls(Purpose purpose) const {
    std::lock_guard lock(mutex_);
    return static_cast<int>(std::count_if(log_.begin(), log_.end(), [&](const auto& r) { return r.purpose == purpose; }));
}

std::vector<ChatRequest> MockChatProvider::requests() const {
    std::lock_guard lock(mutex_);
    return log_;
}

ChatResponse MockChatProvider::complete(const ChatRequest& request) {
    Responder responder;
    {
        std::lock_guard lock(mutex_);
        log_.push_back(request);
        if (!cassette_.empty()) {
            if (const auto it = cassette_.find(request_digest(request)); it != cassette_.end()) return it->second;
        }
        if (const auto it = responders_.find(request.purpose); it != responders_.end()) responder = it->second;
    }
    ChatResponse r;
    r.text = responder ? responder(request) : default_reply(request);
    r.usage = estimate_usage(request, r.text);
    return r;
}

Usage MockChatProvider::estimate_usage(const ChatRequest& request, const std::string& reply) {
    const auto text_bytes = static_cast<long>(request.all_text().size());
    Usage u;
    u.prompt_tokens = (text_bytes + 3) / 4 + 85L * request.image_count();
    u.completion_tokens = (static_cast<long>(reply.size()) + 3) / 4;
    return u;
}

namespace {

std::string after_marker(const std::string& text, std::string_view marker) {
    const auto pos = text.rfind(marker);
    if (pos == std::string::npos) return {};
    return text::trim(text.substr(pos + marker.size()));
}

std::string mock_split_reply(const ChatRequest& request) {
    const auto text = request.all_text();
    std::vector<std::string> apps;
    const auto pos = text.rfind("Here is the app list:\n");
    if (pos != std::string::npos) {
        const auto line_start = pos + std::string_view("Here is the app list:\n").size();
        const auto line = text.substr(line_start, text.find('\n', line_start) - line_start);
        try {
            apps = json::parse(line).get<std::vector<std::string>>();
        } catch (const json::exception&) {
            apps.clear();
        }
    }
    const auto keys = dataset::app_keys(apps);
    const int n = request.image_count();
    const int k = static_cast<int>(keys.size());
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (int i = 0; i < k; ++i) {
        // Near-equal contiguous shares of the screenshots, 1-based.
        const int start = i * n / k + 1;
        const int end = (i + 1) * n / k;
        if (end < start) {
            out[keys[i]] = {{"start screen", -1}, {"end screen", -1}};
        } else {
            out[keys[i]] = {{"start screen", start}, {"end screen", end}};
        }
    }
    return "I received " + std::to_string(n) + " screenshots.\n\n### Final Output:\n" + out.dump(2);
}

}  // namespace

std::string MockChatProvider::default_reply(const ChatRequest& request) {
    switch (request.purpose) {
        case Purpose::judge: return "Result: 1";
        case Purpose::split: return mock_split_reply(request);
        case Purpose::memory: {
            const auto phrase = after_marker(request.all_text(), "Here is the description:");
            return "The screenshots show " + phrase + " items matching the description.";
        }
        case Purpose::subtasks: {
            const auto task = after_marker(request.all_text(), "**Task**:");
            const json out{{"subtask_1", {{"app", "App"}, {"task", task}, {"history", false}, {"memory", "None"}}}};
            return out.dump(4);
        }
        case Purpose::other: return "OK";
    }
    return "OK";
}

}  // namespace mobench::providers
