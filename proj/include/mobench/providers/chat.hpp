#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <variant>
#include <vector>

#include "mobench/util/error.hpp"

namespace mobench::providers {

struct TextPart {
    std::string text;
};

struct ImagePart {
    std::string png;
};

using Part = std::variant<TextPart, ImagePart>;

enum class Role { system, user, assistant };

std::string_view to_string(Role role);

struct ChatMessage {
    Role role = Role::user;
    std::vector<Part> parts;
};

/// What a request is for. Never sent on the wire; mocks use it to pick a
/// fallback response and tests use it to count calls.
enum class Purpose { judge, split, memory, subtasks, other };

std::string_view to_string(Purpose purpose);

struct ChatRequest {
    std::string model_id;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    Purpose purpose = Purpose::other;

    int image_count() const;
    /// Concatenation of every text part, in message order.
    std::string all_text() const;
};

struct Usage {
    long prompt_tokens = 0;
    long completion_tokens = 0;

    Usage& operator+=(const Usage& o) {
        prompt_tokens += o.prompt_tokens;
        completion_tokens += o.completion_tokens;
        return *this;
    }
    friend bool operator==(const Usage&, const Usage&) = default;
};

struct ChatResponse {
    std::string text;
    Usage usage;
    int attempts = 1;
};

class ProviderError : public Error {
public:
    enum class Kind { auth, rate_limited, transient, permanent };

    ProviderError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }
    bool retryable() const noexcept { return kind_ == Kind::rate_limited || kind_ == Kind::transient; }

private:
    Kind kind_;
};

/// Multimodal chat completion. Implementations are safe for concurrent use.
class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
};

/// Stable SHA-256 over model, temperature and message content (images by
/// their own digest). Purpose is excluded.
std::string request_digest(const ChatRequest& request);

using Sleeper = std::function<void(std::chrono::milliseconds)>;

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_delay{500};
    std::chrono::milliseconds max_delay{8000};

    /// Delay before attempt `attempt + 1`, for attempt >= 1: min(base * 2^(attempt-1), max).
    std::chrono::milliseconds delay_after(int attempt) const;
};

/// Calls `fn` until it succeeds, a non-retryable ProviderError is thrown, or
/// the policy runs out of attempts. The returned response carries the attempt count.
ChatResponse with_retry(const std::function<ChatResponse()>& fn, const RetryPolicy& policy, const Sleeper& sleep);

/// Spaces requests at least 60/requests_per_minute seconds apart.
class RateLimiter {
public:
    explicit RateLimiter(double requests_per_minute, Sleeper sleep = {});
    void acquire();

private:
    std::mutex mutex_;
    std::chrono::steady_clock::duration interval_;
    std::chrono::steady_clock::time_point next_;
    Sleeper sleep_;
};

class RateLimitedProvider final : public ChatProvider {
public:
    RateLimitedProvider(std::shared_ptr<ChatProvider> inner, std::shared_ptr<RateLimiter> limiter)
        : inner_(std::move(inner)), limiter_(std::move(limiter)) {}
    ChatResponse complete(const ChatRequest& request) override;

private:
    std::shared_ptr<ChatProvider> inner_;
    std::shared_ptr<RateLimiter> limiter_;
};

/// Wraps a provider and appends every exchange to a cassette file, so a real
/// run can later be replayed by MockChatProvider.
class RecordingProvider final : public ChatProvider {
public:
    RecordingProvider(std::shared_ptr<ChatProvider> inner, std::string cassette_path);
    ChatResponse complete(const ChatRequest& request) override;

private:
    std::shared_ptr<ChatProvider> inner_;
    std::string path_;
    std::mutex mutex_;
    std::map<std::string, ChatResponse> entries_;
};

/// Deterministic stand-in for a chat model. Looks the request digest up in a
/// cassette first; otherwise answers by purpose with a scripted responder or
/// the built-in rule. Records every call.
class MockChatProvider final : public ChatProvider {
public:
    using Responder = std::function<std::string(const ChatRequest&)>;

    MockChatProvider() = default;
    explicit MockChatProvider(const std::string& cassette_path);

    ChatResponse complete(const ChatRequest& request) override;

    void on(Purpose purpose, Responder responder);
    void add_cassette_entry(const std::string& digest, ChatResponse response);

    int calls() const;
    int calls(Purpose purpose) const;
    std::vector<ChatRequest> requests() const;

    /// Built-in rules: judge -> "Result: 1"; split -> contiguous even split of
    /// the screenshots over the app keys; memory -> a one-line summary of the
    /// description; subtasks -> one subtask per app; other -> "OK".
    static std::string default_reply(const ChatRequest& request);
    /// Deterministic token accounting for mock replies.
    static Usage estimate_usage(const ChatRequest& request, const std::string& reply);

private:
    mutable std::mutex mutex_;
    std::map<std::string, ChatResponse> cassette_;
    std::map<Purpose, Responder> responders_;
    std::vector<ChatRequest> log_;
};

std::map<std::string, ChatResponse> load_cassette(const std::string& path);
void save_cassette(const std::string& path, const std::map<std::string, ChatResponse>& entries);

}  // namespace mobench::providers
