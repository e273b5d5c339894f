#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "mobench/providers/chat.hpp"

namespace mobench::providers {

struct HttpResult {
    int status = 0;  ///< 0: no HTTP response (connection or timeout failure)
    std::string body;
    std::string error;
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResult post(const std::string& url, const std::string& body,
                            const std::map<std::string, std::string>& headers, std::chrono::milliseconds timeout) = 0;
};

/// cpp-httplib backed transport; https URLs use OpenSSL.
std::unique_ptr<HttpTransport> make_http_transport();

struct OpenAIOptions {
    /// Base URL; requests go to `<endpoint>/chat/completions`.
    std::string endpoint = "https://api.openai.com/v1";
    std::string api_key_env = "HARNESS_API_KEY";
    std::chrono::milliseconds timeout{120'000};
    RetryPolicy retry;
    std::optional<int> max_tokens;
};

/// Client for the OpenAI-compatible chat-completions schema. Text parts are
/// sent as {"type":"text"}, images as base64 PNG data URLs.
class OpenAICompatibleProvider final : public ChatProvider {
public:
    /// Reads the credential from the environment variable named in options;
    /// throws ConfigError when it is unset or empty.
    explicit OpenAICompatibleProvider(OpenAIOptions options, std::unique_ptr<HttpTransport> transport = nullptr,
                                      Sleeper sleep = {});

    ChatResponse complete(const ChatRequest& request) override;

    static std::string build_body(const ChatRequest& request, std::optional<int> max_tokens);
    /// Throws ProviderError{permanent} when the body is not a completion.
    static ChatResponse parse_body(const std::string& body);
    /// Maps a transport result to a ProviderError kind; nullopt for 2xx.
    static std::optional<ProviderError::Kind> classify(const HttpResult& result);

private:
    OpenAIOptions options_;
    std::string api_key_;
    std::unique_ptr<HttpTransport> transport_;
    Sleeper sleep_;
};

}  // namespace mobench::providers
