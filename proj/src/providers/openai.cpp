#include "mobench/providers/openai.hpp"

#include <cstdlib>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mobench/util/encoding.hpp"

namespace mobench::providers {

using json = nlohmann::json;

namespace {

class HttplibTransport final : public HttpTransport {
public:
    HttpResult post(const std::string& url, const std::string& body, const std::map<std::string, std::string>& headers,
                    std::chrono::milliseconds timeout) override {
        const auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos) return {0, {}, "invalid URL: " + url};
        const auto path_start = url.find('/', scheme_end + 3);
        const auto origin = url.substr(0, path_start);
        const auto path = path_start == std::string::npos ? std::string("/") : url.substr(path_start);

        httplib::Client client(origin);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout).count();
        client.set_connection_timeout(std::chrono::seconds(std::min<long long>(secs, 30)));
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        httplib::Headers h;
        for (const auto& [k, v] : headers) h.emplace(k, v);
        auto res = client.Post(path, h, body, "application/json");
        if (!res) return {0, {}, httplib::to_string(res.error())};
        return {res->status, res->body, {}};
    }
};

}  // namespace

std::unique_ptr<HttpTransport> make_http_transport() { return std::make_unique<HttplibTransport>(); }

OpenAICompatibleProvider::OpenAICompatibleProvider(OpenAIOptions options, std::unique_ptr<HttpTransport> transport,
                                                   Sleeper sleep)
    : options_(std::move(options)),
      transport_(transport ? std::move(transport) : make_http_transport()),
      sleep_(std::move(sleep)) {
    const char* key = std::getenv(options_.api_key_env.c_str());
    if (!key || !*key) throw ConfigError("environment variable " + options_.api_key_env + " is not set");
    api_key_ = key;
    while (!options_.endpoint.empty() && options_.endpoint.back() == '/') options_.endpoint.pop_back();
}

std::string OpenAICompatibleProvider::build_body(const ChatRequest& request, std::optional<int> max_tokens) {
    json messages = json::array();
    for (const auto& m : request.messages) {
        json content = json::array();
        for (const auto& p : m.parts) {
            if (const auto* t = std::get_if<TextPart>(&p)) {
                content.push_back({{"type", "text"}, {"text", t->text}});
            } else {
                const auto& png = std::get<ImagePart>(p).png;
                content.push_back(
                    {{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + base64_encode(png)}}}});
            }
        }
        messages.push_back({{"role", to_string(m.role)}, {"content", std::move(content)}});
    }
    json body{{"model", request.model_id}, {"messages", std::move(messages)}, {"temperature", request.temperature}};
    if (max_tokens) body["max_tokens"] = *max_tokens;
    return body.dump();
}

ChatResponse OpenAICompatibleProvider::parse_body(const std::string& body) {
    try {
        const auto doc = json::parse(body);
        ChatResponse r;
        const auto& content = doc.at("choices").at(0).at("message").at("content");
        r.text = content.is_null() ? std::string() : content.get<std::string>();
        if (doc.contains("usage") && doc.at("usage").is_object()) {
            r.usage.prompt_tokens = doc.at("usage").value("prompt_tokens", 0L);
            r.usage.completion_tokens = doc.at("usage").value("completion_tokens", 0L);
        }
        return r;
    } catch (const json::exception& e) {
        throw ProviderError(ProviderError::Kind::permanent, std::string("unexpected completion body: ") + e.what());
    }
}

std::optional<ProviderError::Kind> OpenAICompatibleProvider::classify(const HttpResult& result) {
    const int s = result.status;
    if (s >= 200 && s < 300) return std::nullopt;
    if (s == 0) return ProviderError::Kind::transient;
    if (s == 401 || s == 403) return ProviderError::Kind::auth;
    if (s == 429) return ProviderError::Kind::rate_limited;
    if (s >= 500) return ProviderError::Kind::transient;
    return ProviderError::Kind::permanent;
}

ChatResponse OpenAICompatibleProvider::complete(const ChatRequest& request) {
    const auto body = build_body(request, options_.max_tokens);
    const std::map<std::string, std::string> headers{{"Authorization", "Bearer " + api_key_}};
    const auto url = options_.endpoint + "/chat/completions";
    return with_retry(
        [&] {
            const auto result = transport_->post(url, body, headers, options_.timeout);
            if (const auto kind = classify(result)) {
                const auto detail = result.status == 0 ? result.error : result.body.substr(0, 300);
                throw ProviderError(*kind, "chat completion failed (HTTP " + std::to_string(result.status) + "): " + detail);
            }
            return parse_body(result.body);
        },
        options_.retry, sleep_);
}

}  // namespace mobench::providers
