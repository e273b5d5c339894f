#include <doctest.h>

#include <cstdlib>
#include <deque>
#include <random>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "mobench/providers/chat.hpp"
#include "mobench/providers/cost.hpp"
#include "mobench/providers/ocr.hpp"
#include "mobench/providers/openai.hpp"
#include "mobench/util/encoding.hpp"
#include "mobench/util/fs.hpp"
#include "mobench/util/text.hpp"

using namespace mobench;
using namespace mobench::providers;
using json = nlohmann::json;
using std::chrono::milliseconds;

namespace {

ChatRequest text_request(const std::string& text, Purpose purpose = Purpose::other) {
    ChatRequest r;
    r.model_id = "m";
    r.purpose = purpose;
    r.messages.push_back({Role::user, {TextPart{text}}});
    return r;
}

struct FakeTransport final : HttpTransport {
    std::deque<HttpResult> replies;
    std::vector<std::string> bodies;
    std::vector<std::map<std::string, std::string>> headers;
    std::vector<std::string> urls;

    HttpResult post(const std::string& url, const std::string& body, const std::map<std::string, std::string>& h,
                    milliseconds) override {
        urls.push_back(url);
        bodies.push_back(body);
        headers.push_back(h);
        auto r = replies.front();
        replies.pop_front();
        return r;
    }
};

std::string completion(const std::string& text, long p = 10, long c = 2) {
    return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}},
                {"usage", {{"prompt_tokens", p}, {"completion_tokens", c}}}}
        .dump();
}

struct EnvGuard {
    explicit EnvGuard(const char* value) {
        if (value) {
            ::setenv("HARNESS_API_KEY", value, 1);
        } else {
            ::unsetenv("HARNESS_API_KEY");
        }
    }
    ~EnvGuard() { ::unsetenv("HARNESS_API_KEY"); }
};

}  // namespace

TEST_CASE("retry delays double up to the cap") {
    RetryPolicy p;
    p.base_delay = milliseconds(500);
    p.max_delay = milliseconds(8000);
    for (int attempt = 1; attempt <= 12; ++attempt) {
        long expected = 500;
        for (int i = 1; i < attempt; ++i) expected = std::min(expected * 2, 8000L);
        CHECK(p.delay_after(attempt).count() == expected);
    }
}

TEST_CASE("with_retry retries only retryable errors") {
    RetryPolicy p;
    p.max_attempts = 3;
    std::vector<milliseconds> slept;
    const Sleeper sleep = [&](milliseconds d) { slept.push_back(d); };

    int calls = 0;
    const auto flaky = [&] {
        if (++calls < 3) throw ProviderError(ProviderError::Kind::transient, "502");
        return ChatResponse{"ok", {}, 0};
    };
    const auto r = with_retry(flaky, p, sleep);
    CHECK(r.text == "ok");
    CHECK(r.attempts == 3);
    CHECK(slept == std::vector<milliseconds>{milliseconds(500), milliseconds(1000)});

    calls = 0;
    slept.clear();
    const auto always = [&]() -> ChatResponse {
        ++calls;
        throw ProviderError(ProviderError::Kind::rate_limited, "429");
    };
    CHECK_THROWS_AS(with_retry(always, p, sleep), ProviderError);
    CHECK(calls == 3);

    calls = 0;
    const auto auth = [&]() -> ChatResponse {
        ++calls;
        throw ProviderError(ProviderError::Kind::auth, "401");
    };
    CHECK_THROWS_AS(with_retry(auth, p, sleep), ProviderError);
    CHECK(calls == 1);
}

TEST_CASE("rate limiter spaces requests") {
    std::vector<milliseconds> slept;
    RateLimiter limiter(60.0, [&](milliseconds d) { slept.push_back(d); });
    limiter.acquire();
    limiter.acquire();
    limiter.acquire();
    REQUIRE(slept.size() == 2);
    CHECK(slept[0].count() > 900);
    CHECK(slept[0].count() <= 1000);
    CHECK(slept[1].count() > 1900);
    CHECK(slept[1].count() <= 2000);

    std::vector<milliseconds> none;
    RateLimiter unlimited(0.0, [&](milliseconds d) { none.push_back(d); });
    for (int i = 0; i < 5; ++i) unlimited.acquire();
    CHECK(none.empty());
}

TEST_CASE("request digest depends on content, not purpose") {
    auto a = text_request("hello", Purpose::judge);
    auto b = text_request("hello", Purpose::split);
    CHECK(request_digest(a) == request_digest(b));
    CHECK(request_digest(a).size() == 64);
    b.temperature = 0.5;
    CHECK(request_digest(a) != request_digest(b));
    b = a;
    b.messages[0].parts.push_back(ImagePart{testing::solid_png(1)});
    auto c = a;
    c.messages[0].parts.push_back(ImagePart{testing::solid_png(2)});
    CHECK(request_digest(b) != request_digest(c));
    CHECK(request_digest(b) != request_digest(a));
    b.messages[0].role = Role::system;
    CHECK(request_digest(b) != request_digest(c));
}

TEST_CASE("mock provider: responders, defaults and call counts") {
    MockChatProvider mock;
    CHECK(mock.complete(text_request("x", Purpose::judge)).text == "Result: 1");
    CHECK(mock.complete(text_request("x")).text == "OK");
    mock.on(Purpose::judge, [](const ChatRequest&) { return std::string("Result: 0"); });
    CHECK(mock.complete(text_request("x", Purpose::judge)).text == "Result: 0");
    CHECK(mock.calls() == 3);
    CHECK(mock.calls(Purpose::judge) == 2);
    CHECK(mock.requests().back().purpose == Purpose::judge);

    const auto r = mock.complete(text_request("abcdefgh"));
    CHECK(r.usage == Usage{2, 1});
}

TEST_CASE("mock split reply is a contiguous even split") {
    std::mt19937 rng(41);
    for (int i = 0; i < 100; ++i) {
        const int n = testing::uniform(rng, 1, 12);
        const int k = testing::uniform(rng, 1, 4);
        std::vector<std::string> apps;
        for (int a = 0; a < k; ++a) apps.push_back("App" + std::to_string(a));
        ChatRequest req = text_request("Here is the app list:\n" + json(apps).dump() + "\nrest", Purpose::split);
        for (int s = 0; s < n; ++s) req.messages[0].parts.push_back(ImagePart{"png"});
        const auto reply = MockChatProvider::default_reply(req);
        const auto doc = json::parse(reply.substr(reply.find('{')));
        int next = 1;
        for (const auto& app : apps) {
            const int start = doc.at(app).at("start screen");
            const int end = doc.at(app).at("end screen");
            if (start == -1) {
                CHECK(end == -1);
                continue;
            }
            CHECK(start == next);
            CHECK(end >= start);
            next = end + 1;
        }
        CHECK(next == n + 1);
    }
}

TEST_CASE("cassette record and replay") {
    testing::TempDir tmp;
    const auto path = (tmp / "cassette.json").string();
    auto inner = std::make_shared<MockChatProvider>();
    inner->on(Purpose::other, [](const ChatRequest& r) { return "echo " + r.all_text(); });
    RecordingProvider recorder(inner, path);
    recorder.complete(text_request("one"));
    recorder.complete(text_request("two"));
    CHECK(load_cassette(path).size() == 2);

    MockChatProvider replay(path);
    CHECK(replay.complete(text_request("two")).text == "echo two");
    CHECK(replay.complete(text_request("three")).text == "OK");

    fs::write_file(tmp / "bad.json", R"({"format": "other"})");
    CHECK_THROWS_AS(load_cassette((tmp / "bad.json").string()), ParseError);
}

TEST_CASE("cost table") {
    CostTable t;
    t.set("gpt", Rate{0.01, 0.03});
    CHECK(t.cost(Usage{2000, 1000}, "gpt") == doctest::Approx(0.05));
    CHECK_THROWS_AS(t.cost(Usage{}, "other"), ConfigError);
    CHECK_THROWS_AS(t.set("neg", Rate{-1, 0}), ValidationError);
    const auto back = CostTable::from_json(t.to_json());
    CHECK(back.rates().at("gpt").usd_per_1k_completion == 0.03);
    CHECK_THROWS_AS(CostTable::from_json(json{{"m", {{"prompt_per_1k", 1}, {"extra", 2}}}}), ConfigError);
    CHECK_THROWS_AS(CostTable::from_json(json{{"m", {{"prompt_per_1k", 1}}}}), ConfigError);

    std::mt19937 rng(43);
    for (int i = 0; i < 200; ++i) {
        const long p = testing::uniform(rng, 0, 100000);
        const long c = testing::uniform(rng, 0, 5000);
        const int rp = testing::uniform(rng, 0, 100);
        const int rc = testing::uniform(rng, 0, 100);
        CostTable table;
        table.set("m", Rate{rp / 1000.0, rc / 1000.0});
        const double oracle = (static_cast<double>(p) * rp + static_cast<double>(c) * rc) / 1e6;
        CHECK(table.cost(Usage{p, c}, "m") == doctest::Approx(oracle).epsilon(1e-12));
    }
}

TEST_CASE("openai provider requires the key from the environment") {
    EnvGuard env(nullptr);
    CHECK_THROWS_AS(OpenAICompatibleProvider(OpenAIOptions{}, std::make_unique<FakeTransport>()), ConfigError);
}

TEST_CASE("openai provider wire format and retries") {
    EnvGuard env("sk-test");
    auto transport = std::make_unique<FakeTransport>();
    auto* fake = transport.get();
    fake->replies = {{503, "busy", {}}, {0, {}, "timeout"}, {200, completion("Result: 1"), {}}};
    OpenAIOptions options;
    options.endpoint = "http://judge.local/v1/";
    options.max_tokens = 64;
    std::vector<milliseconds> slept;
    OpenAICompatibleProvider provider(options, std::move(transport), [&](milliseconds d) { slept.push_back(d); });

    ChatRequest req = text_request("judge this", Purpose::judge);
    req.model_id = "gpt-4o";
    req.messages[0].parts.push_back(ImagePart{"PNGDATA"});
    const auto r = provider.complete(req);
    CHECK(r.text == "Result: 1");
    CHECK(r.attempts == 3);
    CHECK(r.usage == Usage{10, 2});
    CHECK(slept.size() == 2);
    CHECK(fake->urls[0] == "http://judge.local/v1/chat/completions");
    CHECK(fake->headers[0].at("Authorization") == "Bearer sk-test");

    const auto body = json::parse(fake->bodies[0]);
    CHECK(body["model"] == "gpt-4o");
    CHECK(body["max_tokens"] == 64);
    CHECK(body["temperature"] == 0.0);
    CHECK(body["messages"][0]["role"] == "user");
    CHECK(body["messages"][0]["content"][0] == json{{"type", "text"}, {"text", "judge this"}});
    CHECK(body["messages"][0]["content"][1]["image_url"]["url"] == "data:image/png;base64," + base64_encode("PNGDATA"));
    CHECK(fake->bodies[0].find("sk-test") == std::string::npos);
}

TEST_CASE("openai provider error classification") {
    using K = ProviderError::Kind;
    CHECK_FALSE(OpenAICompatibleProvider::classify({200, "", ""}).has_value());
    CHECK(OpenAICompatibleProvider::classify({0, "", "refused"}) == K::transient);
    CHECK(OpenAICompatibleProvider::classify({401, "", ""}) == K::auth);
    CHECK(OpenAICompatibleProvider::classify({403, "", ""}) == K::auth);
    CHECK(OpenAICompatibleProvider::classify({429, "", ""}) == K::rate_limited);
    CHECK(OpenAICompatibleProvider::classify({500, "", ""}) == K::transient);
    CHECK(OpenAICompatibleProvider::classify({400, "", ""}) == K::permanent);

    EnvGuard env("sk-test");
    auto transport = std::make_unique<FakeTransport>();
    transport->replies = {{401, "bad key", {}}};
    OpenAICompatibleProvider provider(OpenAIOptions{}, std::move(transport), [](milliseconds) {});
    try {
        provider.complete(text_request("x"));
        FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
        CHECK(e.kind() == K::auth);
    }
    CHECK_THROWS_AS(OpenAICompatibleProvider::parse_body("{}"), ProviderError);
    CHECK(OpenAICompatibleProvider::parse_body(R"({"choices":[{"message":{"content":null}}]})").text.empty());
}

TEST_CASE("ocr boxes parse, sort and mock lookup") {
    auto boxes = parse_ocr_boxes(R"([{"text":"b","bbox":[50,10,5,5]},{"text":"a","bbox":[0,10,5,5],"confidence":0.5},
                                     {"text":"top","bbox":[90,0,5,5]}])");
    REQUIRE(boxes.size() == 3);
    CHECK(boxes[1].confidence == 0.5);
    sort_reading_order(boxes);
    CHECK(boxes[0].text == "top");
    CHECK(boxes[1].text == "a");
    CHECK(boxes[2].text == "b");
    CHECK_THROWS_AS(parse_ocr_boxes(R"([{"text":"x","bbox":[1,2,3]}])"), ParseError);
    CHECK_THROWS_AS(parse_ocr_boxes("nope"), ParseError);

    testing::TempDir tmp;
    const auto png = testing::solid_png(7);
    MockOcr ocr;
    ocr.add(sha256_hex(png), boxes);
    ocr.save((tmp / "ocr.json").string());
    auto loaded = MockOcr::load((tmp / "ocr.json").string());
    CHECK(loaded.recognize(png) == boxes);
    CHECK(loaded.recognize(testing::solid_png(8)).empty());
    CHECK(loaded.calls() == 2);
}

TEST_CASE("subprocess ocr") {
    SubprocessOcr good({"/bin/sh", "-c", R"(cat > /dev/null; echo '[{"text":"Hi","bbox":[1,2,3,4]}]')"});
    const auto boxes = good.recognize("png");
    REQUIRE(boxes.size() == 1);
    CHECK(boxes[0] == OcrBox{"Hi", 1, 2, 3, 4, 1.0});
    SubprocessOcr failing({"/bin/sh", "-c", "cat > /dev/null; exit 4"});
    CHECK_THROWS_AS(failing.recognize("png"), OcrUnavailable);
    SubprocessOcr garbage({"/bin/sh", "-c", "cat > /dev/null; echo nope"});
    CHECK_THROWS_AS(garbage.recognize("png"), OcrUnavailable);
    CHECK_THROWS_AS(SubprocessOcr({}), ConfigError);
}
