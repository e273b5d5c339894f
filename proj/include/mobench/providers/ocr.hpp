#pragma once

#include <atomic>
#include <chrono>
#include <map>
#include <string>
#include <vector>

#include "mobench/util/error.hpp"

namespace mobench::providers {

struct OcrBox {
    std::string text;
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;
    double confidence = 1.0;
    friend bool operator==(const OcrBox&, const OcrBox&) = default;
};

/// The OCR engine could not be reached or did not answer.
class OcrUnavailable : public Error {
public:
    using Error::Error;
};

/// Sorts top-to-bottom, then left-to-right by box origin. Ties on the origin
/// fall back to text, width and height so the order is total.
void sort_reading_order(std::vector<OcrBox>& boxes);

/// Boxes are returned in reading order. Safe for concurrent use.
class OcrEngine {
public:
    virtual ~OcrEngine() = default;
    virtual std::vector<OcrBox> recognize(const std::string& png) = 0;
};

/// Runs an external command per image: PNG bytes on stdin, a JSON array of
/// {"text", "bbox": [x, y, w, h], "confidence"} on stdout.
class SubprocessOcr final : public OcrEngine {
public:
    SubprocessOcr(std::vector<std::string> argv, std::chrono::milliseconds timeout = std::chrono::seconds(60));
    std::vector<OcrBox> recognize(const std::string& png) override;

private:
    std::vector<std::string> argv_;
    std::chrono::milliseconds timeout_;
};

/// Parses the JSON box list produced by an OCR command. Throws ParseError.
std::vector<OcrBox> parse_ocr_boxes(std::string_view json_text);

/// Fixture-backed OCR: sha256(PNG) -> boxes. Images not in the fixture read
/// as blank.
class MockOcr final : public OcrEngine {
public:
    MockOcr() = default;
    explicit MockOcr(std::map<std::string, std::vector<OcrBox>> fixture) : fixture_(std::move(fixture)) {}
    MockOcr(MockOcr&& other) noexcept : fixture_(std::move(other.fixture_)), calls_(other.calls_.load()) {}

    /// {"<sha256>": [{"text": ..., "bbox": [...]}, ...], ...}
    static MockOcr load(const std::string& path);
    void save(const std::string& path) const;

    void add(const std::string& digest, std::vector<OcrBox> boxes) { fixture_[digest] = std::move(boxes); }
    const std::map<std::string, std::vector<OcrBox>>& fixture() const noexcept { return fixture_; }
    std::vector<OcrBox> recognize(const std::string& png) override;
    int calls() const noexcept { return calls_; }

private:
    std::map<std::string, std::vector<OcrBox>> fixture_;
    std::atomic<int> calls_{0};
};

}  // namespace mobench::providers
