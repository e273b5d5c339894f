#include "mobench/providers/ocr.hpp"

#include <algorithm>
#include <tuple>

#include <nlohmann/json.hpp>

#include "mobench/util/encoding.hpp"
#include "mobench/util/fs.hpp"
#include "mobench/util/subprocess.hpp"
#include "mobench/util/text.hpp"

namespace mobench::providers {

using json = nlohmann::json;

namespace {

json box_to_json(const OcrBox& b) {
    return {{"text", b.text}, {"bbox", {b.x, b.y, b.w, b.h}}, {"confidence", b.confidence}};
}

OcrBox box_from_json(const json& j) {
    OcrBox b;
    b.text = j.at("text").get<std::string>();
    const auto bbox = j.at("bbox").get<std::vector<int>>();
    if (bbox.size() != 4) throw ParseError("OCR bbox must be [x, y, w, h]");
    b.x = bbox[0];
    b.y = bbox[1];
    b.w = bbox[2];
    b.h = bbox[3];
    b.confidence = j.value("confidence", 1.0);
    return b;
}

}  // namespace

void sort_reading_order(std::vector<OcrBox>& boxes) {
    std::sort(boxes.begin(), boxes.end(), [](const OcrBox& a, const OcrBox& b) {
        return std::tie(a.y, a.x, a.text, a.w, a.h) < std::tie(b.y, b.x, b.text, b.w, b.h);
    });
}

std::vector<OcrBox> parse_ocr_boxes(std::string_view json_text) {
    try {
        std::vector<OcrBox> boxes;
        for (const auto& j : json::parse(json_text)) boxes.push_back(box_from_json(j));
        return boxes;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed OCR output: ") + e.what());
    }
}

SubprocessOcr::SubprocessOcr(std::vector<std::string> argv, std::chrono::milliseconds timeout)
    : argv_(std::move(argv)), timeout_(timeout) {
    if (argv_.empty()) throw ConfigError("OCR command is empty");
}

std::vector<OcrBox> SubprocessOcr::recognize(const std::string& png) {
    CommandResult r;
    try {
        r = run_command(argv_, png, timeout_);
    } catch (const Error& e) {
        throw OcrUnavailable(e.what());
    }
    if (r.timed_out) throw OcrUnavailable("OCR command timed out");
    if (r.exit_code != 0) throw OcrUnavailable("OCR command failed: " + text::trim(r.err));
    std::vector<OcrBox> boxes;
    try {
        boxes = parse_ocr_boxes(r.out);
    } catch (const ParseError& e) {
        throw OcrUnavailable(e.what());
    }
    sort_reading_order(boxes);
    return boxes;
}

MockOcr MockOcr::load(const std::string& path) {
    std::map<std::string, std::vector<OcrBox>> fixture;
    try {
        const auto doc = json::parse(fs::read_file(path));
        for (const auto& [digest, list] : doc.items()) {
            auto& boxes = fixture[digest];
            for (const auto& j : list) boxes.push_back(box_from_json(j));
        }
    } catch (const json::exception& e) {
        throw ParseError("malformed OCR fixture " + path + ": " + e.what());
    }
    return MockOcr(std::move(fixture));
}

void MockOcr::save(const std::string& path) const {
    json doc = json::object();
    for (const auto& [digest, boxes] : fixture_) {
        json list = json::array();
        for (const auto& b : boxes) list.push_back(box_to_json(b));
        doc[digest] = std::move(list);
    }
    fs::write_file_atomic(path, doc.dump(2) + "\n");
}

std::vector<OcrBox> MockOcr::recognize(const std::string& png) {
    ++calls_;
    const auto it = fixture_.find(sha256_hex(png));
    if (it == fixture_.end()) return {};
    auto boxes = it->second;
    sort_reading_order(boxes);
    return boxes;
}

}  // namespace mobench::providers
