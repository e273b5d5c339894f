#include "mobench/util/image.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>

#include "mobench/util/error.hpp"
#include "mobench/util/text.hpp"

namespace mobench {

namespace {

constexpr int kFont = cv::FONT_HERSHEY_SIMPLEX;

cv::Mat to_bgr(const Image& image) {
    cv::Mat mat(image.height(), image.width(), CV_8UC3);
    const auto& px = image.pixels();
    for (int y = 0; y < image.height(); ++y) {
        auto* row = mat.ptr<cv::Vec3b>(y);
        for (int x = 0; x < image.width(); ++x) {
            const auto i = (static_cast<std::size_t>(y) * image.width() + x) * 3;
            row[x] = cv::Vec3b(px[i + 2], px[i + 1], px[i]);
        }
    }
    return mat;
}

Image from_bgr(const cv::Mat& mat) {
    Image image(mat.cols, mat.rows);
    auto& px = image.pixels();
    for (int y = 0; y < mat.rows; ++y) {
        const auto* row = mat.ptr<cv::Vec3b>(y);
        for (int x = 0; x < mat.cols; ++x) {
            const auto i = (static_cast<std::size_t>(y) * mat.cols + x) * 3;
            px[i] = row[x][2];
            px[i + 1] = row[x][1];
            px[i + 2] = row[x][0];
        }
    }
    return image;
}

std::string ascii_glyphs(std::string_view utf8) {
    std::string out;
    for (char32_t cp : text::decode_utf8(utf8)) {
        out.push_back(cp >= 0x20 && cp < 0x7F ? static_cast<char>(cp) : '?');
    }
    return out;
}

std::uint32_t read_be32(std::string_view s, std::size_t at) {
    return (static_cast<std::uint32_t>(static_cast<unsigned char>(s[at])) << 24) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 1])) << 16) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 2])) << 8) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 3]));
}

}  // namespace

Image::Image(int width, int height, Rgb fill) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw Error("negative image size");
    pixels_.resize(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
        pixels_[i] = fill.r;
        pixels_[i + 1] = fill.g;
        pixels_[i + 2] = fill.b;
    }
}

Rgb Image::at(int x, int y) const {
    const auto i = (static_cast<std::size_t>(y) * width_ + x) * 3;
    return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
}

void Image::set(int x, int y, Rgb c) {
    const auto i = (static_cast<std::size_t>(y) * width_ + x) * 3;
    pixels_[i] = c.r;
    pixels_[i + 1] = c.g;
    pixels_[i + 2] = c.b;
}

Image decode_png(std::string_view png) {
    if (png.empty()) throw ParseError("empty image data");
    const cv::Mat raw(1, static_cast<int>(png.size()), CV_8UC1, const_cast<char*>(png.data()));
    const cv::Mat mat = cv::imdecode(raw, cv::IMREAD_COLOR);
    if (mat.empty()) throw ParseError("image data is not a decodable PNG");
    return from_bgr(mat);
}

std::string encode_png(const Image& image) {
    std::vector<uchar> buf;
    if (!cv::imencode(".png", to_bgr(image), buf)) throw Error("PNG encoding failed");
    return std::string(buf.begin(), buf.end());
}

std::pair<int, int> png_dimensions(std::string_view png) {
    static constexpr std::string_view kSignature("\x89PNG\r\n\x1a\n", 8);
    if (png.size() < 24 || png.substr(0, 8) != kSignature || png.substr(12, 4) != "IHDR") {
        throw ParseError("not a PNG stream");
    }
    return {static_cast<int>(read_be32(png, 16)), static_cast<int>(read_be32(png, 20))};
}

Image downscale_to_max_edge(const Image& image, int max_edge) {
    const int longest = std::max(image.width(), image.height());
    if (longest <= max_edge || image.empty()) return image;
    const double scale = static_cast<double>(max_edge) / longest;
    const int w = std::max(1, static_cast<int>(std::lround(image.width() * scale)));
    const int h = std::max(1, static_cast<int>(std::lround(image.height() * scale)));
    cv::Mat out;
    cv::resize(to_bgr(image), out, cv::Size(w, h), 0, 0, cv::INTER_AREA);
    return from_bgr(out);
}

void fill_disc(Image& image, int cx, int cy, int radius, Rgb color) {
    const long r2 = static_cast<long>(radius) * radius;
    for (int y = std::max(0, cy - radius); y <= std::min(image.height() - 1, cy + radius); ++y) {
        for (int x = std::max(0, cx - radius); x <= std::min(image.width() - 1, cx + radius); ++x) {
            const long dx = x - cx;
            const long dy = y - cy;
            if (dx * dx + dy * dy <= r2) image.set(x, y, color);
        }
    }
}

void fill_rect(Image& image, int x, int y, int w, int h, Rgb color) {
    for (int yy = std::max(0, y); yy < std::min(image.height(), y + h); ++yy) {
        for (int xx = std::max(0, x); xx < std::min(image.width(), x + w); ++xx) {
            image.set(xx, yy, color);
        }
    }
}

void draw_text(Image& image, std::string_view utf8, int x, int baseline_y, double scale, Rgb color,
               int thickness) {
    cv::Mat mat = to_bgr(image);
    cv::putText(mat, ascii_glyphs(utf8), cv::Point(x, baseline_y), kFont, scale,
                cv::Scalar(color.b, color.g, color.r), thickness, cv::LINE_8);
    image = from_bgr(mat);
}

int text_width(std::string_view utf8, double scale, int thickness) {
    int baseline = 0;
    return cv::getTextSize(ascii_glyphs(utf8), kFont, scale, thickness, &baseline).width;
}

int text_height(double scale, int thickness) {
    int baseline = 0;
    const auto size = cv::getTextSize("Ag", kFont, scale, thickness, &baseline);
    return size.height + baseline;
}

std::vector<std::string> wrap_text(std::string_view utf8, int max_width, double scale, int thickness) {
    std::vector<std::string> lines;
    std::string current;
    std::size_t i = 0;
    while (i < utf8.size()) {
        while (i < utf8.size() && utf8[i] == ' ') ++i;
        const auto end = utf8.find(' ', i);
        const std::string word(utf8.substr(i, end == std::string_view::npos ? std::string_view::npos : end - i));
        i = end == std::string_view::npos ? utf8.size() : end;
        if (word.empty()) continue;
        const std::string candidate = current.empty() ? word : current + " " + word;
        if (current.empty() || text_width(candidate, scale, thickness) <= max_width) {
            current = candidate;
        } else {
            lines.push_back(current);
            current = word;
        }
    }
    if (!current.empty()) lines.push_back(current);
    return lines;
}

Image stack_vertical(const Image& top, const Image& bottom) {
    if (top.width() != bottom.width()) throw Error("stack_vertical: width mismatch");
    Image out(top.width(), top.height() + bottom.height());
    auto& px = out.pixels();
    std::copy(top.pixels().begin(), top.pixels().end(), px.begin());
    std::copy(bottom.pixels().begin(), bottom.pixels().end(),
              px.begin() + static_cast<std::ptrdiff_t>(top.pixels().size()));
    return out;
}

}  // namespace mobench
