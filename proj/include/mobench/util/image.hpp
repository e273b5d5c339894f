#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mobench {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kBlack{0, 0, 0};
inline constexpr Rgb kRed{255, 0, 0};
inline constexpr Rgb kBlue{0, 0, 255};

/// 8-bit RGB raster, row-major.
class Image {
public:
    Image() = default;
    Image(int width, int height, Rgb fill = kWhite);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return width_ == 0 || height_ == 0; }

    Rgb at(int x, int y) const;
    void set(int x, int y, Rgb c);
    bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    const std::vector<std::uint8_t>& pixels() const noexcept { return pixels_; }
    std::vector<std::uint8_t>& pixels() noexcept { return pixels_; }

    friend bool operator==(const Image&, const Image&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

/// Throws ParseError when `png` is not a decodable image.
Image decode_png(std::string_view png);
std::string encode_png(const Image& image);

/// Reads width/height from the IHDR chunk without decoding pixels.
std::pair<int, int> png_dimensions(std::string_view png);

/// Area-averaged downscale so that max(width, height) <= max_edge. Images that
/// already fit are returned unchanged.
Image downscale_to_max_edge(const Image& image, int max_edge);

/// Paints every pixel whose centre lies within `radius` of (cx, cy):
/// (x-cx)^2 + (y-cy)^2 <= radius^2. Clipped to the image.
void fill_disc(Image& image, int cx, int cy, int radius, Rgb color);

void fill_rect(Image& image, int x, int y, int w, int h, Rgb color);

/// Hershey simplex glyphs, no anti-aliasing. Non-ASCII code points draw as '?'.
void draw_text(Image& image, std::string_view utf8, int x, int baseline_y, double scale, Rgb color,
               int thickness);

/// Pixel width of `utf8` as drawn by draw_text.
int text_width(std::string_view utf8, double scale, int thickness);
int text_height(double scale, int thickness);

/// Greedy word wrap so that every line fits in `max_width` pixels.
std::vector<std::string> wrap_text(std::string_view utf8, int max_width, double scale, int thickness);

/// Top image above bottom image; widths must match.
Image stack_vertical(const Image& top, const Image& bottom);

}  // namespace mobench
