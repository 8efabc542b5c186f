#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace factguard {

// Packed 8-bit RGB, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    Image() = default;
    Image(int w, int h);

    bool empty() const noexcept { return width <= 0 || height <= 0; }
    std::uint8_t* pixel(int x, int y) { return &rgb[(static_cast<std::size_t>(y) * width + x) * 3]; }
    const std::uint8_t* pixel(int x, int y) const { return &rgb[(static_cast<std::size_t>(y) * width + x) * 3]; }
    bool operator==(const Image&) const = default;
};

// Reads binary PPM (P6, maxval 255) or PNG, detected by magic bytes.
// Throws Error{"DECODE_FAILURE"}.
Image read_image(const std::filesystem::path& path);

// Format chosen by extension (.png or .ppm). Throws Error{"IO"}.
void write_image(const Image& image, const std::filesystem::path& path);

// Box-filter (area average) resampling; exact copy when sizes match.
Image resize_area(const Image& src, int width, int height);

// Largest size with max(w, h) <= cap that preserves the aspect ratio to
// within rounding. Returns the input size when it already fits.
std::array<int, 2> fit_within(int width, int height, int cap);

// 2 x 2 composition in row-major order: [0 1; 2 3]. Cells take the size of
// the first frame; other frames are resampled to it.
Image compose_grid_2x2(const std::array<Image, 4>& frames);

} // namespace factguard
