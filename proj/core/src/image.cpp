#include "factguard/image.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <png.h>

#include "factguard/error.hpp"

namespace factguard {
namespace fs = std::filesystem;

Image::Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

namespace {

std::vector<std::uint8_t> slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("DECODE_FAILURE", "cannot open image " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Image decode_ppm(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
    std::size_t pos = 2;
    const auto fail = [&](const char* why) { return Error("DECODE_FAILURE", path.string() + ": " + why); };
    const auto next_int = [&]() -> long {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        long v = 0;
        std::size_t digits = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos]) && digits < 9) {
            v = v * 10 + (bytes[pos++] - '0');
            ++digits;
        }
        if (digits == 0) throw fail("malformed PPM header");
        return v;
    };
    const long w = next_int();
    const long h = next_int();
    const long maxval = next_int();
    if (w <= 0 || h <= 0 || w > 16384 || h > 16384) throw fail("unsupported PPM dimensions");
    if (maxval != 255) throw fail("only 8-bit PPM is supported");
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw fail("malformed PPM header");
    ++pos;
    Image img(static_cast<int>(w), static_cast<int>(h));
    if (bytes.size() - pos < img.rgb.size()) throw fail("truncated PPM data");
    std::memcpy(img.rgb.data(), bytes.data() + pos, img.rgb.size());
    return img;
}

Image decode_png(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()))
        throw Error("DECODE_FAILURE", path.string() + ": " + png.message);
    png.format = PNG_FORMAT_RGB;
    Image img(static_cast<int>(png.width), static_cast<int>(png.height));
    if (!png_image_finish_read(&png, nullptr, img.rgb.data(), 0, nullptr)) {
        const std::string msg = png.message;
        png_image_free(&png);
        throw Error("DECODE_FAILURE", path.string() + ": " + msg);
    }
    return img;
}

} // namespace

Image read_image(const fs::path& path) {
    const auto bytes = slurp(path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes, path);
    static constexpr std::uint8_t kPngMagic[] = {0x89, 'P', 'N', 'G'};
    if (bytes.size() >= 4 && std::equal(std::begin(kPngMagic), std::end(kPngMagic), bytes.begin()))
        return decode_png(bytes, path);
    throw Error("DECODE_FAILURE", path.string() + ": unrecognized image format");
}

void write_image(const Image& image, const fs::path& path) {
    if (image.empty()) throw Error("IO", "refusing to write an empty image to " + path.string());
    const std::string ext = path.extension().string();
    if (ext == ".ppm") {
        std::ofstream out(path, std::ios::binary);
        out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
        out.write(reinterpret_cast<const char*>(image.rgb.data()), static_cast<std::streamsize>(image.rgb.size()));
        if (!out) throw Error("IO", "cannot write " + path.string());
        return;
    }
    if (ext != ".png") throw Error("IO", "unsupported image extension '" + ext + "'");
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    png.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.c_str(), 0, image.rgb.data(), 0, nullptr))
        throw Error("IO", "cannot write " + path.string() + ": " + png.message);
}

Image resize_area(const Image& src, int width, int height) {
    if (src.empty() || width <= 0 || height <= 0) throw Error("BAD_SIZE", "cannot resize to an empty image");
    if (width == src.width && height == src.height) return src;
    Image dst(width, height);
    const double sx = static_cast<double>(src.width) / width;
    const double sy = static_cast<double>(src.height) / height;
    for (int y = 0; y < height; ++y) {
        const double y0 = y * sy;
        const double y1 = std::min<double>((y + 1) * sy, src.height);
        for (int x = 0; x < width; ++x) {
            const double x0 = x * sx;
            const double x1 = std::min<double>((x + 1) * sx, src.width);
            double acc[3] = {0, 0, 0};
            double area = 0.0;
            for (int yy = static_cast<int>(y0); yy < y1 && yy < src.height; ++yy) {
                const double wy = std::min<double>(yy + 1, y1) - std::max<double>(yy, y0);
                if (wy <= 0) continue;
                for (int xx = static_cast<int>(x0); xx < x1 && xx < src.width; ++xx) {
                    const double wx = std::min<double>(xx + 1, x1) - std::max<double>(xx, x0);
                    if (wx <= 0) continue;
                    const double w = wx * wy;
                    const std::uint8_t* p = src.pixel(xx, yy);
                    acc[0] += w * p[0];
                    acc[1] += w * p[1];
                    acc[2] += w * p[2];
                    area += w;
                }
            }
            std::uint8_t* q = dst.pixel(x, y);
            for (int c = 0; c < 3; ++c)
                q[c] = static_cast<std::uint8_t>(std::clamp(std::lround(acc[c] / area), 0L, 255L));
        }
    }
    return dst;
}

std::array<int, 2> fit_within(int width, int height, int cap) {
    if (cap <= 0) throw Error("BAD_SIZE", "resolution cap must be positive");
    const int longest = std::max(width, height);
    if (longest <= cap) return {width, height};
    const double scale = static_cast<double>(cap) / longest;
    int w = std::max(1, static_cast<int>(std::lround(width * scale)));
    int h = std::max(1, static_cast<int>(std::lround(height * scale)));
    if (width >= height) w = cap;
    else h = cap;
    return {w, h};
}

Image compose_grid_2x2(const std::array<Image, 4>& frames) {
    const int cw = frames[0].width;
    const int ch = frames[0].height;
    if (frames[0].empty()) throw Error("DECODE_FAILURE", "empty frame in grid");
    Image grid(cw * 2, ch * 2);
    for (int i = 0; i < 4; ++i) {
        const Image cell = resize_area(frames[i], cw, ch);
        const int ox = (i % 2) * cw;
        const int oy = (i / 2) * ch;
        for (int y = 0; y < ch; ++y)
            std::memcpy(grid.pixel(ox, oy + y), cell.pixel(0, y), static_cast<std::size_t>(cw) * 3);
    }
    return grid;
}

} // namespace factguard
