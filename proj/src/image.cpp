#include "camgen/image.hpp"
#include "camgen/errors.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace camgen {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw DataError("cannot open " + path.string());
    return f;
}

std::uint8_t to_byte(float v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

// Writes 8-bit rows of `channels` interleaved samples (1 = gray, 3 = RGB), or
// packed 1-bit gray when bit_depth == 1.
void write_rows(const std::filesystem::path& path, int width, int height, int color_type, int bit_depth,
                const std::vector<std::vector<png_byte>>& rows) {
    FilePtr file = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw DataError("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("failed writing " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (const auto& row : rows) png_write_row(png, row.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// Decodes any PNG into 8-bit RGB rows.
std::vector<std::vector<png_byte>> read_rgb_rows(const std::filesystem::path& path, int& width, int& height) {
    FilePtr file = open_file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("failed reading " + path.string());
    }
    png_init_io(png, file.get());
    png_read_info(png, info);
    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    const int color_type = png_get_color_type(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    std::vector<std::vector<png_byte>> rows(height, std::vector<png_byte>(png_get_rowbytes(png, info)));
    std::vector<png_bytep> ptrs(height);
    for (int y = 0; y < height; ++y) ptrs[y] = rows[y].data();
    png_read_image(png, ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return rows;
}

} // namespace

double Mask::ratio() const {
    if (bits.empty()) return 0.0;
    size_t n = 0;
    for (auto b : bits) n += b != 0;
    return static_cast<double>(n) / static_cast<double>(bits.size());
}

float quantize_unit(float v) { return static_cast<float>(to_byte(v)) / 255.0f; }

void write_png(const std::filesystem::path& path, const Image& image) {
    std::vector<std::vector<png_byte>> rows(image.height, std::vector<png_byte>(static_cast<size_t>(image.width) * 3));
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            for (int c = 0; c < 3; ++c) rows[y][x * 3 + c] = to_byte(image.at(y, x, c));
    write_rows(path, image.width, image.height, PNG_COLOR_TYPE_RGB, 8, rows);
}

Image read_png(const std::filesystem::path& path) {
    int width = 0, height = 0;
    const auto rows = read_rgb_rows(path, width, height);
    Image image(height, width);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c) image.at(y, x, c) = static_cast<float>(rows[y][x * 3 + c]) / 255.0f;
    return image;
}

void write_mask_png(const std::filesystem::path& path, const Mask& mask) {
    std::vector<std::vector<png_byte>> rows(mask.height, std::vector<png_byte>((mask.width + 7) / 8, 0));
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(y, x)) rows[y][x / 8] |= static_cast<png_byte>(0x80u >> (x % 8));
    write_rows(path, mask.width, mask.height, PNG_COLOR_TYPE_GRAY, 1, rows);
}

Mask read_mask_png(const std::filesystem::path& path) {
    int width = 0, height = 0;
    const auto rows = read_rgb_rows(path, width, height);
    Mask mask(height, width);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) mask.set(y, x, rows[y][x * 3] >= 128);
    return mask;
}

Image hstack(const std::vector<Image>& images) {
    if (images.empty()) return {};
    const int h = images.front().height;
    int w = 0;
    for (const auto& im : images) {
        if (im.height != h) throw std::invalid_argument("hstack: heights differ");
        w += im.width;
    }
    Image out(h, w);
    int x0 = 0;
    for (const auto& im : images) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < im.width; ++x)
                for (int c = 0; c < 3; ++c) out.at(y, x0 + x, c) = im.at(y, x, c);
        x0 += im.width;
    }
    return out;
}

} // namespace camgen
