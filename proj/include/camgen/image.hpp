#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace camgen {

/// Interleaved RGB image, values nominally in [0,1], row-major (y, x, channel).
struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> rgb;

    Image() = default;
    Image(int h, int w, float fill = 0.0f)
        : height(h), width(w), rgb(static_cast<size_t>(h) * w * 3, fill) {}

    size_t pixel_count() const { return static_cast<size_t>(height) * width; }
    size_t index(int y, int x) const { return (static_cast<size_t>(y) * width + x) * 3; }
    float& at(int y, int x, int c) { return rgb[index(y, x) + c]; }
    float at(int y, int x, int c) const { return rgb[index(y, x) + c]; }

    bool operator==(const Image&) const = default;
};

/// Camera-frame z depth per pixel. Non-positive values mark invalid pixels.
struct DepthMap {
    int height = 0;
    int width = 0;
    std::vector<float> depth;

    DepthMap() = default;
    DepthMap(int h, int w, float fill = -1.0f)
        : height(h), width(w), depth(static_cast<size_t>(h) * w, fill) {}

    float& at(int y, int x) { return depth[static_cast<size_t>(y) * width + x]; }
    float at(int y, int x) const { return depth[static_cast<size_t>(y) * width + x]; }

    bool operator==(const DepthMap&) const = default;
};

/// Boolean per-pixel mask; true (1) marks a hole.
struct Mask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> bits;

    Mask() = default;
    Mask(int h, int w, bool fill = false)
        : height(h), width(w), bits(static_cast<size_t>(h) * w, fill ? 1 : 0) {}

    bool at(int y, int x) const { return bits[static_cast<size_t>(y) * width + x] != 0; }
    void set(int y, int x, bool v) { bits[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }

    /// Fraction of set pixels.
    double ratio() const;

    bool operator==(const Mask&) const = default;
};

/// Rounds to the nearest 8-bit level; matches what PNG storage preserves.
float quantize_unit(float v);

void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);
/// One-bit grayscale PNG, white = hole.
void write_mask_png(const std::filesystem::path& path, const Mask& mask);
Mask read_mask_png(const std::filesystem::path& path);

/// Horizontal concatenation; all images must share a height.
Image hstack(const std::vector<Image>& images);

} // namespace camgen
