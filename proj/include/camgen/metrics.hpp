#pragma once

#include "camgen/image.hpp"

namespace camgen {

/// Reported in place of +inf for identical images.
inline constexpr double kPsnrCap = 100.0;

/// 10 log10(1 / MSE) over all channels, dynamic range 1.
double psnr(const Image& a, const Image& b);

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
};

/// Mean local SSIM over fully contained Gaussian windows, per channel, then
/// averaged over channels.
double ssim(const Image& a, const Image& b, const SsimParams& params = {});

/// Clamps every value into [0, 1].
Image clamp_unit(Image image);

} // namespace camgen
