#include "camgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace camgen {

namespace {

void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (a.height != b.height || a.width != b.width || a.rgb.size() != b.rgb.size())
        throw std::invalid_argument(std::string(what) + ": image shapes differ");
}

std::vector<double> gaussian_window(int size, double sigma) {
    std::vector<double> w(size);
    const double c = (size - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        w[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
        sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
}

// Separable "valid" filtering of one plane; output is (h-n+1) x (w-n+1).
std::vector<double> filter_valid(const std::vector<double>& plane, int h, int w, const std::vector<double>& k) {
    const int n = static_cast<int>(k.size());
    const int oh = h - n + 1, ow = w - n + 1;
    std::vector<double> rows(static_cast<size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += k[i] * plane[static_cast<size_t>(y) * w + x + i];
            rows[static_cast<size_t>(y) * ow + x] = s;
        }
    std::vector<double> out(static_cast<size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += k[i] * rows[static_cast<size_t>(y + i) * ow + x];
            out[static_cast<size_t>(y) * ow + x] = s;
        }
    return out;
}

} // namespace

double psnr(const Image& a, const Image& b) {
    require_same_shape(a, b, "psnr");
    if (a.rgb.empty()) throw std::invalid_argument("psnr: empty image");
    double se = 0.0;
    for (size_t i = 0; i < a.rgb.size(); ++i) {
        const double d = static_cast<double>(a.rgb[i]) - static_cast<double>(b.rgb[i]);
        se += d * d;
    }
    const double mse = se / static_cast<double>(a.rgb.size());
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

double ssim(const Image& a, const Image& b, const SsimParams& params) {
    require_same_shape(a, b, "ssim");
    const int h = a.height, w = a.width, n = params.window;
    if (h < n || w < n) throw std::invalid_argument("ssim: image smaller than the window");

    const auto k = gaussian_window(n, params.sigma);
    const double c1 = (params.k1) * (params.k1);
    const double c2 = (params.k2) * (params.k2);
    const size_t px = static_cast<size_t>(h) * w;

    double total = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
        std::vector<double> x(px), y(px), xx(px), yy(px), xy(px);
        for (size_t i = 0; i < px; ++i) {
            x[i] = a.rgb[i * 3 + ch];
            y[i] = b.rgb[i * 3 + ch];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const auto mx = filter_valid(x, h, w, k), my = filter_valid(y, h, w, k);
        const auto sxx = filter_valid(xx, h, w, k), syy = filter_valid(yy, h, w, k), sxy = filter_valid(xy, h, w, k);
        double sum = 0.0;
        for (size_t i = 0; i < mx.size(); ++i) {
            const double vx = sxx[i] - mx[i] * mx[i];
            const double vy = syy[i] - my[i] * my[i];
            const double cov = sxy[i] - mx[i] * my[i];
            const double num = (2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2);
            const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
            sum += num / den;
        }
        total += sum / static_cast<double>(mx.size());
    }
    return total / 3.0;
}

Image clamp_unit(Image image) {
    for (float& v : image.rgb) v = std::clamp(v, 0.0f, 1.0f);
    return image;
}

} // namespace camgen
