#include "stego/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace stego {

namespace {

void check_same(const ImageU8& a, const ImageU8& b, const char* who) {
  if (a.width != b.width || a.height != b.height)
    throw DimensionError(std::string(who) + ": image sizes differ");
}

constexpr int kWin = 11;

const std::array<double, kWin * kWin>& gaussian_window() {
  static const std::array<double, kWin * kWin> w = [] {
    std::array<double, kWin * kWin> g{};
    const double sigma = 1.5;
    double total = 0.0;
    for (int y = 0; y < kWin; ++y)
      for (int x = 0; x < kWin; ++x) {
        const double dy = y - kWin / 2, dx = x - kWin / 2;
        g[y * kWin + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        total += g[y * kWin + x];
      }
    for (double& v : g) v /= total;
    return g;
  }();
  return w;
}

}  // namespace

double psnr(const ImageU8& a, const ImageU8& b) {
  check_same(a, b, "psnr");
  double se = 0.0;
  for (size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]);
    se += d * d;
  }
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = se / static_cast<double>(a.pixels.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim(const ImageU8& a, const ImageU8& b) {
  check_same(a, b, "ssim");
  if (a.width < kWin || a.height < kWin)
    throw DimensionError("ssim: image smaller than the 11x11 window");
  const auto& w = gaussian_window();
  const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  const double c2 = (0.03 * 255.0) * (0.03 * 255.0);

  double total = 0.0;
  long windows = 0;
  for (Index ch = 0; ch < 3; ++ch)
    for (Index y = 0; y + kWin <= a.height; ++y)
      for (Index x = 0; x + kWin <= a.width; ++x) {
        double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
        for (int wy = 0; wy < kWin; ++wy)
          for (int wx = 0; wx < kWin; ++wx) {
            const double wt = w[wy * kWin + wx];
            const double va = a.at(y + wy, x + wx, ch);
            const double vb = b.at(y + wy, x + wx, ch);
            mx += wt * va;
            my += wt * vb;
            sxx += wt * va * va;
            syy += wt * vb * vb;
            sxy += wt * va * vb;
          }
        const double vx = sxx - mx * mx;
        const double vy = syy - my * my;
        const double cov = sxy - mx * my;
        total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                 ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++windows;
      }
  return total / static_cast<double>(windows);
}

}  // namespace stego
