#pragma once

#include "stego/image_io.hpp"

namespace stego {

/// Peak signal-to-noise ratio over 8-bit images, MAX = 255. Identical images
/// return +infinity; report writers cap at kPsnrCap.
double psnr(const ImageU8& a, const ImageU8& b);

constexpr double kPsnrCap = 100.0;
inline double capped_psnr(double v) { return std::min(v, kPsnrCap); }

/// Mean SSIM over valid 11x11 Gaussian windows (sigma 1.5, K1 = 0.01,
/// K2 = 0.03, L = 255), averaged over the three channels.
double ssim(const ImageU8& a, const ImageU8& b);

}  // namespace stego
