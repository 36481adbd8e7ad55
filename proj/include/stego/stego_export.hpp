#pragma once

#include "stego/image_io.hpp"

namespace stego {

/// Writes the stego image and, when a path is given, the amplified residual
/// visualization clamp(0.5 + gain * res, 0, 1) -- signed residuals centered at
/// mid-gray. Inputs are planar [3,H,W] floats.
template <typename S>
void export_stego(const S* stego, const S* res, Index h, Index w,
                  const std::string& stego_path, const std::string& residual_path = "",
                  double residual_gain = 5.0) {
  write_png(planar_to_image(stego, h, w), stego_path);
  if (residual_path.empty()) return;
  std::vector<S> vis(static_cast<size_t>(3 * h * w));
  for (size_t i = 0; i < vis.size(); ++i)
    vis[i] = static_cast<S>(0.5 + residual_gain * static_cast<double>(res[i]));
  write_png(planar_to_image(vis.data(), h, w), residual_path);
}

}  // namespace stego
