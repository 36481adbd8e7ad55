#pragma once

#include "stego/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace stego {

/// 8-bit RGB image, interleaved row-major.
struct ImageU8 {
  Index width = 0;
  Index height = 0;
  std::vector<uint8_t> pixels;  // height * width * 3

  uint8_t at(Index y, Index x, Index c) const {
    return pixels[static_cast<size_t>((y * width + x) * 3 + c)];
  }
  uint8_t& at(Index y, Index x, Index c) {
    return pixels[static_cast<size_t>((y * width + x) * 3 + c)];
  }
};

/// PNG is the output container; PPM (P6, maxval 255) is additionally accepted
/// on input. Decoding converts everything to 8-bit RGB.
ImageU8 read_png(const std::string& path);
void write_png(const ImageU8& img, const std::string& path);
ImageU8 read_ppm(const std::string& path);
ImageU8 load_image(const std::string& path);  // dispatches on file magic

/// Center crop with floor on odd margins.
ImageU8 center_crop(const ImageU8& img, Index size);

/// Planar [3,H,W] floats in [0,1] from an 8-bit image.
template <typename S>
std::vector<S> image_to_planar(const ImageU8& img) {
  const Index h = img.height, w = img.width;
  std::vector<S> out(static_cast<size_t>(3 * h * w));
  for (Index c = 0; c < 3; ++c)
    for (Index y = 0; y < h; ++y)
      for (Index x = 0; x < w; ++x)
        out[static_cast<size_t>((c * h + y) * w + x)] =
            static_cast<S>(img.at(y, x, c)) / S(255);
  return out;
}

/// Quantize planar [3,H,W] floats: round(clamp(v,0,1) * 255), half away from
/// zero.
template <typename S>
ImageU8 planar_to_image(const S* data, Index h, Index w) {
  ImageU8 img;
  img.width = w;
  img.height = h;
  img.pixels.resize(static_cast<size_t>(3 * h * w));
  for (Index c = 0; c < 3; ++c)
    for (Index y = 0; y < h; ++y)
      for (Index x = 0; x < w; ++x) {
        double v = static_cast<double>(data[(c * h + y) * w + x]);
        v = std::min(1.0, std::max(0.0, v));
        img.at(y, x, c) = static_cast<uint8_t>(std::lround(v * 255.0));
      }
  return img;
}

}  // namespace stego
