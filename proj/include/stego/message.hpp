#pragma once

#include "stego/common.hpp"
#include "stego/rng.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace stego {

/// Raw secret payload: a sequence of 0/1 values.
using BitMessage = std::vector<uint8_t>;

/// Message geometry: elements carry log2(n_r + 1) bits each; the element
/// stream is regrouped into per-position segments at every encoding scale,
/// with capacity accounted at the coarsest scale.
struct LayoutConfig {
  Index l_ms = 16;   // segment length at the coarsest scale, in elements
  Index n_r = 1;     // elements range over {0..n_r}; n_r + 1 must be a power of two
  Index h = 64;
  Index w = 64;
  std::vector<Index> scales{2, 4, 4};

  Index bits_per_element() const {
    Index b = 0, v = n_r + 1;
    while (v > 1) {
      v >>= 1;
      ++b;
    }
    return b;
  }
  Index coarsest_scale() const {
    Index s = 1;
    for (Index v : scales) s = std::max(s, v);
    return s;
  }
  Index positions(Index scale) const { return (h / scale) * (w / scale); }
  Index segment_length(Index scale) const { return element_count() / positions(scale); }
  /// Total elements in one message (fixed by the coarsest grid).
  Index element_count() const { return positions(coarsest_scale()) * l_ms; }
  Index total_bits() const { return element_count() * bits_per_element(); }

  void validate() const;
};

/// Element grid: n_ms segments of l_ms elements, each in {0..n_r}.
struct SegmentedMessage {
  Index n_ms = 0;
  Index l_ms = 0;
  Index n_r = 1;
  std::vector<uint32_t> elements;  // row-major, n_ms * l_ms
};

/// Bits per pixel of a layout: l_ms * log2(n_r+1) / coarsest_scale^2.
double capacity_bpp(const LayoutConfig& cfg);

/// Groups of log2(n_r+1) consecutive bits become one element, MSB first.
std::vector<uint32_t> pack(const BitMessage& bits, Index n_r);

/// Inverse of pack; throws DataError on out-of-range elements.
BitMessage unpack(const std::vector<uint32_t>& elements, Index n_r);

/// Row-major partition of the element stream over `positions` segments;
/// segment j holds elements [j*len, (j+1)*len).
SegmentedMessage segment(const std::vector<uint32_t>& elements, Index positions, Index n_r);
SegmentedMessage segment_at_scale(const BitMessage& bits, const LayoutConfig& cfg, Index scale);

/// Flattens segments back into the element stream (order-preserving inverse).
std::vector<uint32_t> desegment(const SegmentedMessage& msg);

/// Maps elements to [0,1] targets: e / n_r.
template <typename S>
std::vector<S> normalized_values(const SegmentedMessage& msg) {
  std::vector<S> out(msg.elements.size());
  const S inv = S(1) / static_cast<S>(msg.n_r);
  for (size_t i = 0; i < out.size(); ++i) out[i] = static_cast<S>(msg.elements[i]) * inv;
  return out;
}

/// Hard decision: clamp(round(p * n_r), 0, n_r); rounding is half away from
/// zero, so for n_r = 1 a prediction of exactly 0.5 maps to 1.
template <typename S>
SegmentedMessage denormalize(const S* preds, Index n_ms, Index l_ms, Index n_r) {
  SegmentedMessage out;
  out.n_ms = n_ms;
  out.l_ms = l_ms;
  out.n_r = n_r;
  out.elements.resize(static_cast<size_t>(n_ms * l_ms));
  for (size_t i = 0; i < out.elements.size(); ++i) {
    const long v = std::lround(static_cast<double>(preds[i]) * static_cast<double>(n_r));
    out.elements[i] = static_cast<uint32_t>(std::min<long>(std::max<long>(v, 0), n_r));
  }
  return out;
}

BitMessage random_bits(Rng& rng, Index count);

/// Message file: "STGM" magic, u64 LE bit length, bits packed 8 per byte MSB
/// first with a zero-padded final byte.
void save_message(const BitMessage& bits, const std::string& path);
BitMessage load_message(const std::string& path);

}  // namespace stego
