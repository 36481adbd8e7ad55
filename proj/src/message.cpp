#include "stego/message.hpp"

#include <fstream>

namespace stego {

void LayoutConfig::validate() const {
  if (l_ms < 1 || n_r < 1 || h < 1 || w < 1 || scales.empty())
    throw ConfigError("layout: all sizes must be positive");
  if ((n_r & (n_r + 1)) != 0)
    throw ConfigError("layout: n_r + 1 must be a power of two, got n_r = " + std::to_string(n_r));
  for (Index s : scales) {
    if (s < 1 || h % s != 0 || w % s != 0)
      throw ConfigError("layout: scale " + std::to_string(s) + " does not divide " +
                        std::to_string(h) + "x" + std::to_string(w));
    if (element_count() % positions(s) != 0)
      throw ConfigError("layout: element count " + std::to_string(element_count()) +
                        " not divisible by " + std::to_string(positions(s)) +
                        " positions at scale " + std::to_string(s));
  }
}

double capacity_bpp(const LayoutConfig& cfg) {
  cfg.validate();
  const Index s = cfg.coarsest_scale();
  return static_cast<double>(cfg.l_ms * cfg.bits_per_element()) / static_cast<double>(s * s);
}

std::vector<uint32_t> pack(const BitMessage& bits, Index n_r) {
  if (bits.empty()) throw LayoutError("pack: empty message");
  LayoutConfig probe;
  probe.n_r = n_r;
  if ((n_r & (n_r + 1)) != 0)
    throw ConfigError("pack: n_r + 1 must be a power of two");
  const Index bpe = probe.bits_per_element();
  if (static_cast<Index>(bits.size()) % bpe != 0)
    throw LayoutError("pack: bit count " + std::to_string(bits.size()) +
                      " not divisible by " + std::to_string(bpe) + " bits per element");
  std::vector<uint32_t> elements(bits.size() / static_cast<size_t>(bpe));
  for (size_t e = 0; e < elements.size(); ++e) {
    uint32_t v = 0;
    for (Index b = 0; b < bpe; ++b) {
      const uint8_t bit = bits[e * static_cast<size_t>(bpe) + static_cast<size_t>(b)];
      if (bit > 1) throw DataError("pack: bit value out of {0,1}");
      v = (v << 1) | bit;
    }
    elements[e] = v;
  }
  return elements;
}

BitMessage unpack(const std::vector<uint32_t>& elements, Index n_r) {
  LayoutConfig probe;
  probe.n_r = n_r;
  const Index bpe = probe.bits_per_element();
  BitMessage bits(elements.size() * static_cast<size_t>(bpe));
  for (size_t e = 0; e < elements.size(); ++e) {
    if (elements[e] > static_cast<uint32_t>(n_r))
      throw DataError("unpack: element " + std::to_string(elements[e]) + " exceeds n_r = " +
                      std::to_string(n_r));
    for (Index b = 0; b < bpe; ++b)
      bits[e * static_cast<size_t>(bpe) + static_cast<size_t>(b)] =
          (elements[e] >> (bpe - 1 - b)) & 1u;
  }
  return bits;
}

SegmentedMessage segment(const std::vector<uint32_t>& elements, Index positions, Index n_r) {
  if (positions < 1 || static_cast<Index>(elements.size()) % positions != 0)
    throw LayoutError("segment: " + std::to_string(elements.size()) +
                      " elements not divisible by " + std::to_string(positions) + " positions");
  SegmentedMessage out;
  out.n_ms = positions;
  out.l_ms = static_cast<Index>(elements.size()) / positions;
  out.n_r = n_r;
  out.elements = elements;
  return out;
}

SegmentedMessage segment_at_scale(const BitMessage& bits, const LayoutConfig& cfg, Index scale) {
  cfg.validate();
  if (static_cast<Index>(bits.size()) != cfg.total_bits())
    throw LayoutError("segment_at_scale: message has " + std::to_string(bits.size()) +
                      " bits, layout expects " + std::to_string(cfg.total_bits()));
  return segment(pack(bits, cfg.n_r), cfg.positions(scale), cfg.n_r);
}

std::vector<uint32_t> desegment(const SegmentedMessage& msg) {
  for (uint32_t e : msg.elements)
    if (e > static_cast<uint32_t>(msg.n_r))
      throw DataError("desegment: element " + std::to_string(e) + " exceeds n_r = " +
                      std::to_string(msg.n_r));
  return msg.elements;
}

BitMessage random_bits(Rng& rng, Index count) {
  BitMessage bits(static_cast<size_t>(count));
  for (auto& b : bits) b = static_cast<uint8_t>(rng.bit());
  return bits;
}

void save_message(const BitMessage& bits, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write("STGM", 4);
  const uint64_t n = bits.size();
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((n >> (8 * i)) & 0xFF));
  uint8_t acc = 0;
  int used = 0;
  for (uint8_t b : bits) {
    acc = static_cast<uint8_t>((acc << 1) | (b & 1));
    if (++used == 8) {
      out.put(static_cast<char>(acc));
      acc = 0;
      used = 0;
    }
  }
  if (used > 0) out.put(static_cast<char>(acc << (8 - used)));
  if (!out) throw IoError("failed writing " + path);
}

BitMessage load_message(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "STGM") throw DataError("bad message magic in " + path);
  uint64_t n = 0;
  for (int i = 0; i < 8; ++i) {
    const int c = in.get();
    if (c < 0) throw DataError("message file truncated: " + path);
    n |= static_cast<uint64_t>(c) << (8 * i);
  }
  BitMessage bits(n);
  uint8_t acc = 0;
  int left = 0;
  for (uint64_t i = 0; i < n; ++i) {
    if (left == 0) {
      const int c = in.get();
      if (c < 0) throw DataError("message file truncated: " + path);
      acc = static_cast<uint8_t>(c);
      left = 8;
    }
    bits[i] = (acc >> 7) & 1u;
    acc = static_cast<uint8_t>(acc << 1);
    --left;
  }
  return bits;
}

}  // namespace stego
