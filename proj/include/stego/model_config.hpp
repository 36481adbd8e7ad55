#pragma once

#include "stego/message.hpp"

#include <array>

namespace stego {

/// Query/key/value wiring of the fusion attention. "msg" is the globally
/// encoded message feature, "im" the image feature, "msg+im" their sum.
enum class QkvVariant {
  MsgQ_MsgImKv,    // Q <- msg,     K/V <- msg + im
  MsgQ_ImKv,       // Q <- msg,     K/V <- im
  ImQ_MsgImKv,     // Q <- im,      K/V <- msg + im   (default)
  ImQ_MsgKv,       // Q <- im,      K/V <- msg
  MsgImQ_MsgImKv,  // Q <- msg + im, K/V <- msg + im
};

QkvVariant parse_qkv_variant(const std::string& s);
std::string to_string(QkvVariant v);

enum class Activation { Gelu, Relu };

Activation parse_activation(const std::string& s);
std::string to_string(Activation a);

/// Full architecture hyperparameters. Channel widths all derive from l_ms:
/// the base width is c = 2 * l_ms, encoder stages run at
/// [(/2, 2c), (/4, 4c), (/4, 4c)], and the decoder Swin stages output
/// [2, 4, 8, 8] * l_ms channels.
struct ModelConfig {
  Index l_ms = 16;
  Index n_r = 1;
  Index h = 64;
  Index w = 64;
  Index heads = 2;
  Index window = 16;
  bool use_mhsa = true;
  bool use_pe = true;
  QkvVariant qkv = QkvVariant::ImQ_MsgImKv;
  Activation activation = Activation::Gelu;

  Index base_channels() const { return 2 * l_ms; }

  static constexpr int kStages = 3;
  Index stage_scale(int stage) const { return std::array<Index, 3>{2, 4, 4}[stage]; }
  Index stage_channels(int stage) const {
    const Index c = base_channels();
    return std::array<Index, 3>{2 * c, 4 * c, 4 * c}[stage];
  }
  Index stage_grid_h(int stage) const { return h / stage_scale(stage); }
  Index stage_grid_w(int stage) const { return w / stage_scale(stage); }
  Index stage_positions(int stage) const { return stage_grid_h(stage) * stage_grid_w(stage); }

  static constexpr int kDecoderStages = 4;
  Index decoder_dim(int stage) const {
    return std::array<Index, 4>{2, 4, 8, 8}[stage] * l_ms;
  }
  /// Decoder grid per stage: full resolution, /2, /4, /4.
  Index decoder_scale(int stage) const { return std::array<Index, 4>{1, 2, 4, 4}[stage]; }

  LayoutConfig layout() const {
    LayoutConfig lc;
    lc.l_ms = l_ms;
    lc.n_r = n_r;
    lc.h = h;
    lc.w = w;
    lc.scales = {2, 4, 4};
    return lc;
  }

  void validate() const;
};

}  // namespace stego
