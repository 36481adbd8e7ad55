#pragma once

#include "stego/attention.hpp"
#include "stego/conv.hpp"
#include "stego/model_config.hpp"

namespace stego {

namespace detail {

template <typename S>
Tensor<S> activate(const Tensor<S>& x, Activation a) {
  return a == Activation::Gelu ? gelu(x) : relu(x);
}

template <typename S>
AttnParams<S> attn_params(const ParamStore<S>& store, const std::string& prefix) {
  return AttnParams<S>{store.get(prefix + ".wq"), store.get(prefix + ".bq"),
                       store.get(prefix + ".wk"), store.get(prefix + ".bk"),
                       store.get(prefix + ".wv"), store.get(prefix + ".bv"),
                       store.get(prefix + ".wo"), store.get(prefix + ".bo")};
}

template <typename S>
void add_attn_params(ParamStore<S>& store, const std::string& prefix, Index c, Rng& rng) {
  store.add(prefix + ".wq", init::truncated_normal<S>({c, c}, 0.02, rng));
  store.add(prefix + ".bq", init::zeros<S>({c}));
  store.add(prefix + ".wk", init::truncated_normal<S>({c, c}, 0.02, rng));
  store.add(prefix + ".bk", init::zeros<S>({c}));
  store.add(prefix + ".wv", init::truncated_normal<S>({c, c}, 0.02, rng));
  store.add(prefix + ".bv", init::zeros<S>({c}));
  store.add(prefix + ".wo", init::truncated_normal<S>({c, c}, 0.02, rng));
  store.add(prefix + ".bo", init::zeros<S>({c}));
}

template <typename S>
void add_conv_params(ParamStore<S>& store, const std::string& prefix, Index cout, Index cin,
                     Index k, Rng& rng) {
  store.add(prefix + ".w", init::fanin_uniform<S>({cout, cin, k, k}, cin * k * k, rng));
  store.add(prefix + ".b", init::zeros<S>({cout}));
}

template <typename S>
void add_deconv_params(ParamStore<S>& store, const std::string& prefix, Index cin, Index cout,
                       Index k, Rng& rng) {
  store.add(prefix + ".w", init::fanin_uniform<S>({cin, cout, k, k}, cin * k * k, rng));
  store.add(prefix + ".b", init::zeros<S>({cout}));
}

}  // namespace detail

/// Stego-image generator: two convolutional image-prep stages, three
/// message-encoding stages fused into the image features by windowed
/// attention, and an up-sampling head emitting the residual image.
template <typename S>
class ConcealmentNet {
 public:
  static constexpr const char* kPrefix = "enc";

  ConcealmentNet(ModelConfig cfg, ParamStore<S>& store) : cfg_(cfg), store_(&store) {
    cfg_.validate();
  }

  const ModelConfig& config() const { return cfg_; }

  /// Registers and initializes all encoder parameters.
  void init(Rng& rng) {
    auto& st = *store_;
    const Index c = cfg_.base_channels();
    detail::add_conv_params(st, p("prep.conv1"), c, 3, 3, rng);
    detail::add_conv_params(st, p("prep.down1"), 2 * c, c, 2, rng);
    detail::add_conv_params(st, p("prep.conv2"), 2 * c, 2 * c, 3, rng);
    detail::add_conv_params(st, p("prep.down2"), 4 * c, 2 * c, 2, rng);
    const LayoutConfig lc = cfg_.layout();
    for (int s = 0; s < ModelConfig::kStages; ++s) {
      const std::string opme = p(stage_name("opme", s));
      const Index ch = cfg_.stage_channels(s);
      const Index len = lc.segment_length(cfg_.stage_scale(s));
      st.add(opme + ".mlp1.w", init::truncated_normal<S>({len, ch}, 0.02, rng));
      st.add(opme + ".mlp1.b", init::zeros<S>({ch}));
      st.add(opme + ".mlp2.w", init::truncated_normal<S>({ch, ch}, 0.02, rng));
      st.add(opme + ".mlp2.b", init::zeros<S>({ch}));
      st.add(opme + ".pe",
             init::truncated_normal<S>({cfg_.stage_positions(s), ch}, 0.02, rng));
      detail::add_attn_params(st, opme + ".attn", ch, rng);
      st.add(opme + ".ln.gamma", init::ones<S>({ch}));
      st.add(opme + ".ln.beta", init::zeros<S>({ch}));
      detail::add_attn_params(st, p(stage_name("gmif", s)) + ".attn", ch, rng);
    }
    detail::add_deconv_params(st, p("head.deconv1"), 8 * c, 4 * c, 2, rng);
    detail::add_conv_params(st, p("head.conv1"), 2 * c, 6 * c, 3, rng);
    detail::add_deconv_params(st, p("head.deconv2"), 2 * c, c, 2, rng);
    detail::add_conv_params(st, p("head.out"), 3, c, 3, rng);
  }

  /// Two conv stages over the cover image: [B,3,H,W] ->
  /// {[B,2c,H/2,W/2], [B,4c,H/4,W/4]}.
  std::vector<Tensor<S>> prepare_image(const Tensor<S>& cover) const {
    if (cover.rank() != 4 || cover.dim(1) != 3 || cover.dim(2) != cfg_.h || cover.dim(3) != cfg_.w)
      throw ConfigError("prepare_image: expected [B,3," + std::to_string(cfg_.h) + "," +
                        std::to_string(cfg_.w) + "], got " + shape_str(cover.shape()));
    auto& st = *store_;
    const Activation act = cfg_.activation;
    Tensor<S> x = detail::activate(
        conv2d(cover, st.get(p("prep.conv1.w")), st.get(p("prep.conv1.b")), 1, 1), act);
    Tensor<S> f1 = detail::activate(
        conv2d(x, st.get(p("prep.down1.w")), st.get(p("prep.down1.b")), 2, 0), act);
    Tensor<S> y = detail::activate(
        conv2d(f1, st.get(p("prep.conv2.w")), st.get(p("prep.conv2.b")), 1, 1), act);
    Tensor<S> f2 = detail::activate(
        conv2d(y, st.get(p("prep.down2.w")), st.get(p("prep.down2.b")), 2, 0), act);
    return {f1, f2};
  }

  /// Per-segment channel coding, positional embedding, global self-attention
  /// and layer norm. Input [B, N_s, len_s] normalized to [0,1], output
  /// [B, N_s, channels_s].
  Tensor<S> opme_encode(int stage, const Tensor<S>& msg_norm) const {
    auto& st = *store_;
    const std::string opme = p(stage_name("opme", stage));
    const Index n = cfg_.stage_positions(stage);
    const Index len = cfg_.layout().segment_length(cfg_.stage_scale(stage));
    if (msg_norm.rank() != 3 || msg_norm.dim(1) != n || msg_norm.dim(2) != len)
      throw ConfigError("opme_encode: expected [B," + std::to_string(n) + "," +
                        std::to_string(len) + "], got " + shape_str(msg_norm.shape()));
    Tensor<S> x = linear(msg_norm, st.get(opme + ".mlp1.w"), st.get(opme + ".mlp1.b"));
    x = detail::activate(x, cfg_.activation);
    x = linear(x, st.get(opme + ".mlp2.w"), st.get(opme + ".mlp2.b"));
    if (cfg_.use_pe) x = add(x, st.get(opme + ".pe"));
    if (cfg_.use_mhsa)
      x = mhsa(x, detail::attn_params(st, opme + ".attn"), cfg_.heads);
    return layer_norm(x, st.get(opme + ".ln.gamma"), st.get(opme + ".ln.beta"));
  }

  /// Windowed cross-modal attention; query/key/value sources follow the
  /// configured variant. Both inputs are [B, N_s, channels_s] token grids.
  Tensor<S> gmif_fuse(int stage, const Tensor<S>& f_msg, const Tensor<S>& f_im) const {
    if (!same_shape(f_msg.shape(), f_im.shape()))
      throw ConfigError("gmif_fuse: message features " + shape_str(f_msg.shape()) +
                        " and image features " + shape_str(f_im.shape()) + " must match");
    auto params = detail::attn_params(*store_, p(stage_name("gmif", stage)) + ".attn");
    Tensor<S> q_src, kv_src;
    switch (cfg_.qkv) {
      case QkvVariant::MsgQ_MsgImKv: q_src = f_msg; kv_src = add(f_im, f_msg); break;
      case QkvVariant::MsgQ_ImKv: q_src = f_msg; kv_src = f_im; break;
      case QkvVariant::ImQ_MsgImKv: q_src = f_im; kv_src = add(f_im, f_msg); break;
      case QkvVariant::ImQ_MsgKv: q_src = f_im; kv_src = f_msg; break;
      case QkvVariant::MsgImQ_MsgImKv: q_src = add(f_im, f_msg); kv_src = q_src; break;
    }
    return windowed_attention(q_src, kv_src, params, cfg_.heads, cfg_.stage_grid_h(stage),
                              cfg_.stage_grid_w(stage), cfg_.window);
  }

  /// Up-sampling head: fuses the final and first-stage stego features with
  /// the image features back to full resolution. Channel count halves at each
  /// deconvolution. Returns {I_res, I_stego} with I_stego = I_cover + I_res.
  std::pair<Tensor<S>, Tensor<S>> reconstruct_stego(const Tensor<S>& f_stego1,
                                                    const Tensor<S>& f_stego3,
                                                    const Tensor<S>& f_im2,
                                                    const Tensor<S>& cover) const {
    auto& st = *store_;
    const Activation act = cfg_.activation;
    const Index h4 = cfg_.h / 4, w4 = cfg_.w / 4;
    const Index h2 = cfg_.h / 2, w2 = cfg_.w / 2;
    Tensor<S> x = concat(tokens_to_nchw(f_stego3, h4, w4), f_im2, 1);
    x = detail::activate(
        deconv2d(x, st.get(p("head.deconv1.w")), st.get(p("head.deconv1.b")), 2), act);
    x = concat(x, tokens_to_nchw(f_stego1, h2, w2), 1);
    x = detail::activate(conv2d(x, st.get(p("head.conv1.w")), st.get(p("head.conv1.b")), 1, 1),
                         act);
    x = detail::activate(
        deconv2d(x, st.get(p("head.deconv2.w")), st.get(p("head.deconv2.b")), 2), act);
    Tensor<S> res = conv2d(x, st.get(p("head.out.w")), st.get(p("head.out.b")), 1, 1);
    return {res, add(cover, res)};
  }

  /// Builds the [B, N_s, len_s] normalized message tensor for a stage; the
  /// full message is regrouped at each stage's grid.
  Tensor<S> messages_to_tensor(int stage, const std::vector<BitMessage>& msgs) const {
    const LayoutConfig lc = cfg_.layout();
    const Index n = cfg_.stage_positions(stage);
    const Index len = lc.segment_length(cfg_.stage_scale(stage));
    const Index b = static_cast<Index>(msgs.size());
    ArrX<S> data(b * n * len);
    for (Index i = 0; i < b; ++i) {
      if (static_cast<Index>(msgs[static_cast<size_t>(i)].size()) != lc.total_bits())
        throw LayoutError("conceal: message has " +
                          std::to_string(msgs[static_cast<size_t>(i)].size()) +
                          " bits but the layout carries " + std::to_string(lc.total_bits()));
      SegmentedMessage seg =
          segment_at_scale(msgs[static_cast<size_t>(i)], lc, cfg_.stage_scale(stage));
      const std::vector<S> vals = normalized_values<S>(seg);
      for (size_t j = 0; j < vals.size(); ++j)
        data[i * n * len + static_cast<Index>(j)] = vals[j];
    }
    return Tensor<S>::from_array({b, n, len}, std::move(data));
  }

  /// Full concealment pipeline. Returns {I_res, I_stego}, unquantized.
  std::pair<Tensor<S>, Tensor<S>> conceal(const Tensor<S>& cover,
                                          const std::vector<BitMessage>& msgs) const {
    if (cover.dim(0) != static_cast<Index>(msgs.size()))
      throw LayoutError("conceal: batch has " + std::to_string(cover.dim(0)) + " images and " +
                        std::to_string(msgs.size()) + " messages");
    auto f_im = prepare_image(cover);
    Tensor<S> t1 = nchw_to_tokens(f_im[0]);
    Tensor<S> t2 = nchw_to_tokens(f_im[1]);
    Tensor<S> f_stego1 = gmif_fuse(0, opme_encode(0, messages_to_tensor(0, msgs)), t1);
    Tensor<S> f_stego2 = gmif_fuse(1, opme_encode(1, messages_to_tensor(1, msgs)), t2);
    // Stage 3 runs at the /4 grid with stage 2's fused features as its
    // image-side input.
    Tensor<S> f_stego3 = gmif_fuse(2, opme_encode(2, messages_to_tensor(2, msgs)), f_stego2);
    return reconstruct_stego(f_stego1, f_stego3, f_im[1], cover);
  }

 private:
  static std::string stage_name(const char* base, int stage) {
    return std::string(base) + std::to_string(stage + 1);
  }
  std::string p(const std::string& suffix) const { return std::string(kPrefix) + "." + suffix; }

  ModelConfig cfg_;
  ParamStore<S>* store_;
};

}  // namespace stego
