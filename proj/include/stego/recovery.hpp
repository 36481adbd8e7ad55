#pragma once

#include "stego/concealment.hpp"

namespace stego {

/// Per-sample decoding result: raw per-segment predictions (logits for
/// n_r = 1, normalized values otherwise), hard elements and the final bits.
struct DecodedMessage {
  Index n_ms = 0;
  Index l_ms = 0;
  std::vector<double> raw;
  SegmentedMessage hard;
  BitMessage bits;
};

/// Message extractor: a windowed-attention feature pyramid over the stego
/// image followed by the order-preserving message head.
template <typename S>
class RecoveryNet {
 public:
  static constexpr const char* kPrefix = "dec";

  RecoveryNet(ModelConfig cfg, ParamStore<S>& store) : cfg_(cfg), store_(&store) {
    cfg_.validate();
  }

  const ModelConfig& config() const { return cfg_; }

  void init(Rng& rng) {
    auto& st = *store_;
    const Index l = cfg_.l_ms;
    detail::add_conv_params(st, p("stem"), cfg_.decoder_dim(0), 3, 3, rng);
    for (int s = 0; s < ModelConfig::kDecoderStages; ++s) {
      const std::string stage = p("stage" + std::to_string(s + 1));
      const Index d = cfg_.decoder_dim(s);
      st.add(stage + ".ln1.gamma", init::ones<S>({d}));
      st.add(stage + ".ln1.beta", init::zeros<S>({d}));
      detail::add_attn_params(st, stage + ".attn", d, rng);
      st.add(stage + ".ln2.gamma", init::ones<S>({d}));
      st.add(stage + ".ln2.beta", init::zeros<S>({d}));
      st.add(stage + ".mlp1.w", init::truncated_normal<S>({d, 4 * d}, 0.02, rng));
      st.add(stage + ".mlp1.b", init::zeros<S>({4 * d}));
      st.add(stage + ".mlp2.w", init::truncated_normal<S>({4 * d, d}, 0.02, rng));
      st.add(stage + ".mlp2.b", init::zeros<S>({d}));
    }
    for (int m = 0; m < 2; ++m) {
      const std::string merge = p("merge" + std::to_string(m + 1));
      const Index din = 4 * cfg_.decoder_dim(m);        // 2x2 concat
      const Index dout = cfg_.decoder_dim(m + 1);
      st.add(merge + ".ln.gamma", init::ones<S>({din}));
      st.add(merge + ".ln.beta", init::zeros<S>({din}));
      st.add(merge + ".w", init::truncated_normal<S>({din, dout}, 0.02, rng));
    }
    const Index dd = cfg_.decoder_dim(3);
    st.add(p("opmd.pe"),
           init::truncated_normal<S>({(cfg_.h / 4) * (cfg_.w / 4), dd}, 0.02, rng));
    detail::add_attn_params(st, p("opmd.attn"), dd, rng);
    st.add(p("opmd.ln.gamma"), init::ones<S>({dd}));
    st.add(p("opmd.ln.beta"), init::zeros<S>({dd}));
    st.add(p("opmd.head1.w"), init::truncated_normal<S>({dd, 4 * l}, 0.02, rng));
    st.add(p("opmd.head1.b"), init::zeros<S>({4 * l}));
    st.add(p("opmd.head2.w"), init::truncated_normal<S>({4 * l, l}, 0.02, rng));
    st.add(p("opmd.head2.b"), init::zeros<S>({l}));
  }

  /// One windowed transformer block (pre-norm attention + MLP, both residual)
  /// on an h x w token grid.
  Tensor<S> swin_stage(int stage, const Tensor<S>& x, Index h, Index w) const {
    auto& st = *store_;
    const std::string sp = p("stage" + std::to_string(stage + 1));
    Tensor<S> a = layer_norm(x, st.get(sp + ".ln1.gamma"), st.get(sp + ".ln1.beta"));
    a = windowed_attention(a, a, detail::attn_params(st, sp + ".attn"), cfg_.heads, h, w,
                           cfg_.window);
    Tensor<S> y = add(x, a);
    Tensor<S> m = layer_norm(y, st.get(sp + ".ln2.gamma"), st.get(sp + ".ln2.beta"));
    m = linear(m, st.get(sp + ".mlp1.w"), st.get(sp + ".mlp1.b"));
    m = detail::activate(m, cfg_.activation);
    m = linear(m, st.get(sp + ".mlp2.w"), st.get(sp + ".mlp2.b"));
    return add(y, m);
  }

  /// Stem conv + four windowed stages, down-sampling (2x spatial, 2x channels)
  /// after stages 1 and 2 only: [B,3,H,W] -> [B, (H/4)(W/4), 8 l_ms].
  Tensor<S> extract_features(const Tensor<S>& stego) const {
    if (stego.rank() != 4 || stego.dim(1) != 3 || stego.dim(2) != cfg_.h ||
        stego.dim(3) != cfg_.w)
      throw ConfigError("extract_features: expected [B,3," + std::to_string(cfg_.h) + "," +
                        std::to_string(cfg_.w) + "], got " + shape_str(stego.shape()));
    auto& st = *store_;
    Tensor<S> x = detail::activate(
        conv2d(stego, st.get(p("stem.w")), st.get(p("stem.b")), 1, 1), cfg_.activation);
    Tensor<S> t = nchw_to_tokens(x);
    t = swin_stage(0, t, cfg_.h, cfg_.w);
    t = downsample(0, t, cfg_.h, cfg_.w);
    t = swin_stage(1, t, cfg_.h / 2, cfg_.w / 2);
    t = downsample(1, t, cfg_.h / 2, cfg_.w / 2);
    t = swin_stage(2, t, cfg_.h / 4, cfg_.w / 4);
    t = swin_stage(3, t, cfg_.h / 4, cfg_.w / 4);
    return t;
  }

  /// Positional embedding + MHSA + LN, then the MLP head down to l_ms
  /// predictions per segment. Mirrors the encoder-side ablation flags.
  Tensor<S> opmd_decode(const Tensor<S>& features) const {
    auto& st = *store_;
    const Index n = (cfg_.h / 4) * (cfg_.w / 4);
    if (features.rank() != 3 || features.dim(1) != n || features.dim(2) != cfg_.decoder_dim(3))
      throw ConfigError("opmd_decode: expected [B," + std::to_string(n) + "," +
                        std::to_string(cfg_.decoder_dim(3)) + "], got " +
                        shape_str(features.shape()));
    Tensor<S> x = features;
    if (cfg_.use_pe) x = add(x, st.get(p("opmd.pe")));
    if (cfg_.use_mhsa) x = mhsa(x, detail::attn_params(st, p("opmd.attn")), cfg_.heads);
    x = layer_norm(x, st.get(p("opmd.ln.gamma")), st.get(p("opmd.ln.beta")));
    x = linear(x, st.get(p("opmd.head1.w")), st.get(p("opmd.head1.b")));
    x = detail::activate(x, cfg_.activation);
    return linear(x, st.get(p("opmd.head2.w")), st.get(p("opmd.head2.b")));
  }

  /// Raw per-segment predictions for a batch: [B, N_ms, l_ms].
  Tensor<S> predict_raw(const Tensor<S>& stego) const { return opmd_decode(extract_features(stego)); }

  /// Hard decoding of one batch; for n_r = 1 the raw logits pass through a
  /// sigmoid before thresholding.
  std::vector<DecodedMessage> decode_batch(const Tensor<S>& raw) const {
    const Index b = raw.dim(0);
    const Index n = raw.dim(1), l = raw.dim(2);
    std::vector<DecodedMessage> out(static_cast<size_t>(b));
    for (Index i = 0; i < b; ++i) {
      DecodedMessage& d = out[static_cast<size_t>(i)];
      d.n_ms = n;
      d.l_ms = l;
      d.raw.resize(static_cast<size_t>(n * l));
      std::vector<double> probs(static_cast<size_t>(n * l));
      for (Index j = 0; j < n * l; ++j) {
        const double v = static_cast<double>(raw.values()[i * n * l + j]);
        d.raw[static_cast<size_t>(j)] = v;
        probs[static_cast<size_t>(j)] = cfg_.n_r == 1 ? 1.0 / (1.0 + std::exp(-v)) : v;
      }
      d.hard = denormalize(probs.data(), n, l, cfg_.n_r);
      d.bits = unpack(desegment(d.hard), cfg_.n_r);
    }
    return out;
  }

  /// Full recovery pipeline for a batch of stego images.
  std::vector<DecodedMessage> recover(const Tensor<S>& stego) const {
    return decode_batch(predict_raw(stego));
  }

 private:
  Tensor<S> downsample(int merge, const Tensor<S>& x, Index h, Index w) const {
    auto& st = *store_;
    const std::string mp = p("merge" + std::to_string(merge + 1));
    Tensor<S> t = merge_tokens_2x2(x, h, w);
    t = layer_norm(t, st.get(mp + ".ln.gamma"), st.get(mp + ".ln.beta"));
    return linear(t, st.get(mp + ".w"));
  }

  std::string p(const std::string& suffix) const { return std::string(kPrefix) + "." + suffix; }

  ModelConfig cfg_;
  ParamStore<S>* store_;
};

}  // namespace stego
