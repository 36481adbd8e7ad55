#pragma once

#include "stego/ops.hpp"

namespace stego {

/// Loss weighting. The message term is BCE-from-logits when n_r = 1 and MSE
/// against e/n_r targets otherwise. The perceptual proxy (mean L1 of
/// finite-difference image gradients) stands in for a pretrained perceptual
/// metric and is off by default.
struct LossConfig {
  double lambda1 = 1e-4;  // image MSE weight
  double lambda2 = 1e-6;  // perceptual proxy weight
  bool use_perceptual_proxy = false;
};

/// Mean |grad(a) - grad(b)| over horizontal and vertical finite differences
/// of [B,C,H,W] images.
template <typename S>
Tensor<S> image_grad_l1(const Tensor<S>& a, const Tensor<S>& b) {
  if (!same_shape(a.shape(), b.shape()) || a.rank() != 4)
    throw detail::dim_error("image_grad_l1: expected matching 4-d images");
  const Index bn = a.dim(0) * a.dim(1), h = a.dim(2), w = a.dim(3);
  const Index count = bn * (h * (w - 1) + (h - 1) * w);
  const S inv = S(1) / static_cast<S>(count);
  S total = S(0);
  const auto& av = a.values();
  const auto& bv = b.values();
  for (Index p = 0; p < bn; ++p) {
    const Index base = p * h * w;
    for (Index y = 0; y < h; ++y)
      for (Index x = 0; x + 1 < w; ++x) {
        const Index i = base + y * w + x;
        total += std::abs((av[i + 1] - av[i]) - (bv[i + 1] - bv[i]));
      }
    for (Index y = 0; y + 1 < h; ++y)
      for (Index x = 0; x < w; ++x) {
        const Index i = base + y * w + x;
        total += std::abs((av[i + w] - av[i]) - (bv[i + w] - bv[i]));
      }
  }
  ArrX<S> out = ArrX<S>::Constant(1, total * inv);
  return make_op<S>(
      "image_grad_l1", {1}, std::move(out), {a, b},
      [bn, h, w, inv](typename Tensor<S>::Node& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        const S g = self.grad[0] * inv;
        if (pa.requires_grad) pa.ensure_grad();
        if (pb.requires_grad) pb.ensure_grad();
        auto sign = [](S v) { return v > S(0) ? S(1) : (v < S(0) ? S(-1) : S(0)); };
        for (Index p = 0; p < bn; ++p) {
          const Index base = p * h * w;
          auto apply = [&](Index i, Index j) {
            const S s =
                sign((pa.value[j] - pa.value[i]) - (pb.value[j] - pb.value[i])) * g;
            if (pa.requires_grad) {
              pa.grad[j] += s;
              pa.grad[i] -= s;
            }
            if (pb.requires_grad) {
              pb.grad[j] -= s;
              pb.grad[i] += s;
            }
          };
          for (Index y = 0; y < h; ++y)
            for (Index x = 0; x + 1 < w; ++x) apply(base + y * w + x, base + y * w + x + 1);
          for (Index y = 0; y + 1 < h; ++y)
            for (Index x = 0; x < w; ++x) apply(base + y * w + x, base + (y + 1) * w + x);
        }
      });
}

template <typename S>
struct LossBreakdown {
  Tensor<S> total;
  double image_mse = 0.0;
  double perceptual = 0.0;
  double message = 0.0;
};

/// lambda1 * MSE(cover, stego) [+ lambda2 * proxy] + message loss, end to end
/// differentiable. `msg_target` holds normalized elements in [0,1] aligned
/// with `msg_raw` ([B, N_ms, l_ms] predictions).
template <typename S>
LossBreakdown<S> total_loss(const Tensor<S>& cover, const Tensor<S>& stego,
                            const Tensor<S>& msg_target, const Tensor<S>& msg_raw,
                            const LossConfig& cfg, Index n_r) {
  LossBreakdown<S> out;
  Tensor<S> img = mse_loss(stego, cover);
  out.image_mse = static_cast<double>(img.scalar());
  Tensor<S> msg = n_r == 1 ? bce_with_logits_loss(msg_raw, msg_target)
                           : mse_loss(msg_raw, msg_target);
  out.message = static_cast<double>(msg.scalar());
  Tensor<S> total = add(scale(img, static_cast<S>(cfg.lambda1)), msg);
  if (cfg.use_perceptual_proxy) {
    Tensor<S> proxy = image_grad_l1(cover, stego);
    out.perceptual = static_cast<double>(proxy.scalar());
    total = add(total, scale(proxy, static_cast<S>(cfg.lambda2)));
  }
  out.total = total;
  return out;
}

}  // namespace stego
