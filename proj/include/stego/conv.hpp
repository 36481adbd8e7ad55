#pragma once

#include "stego/ops.hpp"

namespace stego {

namespace detail {

struct ConvGeom {
  Index batch, cin, h, w;     // input
  Index cout, k, stride, pad; // kernel
  Index ho, wo;               // output
};

/// Unfold one image [C,H,W] into columns [C*k*k, ho*wo]; out-of-bounds taps
/// are zero.
template <typename S>
void im2col(const S* img, Index c, Index h, Index w, Index k, Index stride, Index pad,
            Index ho, Index wo, S* col) {
  const Index patch = k * k;
  for (Index ci = 0; ci < c; ++ci)
    for (Index u = 0; u < k; ++u)
      for (Index v = 0; v < k; ++v) {
        S* dst = col + ((ci * k + u) * k + v) * (ho * wo);
        const S* src = img + ci * h * w;
        for (Index oy = 0; oy < ho; ++oy) {
          const Index iy = oy * stride + u - pad;
          for (Index ox = 0; ox < wo; ++ox) {
            const Index ix = ox * stride + v - pad;
            dst[oy * wo + ox] =
                (iy >= 0 && iy < h && ix >= 0 && ix < w) ? src[iy * w + ix] : S(0);
          }
        }
      }
  (void)patch;
}

/// Adjoint of im2col: scatter-add columns back into an image buffer.
template <typename S>
void col2im(const S* col, Index c, Index h, Index w, Index k, Index stride, Index pad,
            Index ho, Index wo, S* img) {
  for (Index ci = 0; ci < c; ++ci)
    for (Index u = 0; u < k; ++u)
      for (Index v = 0; v < k; ++v) {
        const S* src = col + ((ci * k + u) * k + v) * (ho * wo);
        S* dst = img + ci * h * w;
        for (Index oy = 0; oy < ho; ++oy) {
          const Index iy = oy * stride + u - pad;
          if (iy < 0 || iy >= h) continue;
          for (Index ox = 0; ox < wo; ++ox) {
            const Index ix = ox * stride + v - pad;
            if (ix >= 0 && ix < w) dst[iy * w + ix] += src[oy * wo + ox];
          }
        }
      }
}

}  // namespace detail

/// 2D cross-correlation: x[B,Cin,H,W] * w[Cout,Cin,k,k] (+ bias[Cout]).
/// The output size (H + 2 pad - k) / stride + 1 must divide exactly.
template <typename S>
Tensor<S> conv2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& bias = {},
                 Index stride = 1, Index pad = 0) {
  if (x.rank() != 4 || w.rank() != 4)
    throw detail::dim_error("conv2d: expected 4-d input and weight");
  detail::ConvGeom g{};
  g.batch = x.dim(0); g.cin = x.dim(1); g.h = x.dim(2); g.w = x.dim(3);
  g.cout = w.dim(0); g.k = w.dim(2); g.stride = stride; g.pad = pad;
  if (w.dim(1) != g.cin)
    throw detail::dim_error("conv2d: weight expects " + std::to_string(w.dim(1)) +
                            " input channels, got " + std::to_string(g.cin));
  if (w.dim(3) != g.k) throw detail::dim_error("conv2d: non-square kernel");
  if (stride < 1 || pad < 0) throw ConfigError("conv2d: invalid stride/pad");
  const Index hnum = g.h + 2 * pad - g.k;
  const Index wnum = g.w + 2 * pad - g.k;
  if (hnum < 0 || wnum < 0 || hnum % stride != 0 || wnum % stride != 0)
    throw ConfigError("conv2d: non-integral output size for input " + shape_str(x.shape()) +
                      ", kernel " + std::to_string(g.k) + ", stride " + std::to_string(stride) +
                      ", pad " + std::to_string(pad));
  g.ho = hnum / stride + 1;
  g.wo = wnum / stride + 1;
  if (bias.defined() && bias.numel() != g.cout)
    throw detail::dim_error("conv2d: bias size mismatch");

  const Index cols = g.ho * g.wo;
  const Index patch = g.cin * g.k * g.k;
  ArrX<S> out(g.batch * g.cout * cols);
  parallel_for(g.batch, [&](Index b) {
    ArrX<S> col(patch * cols);
    detail::im2col(x.data() + b * g.cin * g.h * g.w, g.cin, g.h, g.w, g.k, g.stride, g.pad,
                   g.ho, g.wo, col.data());
    MapMat<S> o(out.data() + b * g.cout * cols, g.cout, cols);
    o.noalias() = MapConstMat<S>(w.data(), g.cout, patch) * MapConstMat<S>(col.data(), patch, cols);
    if (bias.defined()) o.colwise() += Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>(bias.data(), g.cout);
  });

  auto back = [g, patch, cols](typename Tensor<S>::Node& self) {
    auto& px = *self.parents[0];
    auto& pw = *self.parents[1];
    if (px.requires_grad) px.ensure_grad();
    if (pw.requires_grad) pw.ensure_grad();
    // dW accumulation is carried per-sample in a local buffer and merged in
    // batch order, keeping summation deterministic.
    ArrX<S> dw_total = ArrX<S>::Zero(pw.value.size());
    for (Index b = 0; b < g.batch; ++b) {
      MapConstMat<S> dy(self.grad.data() + b * g.cout * cols, g.cout, cols);
      if (pw.requires_grad) {
        ArrX<S> col(patch * cols);
        detail::im2col(px.value.data() + b * g.cin * g.h * g.w, g.cin, g.h, g.w, g.k, g.stride,
                       g.pad, g.ho, g.wo, col.data());
        MapMat<S>(dw_total.data(), g.cout, patch).noalias() +=
            dy * MapConstMat<S>(col.data(), patch, cols).transpose();
      }
      if (px.requires_grad) {
        ArrX<S> dcol(patch * cols);
        MapMat<S>(dcol.data(), patch, cols).noalias() =
            MapConstMat<S>(pw.value.data(), g.cout, patch).transpose() * dy;
        detail::col2im(dcol.data(), g.cin, g.h, g.w, g.k, g.stride, g.pad, g.ho, g.wo,
                       px.grad.data() + b * g.cin * g.h * g.w);
      }
    }
    if (pw.requires_grad) pw.grad += dw_total;
    if (self.parents.size() == 3) {
      auto& pb = *self.parents[2];
      if (pb.requires_grad) {
        pb.ensure_grad();
        for (Index b = 0; b < g.batch; ++b)
          for (Index co = 0; co < g.cout; ++co)
            pb.grad[co] += self.grad.segment((b * g.cout + co) * cols, cols).sum();
      }
    }
  };
  Shape out_shape{g.batch, g.cout, g.ho, g.wo};
  if (bias.defined())
    return make_op<S>("conv2d", std::move(out_shape), std::move(out), {x, w, bias}, back);
  return make_op<S>("conv2d", std::move(out_shape), std::move(out), {x, w}, back);
}

/// Stride-s transposed convolution, the adjoint of conv2d with matching
/// geometry: x[B,Cin,h,w] * w[Cin,Cout,k,k] -> [B,Cout,h*s,w*s].
/// Requires k >= s with k - s even; pad = (k - s) / 2.
template <typename S>
Tensor<S> deconv2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& bias = {},
                   Index stride = 2) {
  if (x.rank() != 4 || w.rank() != 4)
    throw detail::dim_error("deconv2d: expected 4-d input and weight");
  detail::ConvGeom g{};
  g.batch = x.dim(0); g.cin = x.dim(1);
  // h/w hold the *output* spatial dims so im2col/col2im see conv geometry.
  g.cout = w.dim(1); g.k = w.dim(2); g.stride = stride;
  const Index hin = x.dim(2), win = x.dim(3);
  if (w.dim(0) != g.cin)
    throw detail::dim_error("deconv2d: weight expects " + std::to_string(w.dim(0)) +
                            " input channels, got " + std::to_string(g.cin));
  if (w.dim(3) != g.k) throw detail::dim_error("deconv2d: non-square kernel");
  if (g.k < stride || (g.k - stride) % 2 != 0)
    throw ConfigError("deconv2d: kernel " + std::to_string(g.k) + " incompatible with stride " +
                      std::to_string(stride));
  g.pad = (g.k - stride) / 2;
  g.h = hin * stride;
  g.w = win * stride;
  g.ho = hin;
  g.wo = win;
  if (bias.defined() && bias.numel() != g.cout)
    throw detail::dim_error("deconv2d: bias size mismatch");

  const Index cols = hin * win;
  const Index patch = g.cout * g.k * g.k;
  ArrX<S> out(g.batch * g.cout * g.h * g.w);
  out.setZero();
  parallel_for(g.batch, [&](Index b) {
    ArrX<S> col(patch * cols);
    MapMat<S>(col.data(), patch, cols).noalias() =
        MapConstMat<S>(w.data(), g.cin, patch).transpose() *
        MapConstMat<S>(x.data() + b * g.cin * cols, g.cin, cols);
    detail::col2im(col.data(), g.cout, g.h, g.w, g.k, g.stride, g.pad, g.ho, g.wo,
                   out.data() + b * g.cout * g.h * g.w);
    if (bias.defined()) {
      MapMat<S> o(out.data() + b * g.cout * g.h * g.w, g.cout, g.h * g.w);
      o.colwise() += Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>(bias.data(), g.cout);
    }
  });

  auto back = [g, patch, cols](typename Tensor<S>::Node& self) {
    auto& px = *self.parents[0];
    auto& pw = *self.parents[1];
    if (px.requires_grad) px.ensure_grad();
    if (pw.requires_grad) pw.ensure_grad();
    ArrX<S> dw_total = ArrX<S>::Zero(pw.value.size());
    for (Index b = 0; b < g.batch; ++b) {
      ArrX<S> col(patch * cols);
      detail::im2col(self.grad.data() + b * g.cout * g.h * g.w, g.cout, g.h, g.w, g.k, g.stride,
                     g.pad, g.ho, g.wo, col.data());
      if (px.requires_grad)
        MapMat<S>(px.grad.data() + b * g.cin * cols, g.cin, cols).noalias() +=
            MapConstMat<S>(pw.value.data(), g.cin, patch) * MapConstMat<S>(col.data(), patch, cols);
      if (pw.requires_grad)
        MapMat<S>(dw_total.data(), g.cin, patch).noalias() +=
            MapConstMat<S>(px.value.data() + b * g.cin * cols, g.cin, cols) *
            MapConstMat<S>(col.data(), patch, cols).transpose();
    }
    if (pw.requires_grad) pw.grad += dw_total;
    if (self.parents.size() == 3) {
      auto& pb = *self.parents[2];
      if (pb.requires_grad) {
        pb.ensure_grad();
        for (Index b = 0; b < g.batch; ++b)
          for (Index co = 0; co < g.cout; ++co)
            pb.grad[co] += self.grad.segment((b * g.cout + co) * g.h * g.w, g.h * g.w).sum();
      }
    }
  };
  Shape out_shape{g.batch, g.cout, g.h, g.w};
  if (bias.defined())
    return make_op<S>("deconv2d", std::move(out_shape), std::move(out), {x, w, bias}, back);
  return make_op<S>("deconv2d", std::move(out_shape), std::move(out), {x, w}, back);
}

}  // namespace stego
