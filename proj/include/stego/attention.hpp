#pragma once

#include "stego/ops.hpp"

namespace stego {

/// [B,C,H,W] -> [B, H*W, C] token view (raster order).
template <typename S>
Tensor<S> nchw_to_tokens(const Tensor<S>& x) {
  if (x.rank() != 4) throw detail::dim_error("nchw_to_tokens: expected 4-d input");
  const Index b = x.dim(0), c = x.dim(1), n = x.dim(2) * x.dim(3);
  ArrX<S> out(x.numel());
  for (Index i = 0; i < b; ++i)
    MapMat<S>(out.data() + i * n * c, n, c) =
        MapConstMat<S>(x.data() + i * n * c, c, n).transpose();
  return make_op<S>("nchw_to_tokens", {b, n, c}, std::move(out), {x},
                    [b, c, n](typename Tensor<S>::Node& self) {
                      auto& p = *self.parents[0];
                      if (!p.requires_grad) return;
                      p.ensure_grad();
                      for (Index i = 0; i < b; ++i)
                        MapMat<S>(p.grad.data() + i * n * c, c, n) +=
                            MapConstMat<S>(self.grad.data() + i * n * c, n, c).transpose();
                    });
}

/// [B, H*W, C] -> [B,C,H,W].
template <typename S>
Tensor<S> tokens_to_nchw(const Tensor<S>& x, Index h, Index w) {
  if (x.rank() != 3 || x.dim(1) != h * w)
    throw detail::dim_error("tokens_to_nchw: token count mismatch");
  const Index b = x.dim(0), c = x.dim(2), n = h * w;
  ArrX<S> out(x.numel());
  for (Index i = 0; i < b; ++i)
    MapMat<S>(out.data() + i * n * c, c, n) =
        MapConstMat<S>(x.data() + i * n * c, n, c).transpose();
  return make_op<S>("tokens_to_nchw", {b, c, h, w}, std::move(out), {x},
                    [b, c, n](typename Tensor<S>::Node& self) {
                      auto& p = *self.parents[0];
                      if (!p.requires_grad) return;
                      p.ensure_grad();
                      for (Index i = 0; i < b; ++i)
                        MapMat<S>(p.grad.data() + i * n * c, n, c) +=
                            MapConstMat<S>(self.grad.data() + i * n * c, c, n).transpose();
                    });
}

namespace detail {

// Row permutation over C-sized chunks shared by the window/head gathers.
template <typename S, typename MapFn>
ArrX<S> gather_chunks(const ArrX<S>& in, Index rows, Index chunk, MapFn&& src_of) {
  ArrX<S> out(rows * chunk);
  for (Index r = 0; r < rows; ++r)
    out.segment(r * chunk, chunk) = in.segment(src_of(r) * chunk, chunk);
  return out;
}

template <typename S, typename MapFn>
void scatter_chunks(const ArrX<S>& grad_out, Index rows, Index chunk, MapFn&& src_of,
                    ArrX<S>& grad_in) {
  for (Index r = 0; r < rows; ++r)
    grad_in.segment(src_of(r) * chunk, chunk) += grad_out.segment(r * chunk, chunk);
}

inline void check_window(Index h, Index w, Index win, const char* who) {
  if (win <= 0 || h % win != 0 || w % win != 0)
    throw ConfigError(std::string(who) + ": window " + std::to_string(win) +
                      " does not tile a " + std::to_string(h) + "x" + std::to_string(w) +
                      " grid");
}

}  // namespace detail

/// Partition a [B, H*W, C] token grid into non-overlapping win x win windows:
/// output [B*nw, win*win, C], windows in raster order, tokens raster within.
template <typename S>
Tensor<S> window_partition(const Tensor<S>& x, Index h, Index w, Index win) {
  if (x.rank() != 3 || x.dim(1) != h * w)
    throw detail::dim_error("window_partition: token count mismatch");
  detail::check_window(h, w, win, "window_partition");
  const Index b = x.dim(0), c = x.dim(2);
  const Index wx_count = w / win;
  const Index per_image = h * w;
  const Index rows = b * per_image;
  auto src_of = [=](Index r) {
    const Index bi = r / per_image;
    const Index rem = r % per_image;
    const Index wi = rem / (win * win);
    const Index t = rem % (win * win);
    const Index gy = (wi / wx_count) * win + t / win;
    const Index gx = (wi % wx_count) * win + t % win;
    return bi * per_image + gy * w + gx;
  };
  ArrX<S> out = detail::gather_chunks(x.values(), rows, c, src_of);
  return make_op<S>("window_partition", {b * (h / win) * wx_count, win * win, c}, std::move(out),
                    {x}, [rows, c, src_of](typename Tensor<S>::Node& self) {
                      auto& p = *self.parents[0];
                      if (!p.requires_grad) return;
                      p.ensure_grad();
                      detail::scatter_chunks(self.grad, rows, c, src_of, p.grad);
                    });
}

/// Inverse of window_partition.
template <typename S>
Tensor<S> window_merge(const Tensor<S>& x, Index h, Index w, Index win) {
  detail::check_window(h, w, win, "window_merge");
  const Index c = x.dim(2);
  const Index nw = (h / win) * (w / win);
  if (x.rank() != 3 || x.dim(1) != win * win || x.dim(0) % nw != 0)
    throw detail::dim_error("window_merge: input is not a window partition of the grid");
  const Index b = x.dim(0) / nw;
  const Index wx_count = w / win;
  const Index per_image = h * w;
  const Index rows = b * per_image;
  auto src_of = [=](Index r) {
    const Index bi = r / per_image;
    const Index rem = r % per_image;
    const Index gy = rem / w, gx = rem % w;
    const Index wi = (gy / win) * wx_count + gx / win;
    const Index t = (gy % win) * win + gx % win;
    return (bi * nw + wi) * (win * win) + t;
  };
  ArrX<S> out = detail::gather_chunks(x.values(), rows, c, src_of);
  return make_op<S>("window_merge", {b, per_image, c}, std::move(out), {x},
                    [rows, c, src_of](typename Tensor<S>::Node& self) {
                      auto& p = *self.parents[0];
                      if (!p.requires_grad) return;
                      p.ensure_grad();
                      detail::scatter_chunks(self.grad, rows, c, src_of, p.grad);
                    });
}

/// Swin-style patch merging gather: [B, H*W, C] -> [B, H*W/4, 4C], each output
/// row concatenating the (tl, tr, bl, br) tokens of a 2x2 block.
template <typename S>
Tensor<S> merge_tokens_2x2(const Tensor<S>& x, Index h, Index w) {
  if (x.rank() != 3 || x.dim(1) != h * w)
    throw detail::dim_error("merge_tokens_2x2: token count mismatch");
  if (h % 2 != 0 || w % 2 != 0) throw ConfigError("merge_tokens_2x2: odd grid");
  const Index b = x.dim(0), c = x.dim(2);
  const Index h2 = h / 2, w2 = w / 2;
  const Index rows = b * h2 * w2 * 4;  // four source tokens per output row
  auto src_of = [=](Index r) {
    const Index q = r % 4;
    const Index cell = r / 4;
    const Index bi = cell / (h2 * w2);
    const Index rem = cell % (h2 * w2);
    const Index y = 2 * (rem / w2) + q / 2;
    const Index xx = 2 * (rem % w2) + q % 2;
    return bi * h * w + y * w + xx;
  };
  ArrX<S> out = detail::gather_chunks(x.values(), rows, c, src_of);
  return make_op<S>("merge_tokens_2x2", {b, h2 * w2, 4 * c}, std::move(out), {x},
                    [rows, c, src_of](typename Tensor<S>::Node& self) {
                      auto& p = *self.parents[0];
                      if (!p.requires_grad) return;
                      p.ensure_grad();
                      detail::scatter_chunks(self.grad, rows, c, src_of, p.grad);
                    });
}

/// [G, N, C] -> [G*heads, N, C/heads].
template <typename S>
Tensor<S> split_heads(const Tensor<S>& x, Index heads) {
  if (x.rank() != 3) throw detail::dim_error("split_heads: expected 3-d input");
  const Index g = x.dim(0), n = x.dim(1), c = x.dim(2);
  if (c % heads != 0)
    throw ConfigError("split_heads: " + std::to_string(c) + " channels not divisible by " +
                      std::to_string(heads) + " heads");
  const Index d = c / heads;
  ArrX<S> out(x.numel());
  for (Index gi = 0; gi < g; ++gi)
    for (Index hd = 0; hd < heads; ++hd)
      for (Index t = 0; t < n; ++t)
        out.segment(((gi * heads + hd) * n + t) * d, d) =
            x.values().segment((gi * n + t) * c + hd * d, d);
  return make_op<S>("split_heads", {g * heads, n, d}, std::move(out), {x},
                    [g, heads, n, c, d](typename Tensor<S>::Node& self) {
                      auto& p = *self.parents[0];
                      if (!p.requires_grad) return;
                      p.ensure_grad();
                      for (Index gi = 0; gi < g; ++gi)
                        for (Index hd = 0; hd < heads; ++hd)
                          for (Index t = 0; t < n; ++t)
                            p.grad.segment((gi * n + t) * c + hd * d, d) +=
                                self.grad.segment(((gi * heads + hd) * n + t) * d, d);
                    });
}

/// Inverse of split_heads: [G*heads, N, d] -> [G, N, heads*d].
template <typename S>
Tensor<S> merge_heads(const Tensor<S>& x, Index heads) {
  if (x.rank() != 3 || x.dim(0) % heads != 0)
    throw detail::dim_error("merge_heads: group count not divisible by heads");
  const Index g = x.dim(0) / heads, n = x.dim(1), d = x.dim(2);
  const Index c = heads * d;
  ArrX<S> out(x.numel());
  for (Index gi = 0; gi < g; ++gi)
    for (Index hd = 0; hd < heads; ++hd)
      for (Index t = 0; t < n; ++t)
        out.segment((gi * n + t) * c + hd * d, d) =
            x.values().segment(((gi * heads + hd) * n + t) * d, d);
  return make_op<S>("merge_heads", {g, n, c}, std::move(out), {x},
                    [g, heads, n, c, d](typename Tensor<S>::Node& self) {
                      auto& p = *self.parents[0];
                      if (!p.requires_grad) return;
                      p.ensure_grad();
                      for (Index gi = 0; gi < g; ++gi)
                        for (Index hd = 0; hd < heads; ++hd)
                          for (Index t = 0; t < n; ++t)
                            p.grad.segment(((gi * heads + hd) * n + t) * d, d) +=
                                self.grad.segment((gi * n + t) * c + hd * d, d);
                    });
}

/// Batched matmul: [G,N,K] x [G,K,M] -> [G,N,M].
template <typename S>
Tensor<S> bmm(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1))
    throw detail::dim_error("bmm: incompatible shapes " + shape_str(a.shape()) + " x " +
                            shape_str(b.shape()));
  const Index g = a.dim(0), n = a.dim(1), k = a.dim(2), m = b.dim(2);
  ArrX<S> out(g * n * m);
  parallel_for(g, [&](Index i) {
    MapMat<S>(out.data() + i * n * m, n, m).noalias() =
        MapConstMat<S>(a.data() + i * n * k, n, k) * MapConstMat<S>(b.data() + i * k * m, k, m);
  });
  return make_op<S>("bmm", {g, n, m}, std::move(out), {a, b},
                    [g, n, k, m](typename Tensor<S>::Node& self) {
                      auto& pa = *self.parents[0];
                      auto& pb = *self.parents[1];
                      if (pa.requires_grad) pa.ensure_grad();
                      if (pb.requires_grad) pb.ensure_grad();
                      parallel_for(g, [&](Index i) {
                        MapConstMat<S> gr(self.grad.data() + i * n * m, n, m);
                        if (pa.requires_grad)
                          MapMat<S>(pa.grad.data() + i * n * k, n, k).noalias() +=
                              gr * MapConstMat<S>(pb.value.data() + i * k * m, k, m).transpose();
                        if (pb.requires_grad)
                          MapMat<S>(pb.grad.data() + i * k * m, k, m).noalias() +=
                              MapConstMat<S>(pa.value.data() + i * n * k, n, k).transpose() * gr;
                      });
                    });
}

/// Batched matmul with transposed right operand: [G,N,K] x [G,M,K] -> [G,N,M].
template <typename S>
Tensor<S> bmm_nt(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2))
    throw detail::dim_error("bmm_nt: incompatible shapes " + shape_str(a.shape()) + " x " +
                            shape_str(b.shape()) + "^T");
  const Index g = a.dim(0), n = a.dim(1), k = a.dim(2), m = b.dim(1);
  ArrX<S> out(g * n * m);
  parallel_for(g, [&](Index i) {
    MapMat<S>(out.data() + i * n * m, n, m).noalias() =
        MapConstMat<S>(a.data() + i * n * k, n, k) *
        MapConstMat<S>(b.data() + i * m * k, m, k).transpose();
  });
  return make_op<S>("bmm_nt", {g, n, m}, std::move(out), {a, b},
                    [g, n, k, m](typename Tensor<S>::Node& self) {
                      auto& pa = *self.parents[0];
                      auto& pb = *self.parents[1];
                      if (pa.requires_grad) pa.ensure_grad();
                      if (pb.requires_grad) pb.ensure_grad();
                      parallel_for(g, [&](Index i) {
                        MapConstMat<S> gr(self.grad.data() + i * n * m, n, m);
                        if (pa.requires_grad)
                          MapMat<S>(pa.grad.data() + i * n * k, n, k).noalias() +=
                              gr * MapConstMat<S>(pb.value.data() + i * m * k, m, k);
                        if (pb.requires_grad)
                          MapMat<S>(pb.grad.data() + i * m * k, m, k).noalias() +=
                              gr.transpose() * MapConstMat<S>(pa.value.data() + i * n * k, n, k);
                      });
                    });
}

template <typename S>
struct AttnParams {
  Tensor<S> wq, bq, wk, bk, wv, bv, wo, bo;
};

/// Scaled dot-product attention with separate query and key/value sources.
/// Accepts [N,C] or [G,N,C]; query and key/value sources must agree on G and C.
template <typename S>
Tensor<S> attention(const Tensor<S>& q_src, const Tensor<S>& kv_src, const AttnParams<S>& p,
                    Index heads) {
  Tensor<S> q_in = q_src.rank() == 2 ? reshape(q_src, {1, q_src.dim(0), q_src.dim(1)}) : q_src;
  Tensor<S> kv_in = kv_src.rank() == 2 ? reshape(kv_src, {1, kv_src.dim(0), kv_src.dim(1)}) : kv_src;
  if (q_in.rank() != 3 || kv_in.rank() != 3 || q_in.dim(0) != kv_in.dim(0) ||
      q_in.dim(2) != kv_in.dim(2))
    throw detail::dim_error("attention: query/key-value source mismatch");
  const Index c = q_in.dim(2);
  if (heads <= 0 || c % heads != 0)
    throw ConfigError("attention: " + std::to_string(c) + " channels not divisible by " +
                      std::to_string(heads) + " heads");
  const Index d = c / heads;

  Tensor<S> q = split_heads(linear(q_in, p.wq, p.bq), heads);
  Tensor<S> k = split_heads(linear(kv_in, p.wk, p.bk), heads);
  Tensor<S> v = split_heads(linear(kv_in, p.wv, p.bv), heads);
  Tensor<S> scores = scale(bmm_nt(q, k), static_cast<S>(1.0 / std::sqrt(static_cast<double>(d))));
  Tensor<S> ctx = bmm(softmax(scores, -1), v);
  Tensor<S> out = linear(merge_heads(ctx, heads), p.wo, p.bo);
  if (q_src.rank() == 2) return reshape(out, {out.dim(1), out.dim(2)});
  return out;
}

/// Standard multi-head self-attention over tokens.
template <typename S>
Tensor<S> mhsa(const Tensor<S>& x, const AttnParams<S>& p, Index heads) {
  return attention(x, x, p, heads);
}

/// Multi-head attention restricted to non-overlapping win x win windows of an
/// h x w token grid. Queries and keys/values may come from different sources.
template <typename S>
Tensor<S> windowed_attention(const Tensor<S>& q_src, const Tensor<S>& kv_src,
                             const AttnParams<S>& p, Index heads, Index h, Index w, Index win) {
  Tensor<S> qw = window_partition(q_src, h, w, win);
  Tensor<S> kvw = q_src.node() == kv_src.node() ? qw : window_partition(kv_src, h, w, win);
  Tensor<S> out = attention(qw, kvw, p, heads);
  return window_merge(out, h, w, win);
}

}  // namespace stego
