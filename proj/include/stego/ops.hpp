#pragma once

#include "stego/tensor.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stego {

/// Deterministic work splitter: iterations write disjoint outputs, so thread
/// scheduling cannot change results.
template <typename Fn>
inline void parallel_for(Index n, Fn&& fn) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (n > 1)
#endif
  for (Index i = 0; i < n; ++i) fn(i);
}

namespace detail {

template <typename S>
inline void accumulate(typename Tensor<S>::Node& parent, const ArrX<S>& delta) {
  parent.ensure_grad();
  parent.grad += delta;
}

// Formats "op: got [AxB], expected ..." style messages lazily.
inline DimensionError dim_error(const std::string& msg) { return DimensionError(msg); }

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise

/// a + b where b's shape must equal a's shape or be a trailing suffix of it
/// (bias and positional-embedding adds broadcast over the leading axes).
template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sb.size() > sa.size() ||
      !std::equal(sb.begin(), sb.end(), sa.end() - static_cast<long>(sb.size())))
    throw detail::dim_error("add: shape " + shape_str(sb) + " is not a suffix of " + shape_str(sa));
  const Index nb = b.numel();
  const Index blocks = a.numel() / nb;
  ArrX<S> out(a.numel());
  for (Index k = 0; k < blocks; ++k)
    out.segment(k * nb, nb) = a.values().segment(k * nb, nb) + b.values();
  return make_op<S>("add", sa, std::move(out), {a, b},
                    [nb, blocks](typename Tensor<S>::Node& self) {
                      auto& pa = *self.parents[0];
                      auto& pb = *self.parents[1];
                      if (pa.requires_grad) detail::accumulate<S>(pa, self.grad);
                      if (pb.requires_grad) {
                        pb.ensure_grad();
                        for (Index k = 0; k < blocks; ++k)
                          pb.grad += self.grad.segment(k * nb, nb);
                      }
                    });
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
  if (!same_shape(a.shape(), b.shape()))
    throw detail::dim_error("sub: shapes " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  ArrX<S> out = a.values() - b.values();
  return make_op<S>("sub", a.shape(), std::move(out), {a, b},
                    [](typename Tensor<S>::Node& self) {
                      auto& pa = *self.parents[0];
                      auto& pb = *self.parents[1];
                      if (pa.requires_grad) detail::accumulate<S>(pa, self.grad);
                      if (pb.requires_grad) {
                        pb.ensure_grad();
                        pb.grad -= self.grad;
                      }
                    });
}

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  if (!same_shape(a.shape(), b.shape()))
    throw detail::dim_error("mul: shapes " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  ArrX<S> out = a.values() * b.values();
  return make_op<S>("mul", a.shape(), std::move(out), {a, b},
                    [](typename Tensor<S>::Node& self) {
                      auto& pa = *self.parents[0];
                      auto& pb = *self.parents[1];
                      if (pa.requires_grad) {
                        pa.ensure_grad();
                        pa.grad += self.grad * pb.value;
                      }
                      if (pb.requires_grad) {
                        pb.ensure_grad();
                        pb.grad += self.grad * pa.value;
                      }
                    });
}

template <typename S>
Tensor<S> scale(const Tensor<S>& a, S c) {
  ArrX<S> out = a.values() * c;
  return make_op<S>("scale", a.shape(), std::move(out), {a},
                    [c](typename Tensor<S>::Node& self) {
                      auto& pa = *self.parents[0];
                      if (pa.requires_grad) {
                        pa.ensure_grad();
                        pa.grad += self.grad * c;
                      }
                    });
}

template <typename S>
Tensor<S> add_scalar(const Tensor<S>& a, S c) {
  ArrX<S> out = a.values() + c;
  return make_op<S>("add_scalar", a.shape(), std::move(out), {a},
                    [](typename Tensor<S>::Node& self) {
                      auto& pa = *self.parents[0];
                      if (pa.requires_grad) detail::accumulate<S>(pa, self.grad);
                    });
}

template <typename S>
Tensor<S> neg(const Tensor<S>& a) {
  return scale(a, S(-1));
}

// ---------------------------------------------------------------------------
// activations

template <typename S>
Tensor<S> sigmoid(const Tensor<S>& x) {
  ArrX<S> out = (S(1) / (S(1) + (-x.values()).exp()));
  return make_op<S>("sigmoid", x.shape(), std::move(out), {x},
                    [](typename Tensor<S>::Node& self) {
                      auto& p = *self.parents[0];
                      if (!p.requires_grad) return;
                      p.ensure_grad();
                      p.grad += self.grad * self.value * (S(1) - self.value);
                    });
}

template <typename S>
Tensor<S> relu(const Tensor<S>& x) {
  ArrX<S> out = x.values().max(S(0));
  return make_op<S>("relu", x.shape(), std::move(out), {x},
                    [](typename Tensor<S>::Node& self) {
                      auto& p = *self.parents[0];
                      if (!p.requires_grad) return;
                      p.ensure_grad();
                      p.grad += self.grad * (p.value > S(0)).template cast<S>();
                    });
}

/// GELU, tanh form: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
template <typename S>
Tensor<S> gelu(const Tensor<S>& x) {
  const S k = static_cast<S>(0.7978845608028654);  // sqrt(2/pi)
  const S c = static_cast<S>(0.044715);
  ArrX<S> inner = k * (x.values() + c * x.values().cube());
  ArrX<S> t = inner.tanh();
  ArrX<S> out = S(0.5) * x.values() * (S(1) + t);
  return make_op<S>("gelu", x.shape(), std::move(out), {x},
                    [k, c, t = std::move(t)](typename Tensor<S>::Node& self) {
                      auto& p = *self.parents[0];
                      if (!p.requires_grad) return;
                      p.ensure_grad();
                      ArrX<S> sech2 = S(1) - t * t;
                      ArrX<S> dinner = k * (S(1) + S(3) * c * p.value.square());
                      p.grad += self.grad * (S(0.5) * (S(1) + t) + S(0.5) * p.value * sech2 * dinner);
                    });
}

template <typename S>
Tensor<S> sin_t(const Tensor<S>& x) {
  ArrX<S> out = x.values().sin();
  return make_op<S>("sin", x.shape(), std::move(out), {x},
                    [](typename Tensor<S>::Node& self) {
                      auto& p = *self.parents[0];
                      if (!p.requires_grad) return;
                      p.ensure_grad();
                      p.grad += self.grad * p.value.cos();
                    });
}

// ---------------------------------------------------------------------------
// matrix products

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw detail::dim_error("matmul: incompatible shapes " + shape_str(a.shape()) + " * " +
                            shape_str(b.shape()));
  const Index m = a.dim(0), k = a.dim(1), n = b.dim(1);
  ArrX<S> out(m * n);
  MapMat<S>(out.data(), m, n).noalias() =
      MapConstMat<S>(a.data(), m, k) * MapConstMat<S>(b.data(), k, n);
  return make_op<S>("matmul", {m, n}, std::move(out), {a, b},
                    [m, k, n](typename Tensor<S>::Node& self) {
                      auto& pa = *self.parents[0];
                      auto& pb = *self.parents[1];
                      MapConstMat<S> g(self.grad.data(), m, n);
                      if (pa.requires_grad) {
                        pa.ensure_grad();
                        MapMat<S>(pa.grad.data(), m, k).noalias() +=
                            g * MapConstMat<S>(pb.value.data(), k, n).transpose();
                      }
                      if (pb.requires_grad) {
                        pb.ensure_grad();
                        MapMat<S>(pb.grad.data(), k, n).noalias() +=
                            MapConstMat<S>(pa.value.data(), m, k).transpose() * g;
                      }
                    });
}

/// x[..., K] * W[K, M] (+ bias[M]): matmul over the last axis with all leading
/// axes flattened. Pass a default-constructed tensor to skip the bias.
template <typename S>
Tensor<S> linear(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& bias = {}) {
  if (w.rank() != 2 || x.rank() < 1 || x.shape().back() != w.dim(0))
    throw detail::dim_error("linear: input " + shape_str(x.shape()) + " vs weight " +
                            shape_str(w.shape()));
  const Index k = w.dim(0), m = w.dim(1);
  const Index rows = x.numel() / k;
  ArrX<S> out(rows * m);
  MapMat<S> o(out.data(), rows, m);
  o.noalias() = MapConstMat<S>(x.data(), rows, k) * MapConstMat<S>(w.data(), k, m);
  if (bias.defined()) {
    if (bias.numel() != m) throw detail::dim_error("linear: bias size mismatch");
    o.rowwise() += Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>>(bias.data(), m);
  }
  Shape out_shape(x.shape().begin(), x.shape().end() - 1);
  out_shape.push_back(m);

  auto back = [rows, k, m](typename Tensor<S>::Node& self) {
    auto& px = *self.parents[0];
    auto& pw = *self.parents[1];
    MapConstMat<S> g(self.grad.data(), rows, m);
    if (px.requires_grad) {
      px.ensure_grad();
      MapMat<S>(px.grad.data(), rows, k).noalias() +=
          g * MapConstMat<S>(pw.value.data(), k, m).transpose();
    }
    if (pw.requires_grad) {
      pw.ensure_grad();
      MapMat<S>(pw.grad.data(), k, m).noalias() +=
          MapConstMat<S>(px.value.data(), rows, k).transpose() * g;
    }
    if (self.parents.size() == 3) {
      auto& pb = *self.parents[2];
      if (pb.requires_grad) {
        pb.ensure_grad();
        Eigen::Map<Eigen::Matrix<S, 1, Eigen::Dynamic>>(pb.grad.data(), m) += g.colwise().sum();
      }
    }
  };
  if (bias.defined())
    return make_op<S>("linear", std::move(out_shape), std::move(out), {x, w, bias}, back);
  return make_op<S>("linear", std::move(out_shape), std::move(out), {x, w}, back);
}

// ---------------------------------------------------------------------------
// shape ops

template <typename S>
Tensor<S> reshape(const Tensor<S>& x, Shape shape) {
  if (shape_numel(shape) != x.numel())
    throw detail::dim_error("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape) +
                            " changes element count");
  ArrX<S> out = x.values();
  return make_op<S>("reshape", std::move(shape), std::move(out), {x},
                    [](typename Tensor<S>::Node& self) {
                      auto& p = *self.parents[0];
                      if (p.requires_grad) detail::accumulate<S>(p, self.grad);
                    });
}

/// Concatenate along `axis`; all other dimensions must match.
template <typename S>
Tensor<S> concat(const Tensor<S>& a, const Tensor<S>& b, size_t axis) {
  if (a.rank() != b.rank() || axis >= a.rank())
    throw detail::dim_error("concat: rank/axis mismatch");
  for (size_t i = 0; i < a.rank(); ++i)
    if (i != axis && a.dim(i) != b.dim(i))
      throw detail::dim_error("concat: shapes " + shape_str(a.shape()) + " vs " +
                              shape_str(b.shape()) + " differ off-axis");
  Index outer = 1, inner = 1;
  for (size_t i = 0; i < axis; ++i) outer *= a.dim(i);
  for (size_t i = axis + 1; i < a.rank(); ++i) inner *= a.dim(i);
  const Index ca = a.dim(axis) * inner, cb = b.dim(axis) * inner;
  ArrX<S> out(a.numel() + b.numel());
  for (Index o = 0; o < outer; ++o) {
    out.segment(o * (ca + cb), ca) = a.values().segment(o * ca, ca);
    out.segment(o * (ca + cb) + ca, cb) = b.values().segment(o * cb, cb);
  }
  Shape shape = a.shape();
  shape[axis] += b.dim(axis);
  return make_op<S>("concat", std::move(shape), std::move(out), {a, b},
                    [outer, ca, cb](typename Tensor<S>::Node& self) {
                      auto& pa = *self.parents[0];
                      auto& pb = *self.parents[1];
                      if (pa.requires_grad) {
                        pa.ensure_grad();
                        for (Index o = 0; o < outer; ++o)
                          pa.grad.segment(o * ca, ca) += self.grad.segment(o * (ca + cb), ca);
                      }
                      if (pb.requires_grad) {
                        pb.ensure_grad();
                        for (Index o = 0; o < outer; ++o)
                          pb.grad.segment(o * cb, cb) += self.grad.segment(o * (ca + cb) + ca, cb);
                      }
                    });
}

// ---------------------------------------------------------------------------
// reductions and normalization

template <typename S>
Tensor<S> sum(const Tensor<S>& x) {
  ArrX<S> out = ArrX<S>::Constant(1, x.values().sum());
  return make_op<S>("sum", {1}, std::move(out), {x},
                    [](typename Tensor<S>::Node& self) {
                      auto& p = *self.parents[0];
                      if (!p.requires_grad) return;
                      p.ensure_grad();
                      p.grad += self.grad[0];
                    });
}

template <typename S>
Tensor<S> mean(const Tensor<S>& x) {
  const S inv = S(1) / static_cast<S>(x.numel());
  ArrX<S> out = ArrX<S>::Constant(1, x.values().sum() * inv);
  return make_op<S>("mean", {1}, std::move(out), {x},
                    [inv](typename Tensor<S>::Node& self) {
                      auto& p = *self.parents[0];
                      if (!p.requires_grad) return;
                      p.ensure_grad();
                      p.grad += self.grad[0] * inv;
                    });
}

/// Softmax along `axis` (default: last). Rows are shifted by their max before
/// exponentiation.
template <typename S>
Tensor<S> softmax(const Tensor<S>& x, int axis = -1) {
  const size_t ax = axis < 0 ? x.rank() + static_cast<size_t>(axis + 1) - 1
                             : static_cast<size_t>(axis);
  if (ax >= x.rank()) throw detail::dim_error("softmax: axis out of range");
  Index outer = 1, inner = 1;
  const Index kdim = x.dim(ax);
  for (size_t i = 0; i < ax; ++i) outer *= x.dim(i);
  for (size_t i = ax + 1; i < x.rank(); ++i) inner *= x.dim(i);

  ArrX<S> out(x.numel());
  if (inner == 1) {
    MapConstMat<S> xin(x.data(), outer, kdim);
    MapMat<S> o(out.data(), outer, kdim);
    for (Index r = 0; r < outer; ++r) {
      ArrX<S> row = (xin.row(r).array() - xin.row(r).maxCoeff()).exp();
      o.row(r) = (row / row.sum()).matrix();
    }
  } else {
    for (Index o = 0; o < outer; ++o)
      for (Index i = 0; i < inner; ++i) {
        const Index base = o * kdim * inner + i;
        S mx = x.values()[base];
        for (Index k = 1; k < kdim; ++k) mx = std::max(mx, x.values()[base + k * inner]);
        S total = S(0);
        for (Index k = 0; k < kdim; ++k) {
          const S e = std::exp(x.values()[base + k * inner] - mx);
          out[base + k * inner] = e;
          total += e;
        }
        for (Index k = 0; k < kdim; ++k) out[base + k * inner] /= total;
      }
  }
  return make_op<S>("softmax", x.shape(), std::move(out), {x},
                    [outer, kdim, inner](typename Tensor<S>::Node& self) {
                      auto& p = *self.parents[0];
                      if (!p.requires_grad) return;
                      p.ensure_grad();
                      for (Index o = 0; o < outer; ++o)
                        for (Index i = 0; i < inner; ++i) {
                          const Index base = o * kdim * inner + i;
                          S dot = S(0);
                          for (Index k = 0; k < kdim; ++k)
                            dot += self.grad[base + k * inner] * self.value[base + k * inner];
                          for (Index k = 0; k < kdim; ++k)
                            p.grad[base + k * inner] += self.value[base + k * inner] *
                                                        (self.grad[base + k * inner] - dot);
                        }
                    });
}

/// Layer normalization over the last axis with learned gain/shift.
template <typename S>
Tensor<S> layer_norm(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                     S eps = static_cast<S>(1e-5)) {
  const Index c = x.shape().back();
  if (gamma.numel() != c || beta.numel() != c)
    throw detail::dim_error("layer_norm: gamma/beta length " + std::to_string(gamma.numel()) +
                            " vs channels " + std::to_string(c));
  const Index rows = x.numel() / c;
  ArrX<S> out(x.numel());
  ArrX<S> xhat(x.numel());
  ArrX<S> inv_std(rows);
  for (Index r = 0; r < rows; ++r) {
    auto xi = x.values().segment(r * c, c);
    const S mu = xi.mean();
    const S var = (xi - mu).square().sum() / static_cast<S>(c);
    const S is = S(1) / std::sqrt(var + eps);
    inv_std[r] = is;
    xhat.segment(r * c, c) = (xi - mu) * is;
    out.segment(r * c, c) = xhat.segment(r * c, c) * gamma.values() + beta.values();
  }
  return make_op<S>(
      "layer_norm", x.shape(), std::move(out), {x, gamma, beta},
      [rows, c, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          typename Tensor<S>::Node& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        for (Index r = 0; r < rows; ++r) {
          auto g = self.grad.segment(r * c, c);
          auto xh = xhat.segment(r * c, c);
          if (pg.requires_grad) {
            pg.ensure_grad();
            pg.grad += g * xh;
          }
          if (pb.requires_grad) {
            pb.ensure_grad();
            pb.grad += g;
          }
          if (px.requires_grad) {
            px.ensure_grad();
            ArrX<S> gg = g * pg.value;  // dL/dxhat
            const S m1 = gg.mean();
            const S m2 = (gg * xh).mean();
            px.grad.segment(r * c, c) += (gg - m1 - xh * m2) * inv_std[r];
          }
        }
      });
}

// ---------------------------------------------------------------------------
// losses

template <typename S>
Tensor<S> mse_loss(const Tensor<S>& a, const Tensor<S>& b) {
  if (!same_shape(a.shape(), b.shape()))
    throw detail::dim_error("mse_loss: shapes " + shape_str(a.shape()) + " vs " +
                            shape_str(b.shape()));
  const S inv = S(1) / static_cast<S>(a.numel());
  ArrX<S> diff = a.values() - b.values();
  ArrX<S> out = ArrX<S>::Constant(1, diff.square().sum() * inv);
  return make_op<S>("mse_loss", {1}, std::move(out), {a, b},
                    [inv, diff = std::move(diff)](typename Tensor<S>::Node& self) {
                      auto& pa = *self.parents[0];
                      auto& pb = *self.parents[1];
                      const S g = self.grad[0] * S(2) * inv;
                      if (pa.requires_grad) {
                        pa.ensure_grad();
                        pa.grad += g * diff;
                      }
                      if (pb.requires_grad) {
                        pb.ensure_grad();
                        pb.grad -= g * diff;
                      }
                    });
}

/// Mean binary cross-entropy computed from logits in the stable
/// max(z,0) - z t + log(1 + exp(-|z|)) form.
template <typename S>
Tensor<S> bce_with_logits_loss(const Tensor<S>& logits, const Tensor<S>& targets) {
  if (!same_shape(logits.shape(), targets.shape()))
    throw detail::dim_error("bce_with_logits_loss: shape mismatch");
  const S inv = S(1) / static_cast<S>(logits.numel());
  const auto& z = logits.values();
  const auto& t = targets.values();
  ArrX<S> loss = z.max(S(0)) - z * t + (S(1) + (-z.abs()).exp()).log();
  ArrX<S> out = ArrX<S>::Constant(1, loss.sum() * inv);
  return make_op<S>("bce_with_logits", {1}, std::move(out), {logits, targets},
                    [inv](typename Tensor<S>::Node& self) {
                      auto& pz = *self.parents[0];
                      auto& pt = *self.parents[1];
                      const S g = self.grad[0] * inv;
                      ArrX<S> sig = S(1) / (S(1) + (-pz.value).exp());
                      if (pz.requires_grad) {
                        pz.ensure_grad();
                        pz.grad += g * (sig - pt.value);
                      }
                      if (pt.requires_grad) {
                        pt.ensure_grad();
                        pt.grad += g * (-pz.value);
                      }
                    });
}

}  // namespace stego
