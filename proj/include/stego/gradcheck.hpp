#pragma once

#include "stego/rng.hpp"
#include "stego/tensor.hpp"

#include <vector>

namespace stego {

struct GradCheckOptions {
  double h = 1e-5;
  /// Coordinates checked per tensor; <= 0 means every coordinate. Sampled
  /// coordinates are drawn with the seed below so reruns agree.
  Index coords_per_tensor = -1;
  uint64_t sample_seed = 12345;
};

/// Compares reverse-mode gradients of a scalar-valued function against central
/// finite differences, in double precision. Returns the max relative error
///   |analytic - fd| / max(|analytic|, |fd|, 1e-8)
/// over all checked coordinates.
template <typename F>
double gradcheck(F&& f, std::vector<Tensor<double>> params,
                 GradCheckOptions opt = {}) {
  CheckedModeGuard checked(true);
  for (auto& p : params) {
    p.node()->requires_grad = true;
    p.zero_grad();
  }
  Tensor<double> loss = f();
  loss.backward();
  std::vector<ArrX<double>> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) analytic.push_back(p.grad());

  Rng pick(opt.sample_seed);
  double max_err = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    std::vector<Index> coords;
    if (opt.coords_per_tensor <= 0 || opt.coords_per_tensor >= p.numel()) {
      coords.resize(static_cast<size_t>(p.numel()));
      for (Index i = 0; i < p.numel(); ++i) coords[static_cast<size_t>(i)] = i;
    } else {
      for (Index i = 0; i < opt.coords_per_tensor; ++i)
        coords.push_back(static_cast<Index>(pick.uniform_int(static_cast<uint64_t>(p.numel()))));
    }
    for (Index ci : coords) {
      const double orig = p.values()[ci];
      p.values_mut()[ci] = orig + opt.h;
      const double fp = f().scalar();
      p.values_mut()[ci] = orig - opt.h;
      const double fm = f().scalar();
      p.values_mut()[ci] = orig;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw NumericError("gradcheck: non-finite function value");
      const double fd = (fp - fm) / (2.0 * opt.h);
      const double a = analytic[pi][ci];
      const double err = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-8});
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

}  // namespace stego
