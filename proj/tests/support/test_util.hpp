#pragma once

#include "stego/rng.hpp"
#include "stego/tensor.hpp"

#include <Eigen/Dense>

namespace stego::test {

template <typename S>
Tensor<S> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0,
                        bool requires_grad = false) {
  const Index n = shape_numel(shape);
  ArrX<S> v(n);
  for (Index i = 0; i < n; ++i) v[i] = static_cast<S>(rng.uniform(lo, hi));
  return Tensor<S>::from_array(std::move(shape), std::move(v), requires_grad);
}

template <typename S>
double max_abs_diff(const Tensor<S>& a, const Tensor<S>& b) {
  return (a.values().template cast<double>() - b.values().template cast<double>())
      .abs()
      .maxCoeff();
}

template <typename S>
bool bitwise_equal(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.numel() != b.numel()) return false;
  for (Index i = 0; i < a.numel(); ++i)
    if (a.values()[i] != b.values()[i]) return false;
  return true;
}

/// Brute-force symmetric eigensolver (cyclic Jacobi), used as an independent
/// oracle for spectrum checks. Returns eigenvalues in descending order.
inline std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd m, int sweeps = 100,
                                              double tol = 1e-14) {
  const Eigen::Index n = m.rows();
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += m(p, q) * m(p, q);
    if (off < tol * std::max(1.0, m.diagonal().cwiseAbs().maxCoeff())) break;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(m(p, q)) < 1e-300) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        Eigen::MatrixXd j = Eigen::MatrixXd::Identity(n, n);
        j(p, p) = c;
        j(q, q) = c;
        j(p, q) = s;
        j(q, p) = -s;
        m = j.transpose() * m * j;
      }
  }
  std::vector<double> evs(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) evs[static_cast<size_t>(i)] = m(i, i);
  std::sort(evs.begin(), evs.end(), std::greater<double>());
  return evs;
}

}  // namespace stego::test
