#pragma once

#include "stego/common.hpp"

#include <Eigen/Dense>

namespace stego {

/// Eigenvalue mass profile of a positional-embedding matrix: the nonzero
/// covariance spectrum in descending order plus cumulative top-n ratios
/// r(n) = sum_{i<=n} lambda_i / sum lambda_i.
struct SpectrumReport {
  std::vector<double> eigenvalues;
  std::vector<double> cumulative_ratio;
  bool degenerate = false;  // all rows equal after centering: zero spectrum
};

/// Spectrum of the Gram-derived covariance of the embedding rows. With
/// `center` the mean row is subtracted first (the analysis default).
SpectrumReport pe_spectrum(const Eigen::MatrixXd& embedding, bool center = true);

}  // namespace stego
