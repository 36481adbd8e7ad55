#include "stego/pe_spectrum.hpp"

#include <algorithm>

namespace stego {

SpectrumReport pe_spectrum(const Eigen::MatrixXd& embedding, bool center) {
  if (embedding.rows() < 2) throw DimensionError("pe_spectrum: need at least 2 rows");
  Eigen::MatrixXd x = embedding;
  if (center) {
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
  }
  // The smaller-side Gram matrix carries the same nonzero spectrum.
  Eigen::MatrixXd gram;
  if (x.cols() <= x.rows())
    gram = x.transpose() * x;
  else
    gram = x * x.transpose();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) throw NumericError("pe_spectrum: eigensolver failed");
  std::vector<double> evs(solver.eigenvalues().data(),
                          solver.eigenvalues().data() + solver.eigenvalues().size());
  std::sort(evs.begin(), evs.end(), std::greater<double>());

  SpectrumReport report;
  const double lmax = evs.empty() ? 0.0 : std::max(evs.front(), 0.0);
  if (lmax <= 1e-30) {
    report.degenerate = true;
    return report;
  }
  const double cut = 1e-10 * lmax;
  double total = 0.0;
  for (double v : evs) {
    if (v < cut) break;  // numerical rank reached
    report.eigenvalues.push_back(std::max(v, 0.0));
    total += report.eigenvalues.back();
  }
  double run = 0.0;
  for (double v : report.eigenvalues) {
    run += v;
    report.cumulative_ratio.push_back(run / total);
  }
  return report;
}

}  // namespace stego
