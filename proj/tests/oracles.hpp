#pragma once

// Test-only oracles, independent of the library's computation paths.

#include <Eigen/Dense>
#include <random>

namespace oracles {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Matrix exponential by scaled Taylor series with repeated squaring.
inline Mat expm(const Mat& A) {
  const int n = static_cast<int>(A.rows());
  int squarings = 0;
  double nrm = A.cwiseAbs().rowwise().sum().maxCoeff();
  while (nrm > 0.5) {
    nrm /= 2;
    ++squarings;
  }
  const Mat B = A / std::pow(2.0, squarings);
  Mat term = Mat::Identity(n, n);
  Mat sum = term;
  for (int k = 1; k <= 30; ++k) {
    term = term * B / k;
    sum += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18) break;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

/// Central finite difference of a vector map.
template <typename F>
Mat central_jacobian(F&& f, const Vec& x, double rel_step = 1e-6) {
  const Vec fx = f(x);
  Mat J(fx.size(), x.size());
  for (int c = 0; c < x.size(); ++c) {
    const double h = rel_step * std::max(1.0, std::abs(x[c]));
    Vec xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    J.col(c) = (f(xp) - f(xm)) / (2 * h);
  }
  return J;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1e-300, std::abs(want));
}

inline double max_rel_err(const Mat& got, const Mat& want) {
  double worst = 0;
  for (int r = 0; r < got.rows(); ++r)
    for (int c = 0; c < got.cols(); ++c)
      worst = std::max(worst, std::abs(got(r, c) - want(r, c)) /
                                  std::max(1e-12, std::abs(want(r, c))));
  return worst;
}

inline std::mt19937_64 rng(unsigned seed = 20240817u) { return std::mt19937_64{seed}; }

}  // namespace oracles
