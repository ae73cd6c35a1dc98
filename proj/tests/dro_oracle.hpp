#pragma once

// Brute-force references for the DRO engine, written without reusing its code paths.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace drsc::test {

inline double oracle_h(double sigma, double lambda, double epsilon, const Eigen::VectorXd& norms) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < norms.size(); ++j) {
    const double gap = sigma > norms(j) ? sigma - norms(j) : 0.0;
    const double term = 1.0 - lambda * gap;
    sum += term > 0.0 ? term : 0.0;
  }
  return lambda * epsilon + sum / static_cast<double>(norms.size());
}

/// Minimum over lambda >= 0 by direct evaluation at zero and at every breakpoint.
inline double oracle_min_h(double sigma, double epsilon, const Eigen::VectorXd& norms) {
  double best = oracle_h(sigma, 0.0, epsilon, norms);
  for (Eigen::Index j = 0; j < norms.size(); ++j)
    if (sigma > norms(j)) best = std::min(best, oracle_h(sigma, 1.0 / (sigma - norms(j)), epsilon, norms));
  return best;
}

/// Smallest sigma on a two-level grid over [0, sigma_max] (1000 points, then 1000
/// points inside the bracketing cell) at which min over lambda of h is <= eta.
inline double oracle_sigma(const Eigen::VectorXd& norms, double epsilon, double eta, double sigma_max) {
  constexpr int kPoints = 1000;
  const auto first_feasible = [&](double lo, double hi) {
    for (int i = 0; i <= kPoints; ++i) {
      const double s = lo + (hi - lo) * i / kPoints;
      if (oracle_min_h(s, epsilon, norms) <= eta) return i;
    }
    return -1;
  };
  const int coarse = first_feasible(0.0, sigma_max);
  if (coarse <= 0) return coarse == 0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
  const double cell = sigma_max / kPoints;
  const double lo = cell * (coarse - 1);
  const int fine = first_feasible(lo, lo + cell);
  return lo + cell * fine / kPoints;
}

}  // namespace drsc::test
