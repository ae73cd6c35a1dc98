#pragma once

#include "drsc/common/error.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

namespace drsc::dro {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Whitened residuals theta_i = (Sigma + ridge I)^{-1/2} (R_i - mu).
template <typename Scalar>
struct NormalizedSamples {
  MatrixX<Scalar> theta;         // l x m
  VectorX<Scalar> mean;          // mu, m
  MatrixX<Scalar> covariance;    // population covariance, without the ridge
  MatrixX<Scalar> sqrt_cov;      // (Sigma + ridge I)^{1/2}
  MatrixX<Scalar> inv_sqrt_cov;  // (Sigma + ridge I)^{-1/2}
  VectorX<Scalar> inf_norms;     // ||theta_i||_inf
  Scalar ridge = 0;
  Scalar sigma_max = 0;

  [[nodiscard]] Eigen::Index samples() const { return theta.rows(); }
  [[nodiscard]] Eigen::Index dims() const { return theta.cols(); }
};

template <typename Scalar>
Scalar default_ridge(const MatrixX<Scalar>& covariance) {
  return Scalar(1e-10) * covariance.trace() / static_cast<Scalar>(covariance.rows());
}

/// Whitening of the rows of `residuals` (l x m). The covariance is the population
/// covariance (1/l). `ridge` defaults to 1e-10 tr(Sigma)/m and sigma_max to
/// `sigma_max_factor` times the largest sample infinity norm.
template <typename Derived>
NormalizedSamples<typename Derived::Scalar> normalize(const Eigen::MatrixBase<Derived>& residuals,
                                                      std::optional<typename Derived::Scalar> ridge = std::nullopt,
                                                      typename Derived::Scalar sigma_max_factor = 3) {
  using Scalar = typename Derived::Scalar;
  const auto l = residuals.rows();
  const auto m = residuals.cols();
  if (l < 2 || m < 1) throw DegenerateData("normalization needs at least two residual samples");
  if (!residuals.allFinite()) throw DegenerateData("residuals contain non-finite values");

  NormalizedSamples<Scalar> out;
  out.mean = residuals.colwise().mean().transpose();
  const MatrixX<Scalar> centered = residuals.rowwise() - out.mean.transpose();
  out.covariance = centered.transpose() * centered / static_cast<Scalar>(l);
  out.ridge = ridge ? *ridge : default_ridge<Scalar>(out.covariance);

  const MatrixX<Scalar> regularized = out.covariance + out.ridge * MatrixX<Scalar>::Identity(m, m);
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(regularized);
  if (eig.info() != Eigen::Success) throw SingularCovariance("eigendecomposition failed");
  const VectorX<Scalar>& ev = eig.eigenvalues();
  if (!(ev.minCoeff() > std::numeric_limits<Scalar>::epsilon() * std::max(ev.maxCoeff(), Scalar(0))))
    throw SingularCovariance("covariance plus ridge is not positive definite");
  const auto& v = eig.eigenvectors();
  out.sqrt_cov = v * ev.cwiseSqrt().asDiagonal() * v.transpose();
  out.inv_sqrt_cov = v * ev.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();

  out.theta = centered * out.inv_sqrt_cov;  // inv_sqrt_cov is symmetric
  out.inf_norms = out.theta.rowwise().template lpNorm<Eigen::Infinity>();
  out.sigma_max = sigma_max_factor * out.inf_norms.maxCoeff();
  return out;
}

/// sqrt((2/l) ln(1/(1-beta))), the sample-size factor shared by both radius formulas.
template <typename Scalar>
Scalar radius_factor(Eigen::Index l, Scalar beta) {
  if (l < 1) throw ConfigError("radius needs at least one sample");
  if (!(beta > 0 && beta < 1)) throw ConfigError("confidence beta must lie in (0, 1)");
  return std::sqrt(Scalar(2) / static_cast<Scalar>(l) * std::log(Scalar(1) / (Scalar(1) - beta)));
}

template <typename Scalar>
Scalar radius_diameter(Scalar diameter, Eigen::Index l, Scalar beta) {
  if (!(diameter > 0)) throw ConfigError("support diameter must be positive");
  return diameter * radius_factor(l, beta);
}

/// Infinity-norm diameter of the sample set: the largest per-coordinate range.
template <typename Derived>
typename Derived::Scalar sample_diameter(const Eigen::MatrixBase<Derived>& theta) {
  return (theta.colwise().maxCoeff() - theta.colwise().minCoeff()).maxCoeff();
}

template <typename Scalar>
struct ConcentrationResult {
  Scalar constant = 0;  // C
  Scalar epsilon = 0;
  Scalar alpha = 0;     // minimizing alpha
};

/// Objective of the concentration-constant program,
/// f(alpha) = (1 / 2 alpha) (1 + ln((1/l) sum_k exp(alpha d_k^2))), with a shifted log-sum-exp.
template <typename Scalar>
Scalar concentration_objective(Scalar alpha, const VectorX<Scalar>& d2) {
  const Scalar top = d2.maxCoeff();
  const Scalar lse = alpha * top + std::log(((d2.array() - top) * alpha).exp().mean());
  return (Scalar(1) + lse) / (Scalar(2) * alpha);
}

/// Search interval for alpha: [1e-6, 700 / max d^2], the upper end being where the
/// unshifted exponential would overflow. Capped at 1e6 when all distances vanish.
template <typename Scalar>
std::pair<Scalar, Scalar> concentration_alpha_range(const VectorX<Scalar>& d2) {
  const Scalar lo = Scalar(1e-6);
  const Scalar top = d2.maxCoeff();
  const Scalar hi = top > Scalar(700e-6) ? Scalar(700) / top : Scalar(1e6);
  return {lo, hi};
}

/// Squared l1 distances of the samples from their mean.
template <typename Derived>
VectorX<typename Derived::Scalar> concentration_distances(const Eigen::MatrixBase<Derived>& theta) {
  using Scalar = typename Derived::Scalar;
  const VectorX<Scalar> center = theta.colwise().mean().transpose();
  return (theta.rowwise() - center.transpose()).rowwise().template lpNorm<1>().array().square();
}

template <typename Derived>
ConcentrationResult<typename Derived::Scalar> radius_concentration(const Eigen::MatrixBase<Derived>& theta,
                                                                   typename Derived::Scalar beta) {
  using Scalar = typename Derived::Scalar;
  if (theta.rows() < 1 || !theta.allFinite()) throw DegenerateData("concentration radius needs finite samples");
  const VectorX<Scalar> d2 = concentration_distances(theta);
  const auto [lo, hi] = concentration_alpha_range(d2);
  if (!(hi > lo)) throw OverflowGuard("every admissible alpha overflows the moment generating term");

  const auto f = [&](Scalar log_alpha) { return concentration_objective(std::exp(log_alpha), d2); };
  const Scalar a = std::log(lo), b = std::log(hi);

  // Coarse scan to bracket the minimum, then golden-section refinement in log alpha.
  constexpr int kScan = 256;
  int best = 0;
  Scalar best_value = std::numeric_limits<Scalar>::infinity();
  for (int i = 0; i <= kScan; ++i) {
    const Scalar value = f(a + (b - a) * Scalar(i) / Scalar(kScan));
    if (value < best_value) {
      best_value = value;
      best = i;
    }
  }
  Scalar left = a + (b - a) * Scalar(std::max(best - 1, 0)) / Scalar(kScan);
  Scalar right = a + (b - a) * Scalar(std::min(best + 1, kScan)) / Scalar(kScan);
  const Scalar ratio = (std::sqrt(Scalar(5)) - Scalar(1)) / Scalar(2);
  Scalar x1 = right - ratio * (right - left), x2 = left + ratio * (right - left);
  Scalar f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && right - left > Scalar(1e-14); ++it) {
    if (f1 <= f2) {
      right = x2;
      x2 = x1;
      f2 = f1;
      x1 = right - ratio * (right - left);
      f1 = f(x1);
    } else {
      left = x1;
      x1 = x2;
      f1 = f2;
      x2 = left + ratio * (right - left);
      f2 = f(x2);
    }
  }
  Scalar log_alpha = f1 <= f2 ? x1 : x2;
  Scalar value = std::min(f1, f2);
  if (best_value < value) {
    value = best_value;
    log_alpha = a + (b - a) * Scalar(best) / Scalar(kScan);
  }

  ConcentrationResult<Scalar> r;
  r.alpha = std::exp(log_alpha);
  r.constant = Scalar(2) * std::sqrt(value);
  r.epsilon = r.constant * radius_factor(theta.rows(), beta);
  if (!std::isfinite(r.constant)) throw OverflowGuard("concentration constant is not finite");
  return r;
}

/// Worst-case violation probability bound
/// h = lambda eps + (1/l) sum_j (1 - lambda (sigma - c_j)^+)^+, with c_j the sample infinity norms.
template <typename Scalar, typename Derived>
Scalar worst_case_h(Scalar sigma, Scalar lambda, Scalar epsilon, const Eigen::MatrixBase<Derived>& norms) {
  const auto gap = (sigma - norms.array()).max(Scalar(0));
  return lambda * epsilon + (Scalar(1) - lambda * gap).max(Scalar(0)).mean();
}

template <typename Scalar>
struct LambdaMinimum {
  Scalar lambda = 0;
  Scalar h = 1;
};

/// Exact minimum of the convex piecewise-linear h over lambda in [lambda_lo, lambda_hi].
/// Candidates are the bounds and the breakpoints 1/(sigma - c_j) inside them.
template <typename Scalar, typename Derived>
LambdaMinimum<Scalar> minimize_h_over_lambda(Scalar sigma, Scalar epsilon, const Eigen::MatrixBase<Derived>& norms,
                                             Scalar lambda_lo = 0,
                                             Scalar lambda_hi = std::numeric_limits<Scalar>::infinity()) {
  if (sigma < 0 || lambda_lo < 0 || lambda_hi < lambda_lo) throw ConfigError("invalid sigma or lambda bounds");
  const auto l = norms.size();

  // Per active sample: breakpoint b_j = 1/d_j with d_j = sigma - c_j > 0.
  std::vector<std::pair<Scalar, Scalar>> active;  // (b_j, d_j)
  active.reserve(static_cast<std::size_t>(l));
  for (Eigen::Index j = 0; j < l; ++j) {
    const Scalar d = sigma - norms(j);
    if (d > 0) active.emplace_back(Scalar(1) / d, d);
  }
  std::sort(active.begin(), active.end());
  const auto k = active.size();
  const Scalar inactive = static_cast<Scalar>(static_cast<std::size_t>(l) - k);

  // suffix_d[i] = sum of d_j over active[i..k).
  std::vector<Scalar> suffix_d(k + 1, Scalar(0));
  for (std::size_t i = k; i-- > 0;) suffix_d[i] = suffix_d[i + 1] + active[i].second;

  const auto h_direct = [&](Scalar lambda) {
    // Terms with b_j > lambda are still positive.
    const auto first = static_cast<std::size_t>(
        std::upper_bound(active.begin(), active.end(), std::make_pair(lambda, std::numeric_limits<Scalar>::infinity())) -
        active.begin());
    const Scalar count = static_cast<Scalar>(k - first);
    return lambda * epsilon + (inactive + count - lambda * suffix_d[first]) / static_cast<Scalar>(l);
  };

  LambdaMinimum<Scalar> best{lambda_lo, h_direct(lambda_lo)};
  const auto consider = [&](Scalar lambda, Scalar h) {
    if (h < best.h) best = {lambda, h};
  };
  for (std::size_t i = 0; i < k; ++i) {
    const Scalar b = active[i].first;
    if (b <= lambda_lo || b > lambda_hi) continue;
    // At lambda = b_i, samples i and later (up to ties) are the remaining positive terms.
    const Scalar count = static_cast<Scalar>(k - i);
    consider(b, b * epsilon + (inactive + count - b * suffix_d[i]) / static_cast<Scalar>(l));
  }
  if (std::isfinite(lambda_hi)) consider(lambda_hi, h_direct(lambda_hi));
  return best;
}

template <typename Scalar>
struct SigmaResult {
  Scalar sigma = 0;
  Scalar lambda = 0;
  Scalar h = 0;
  int iterations = 0;
};

/// Bisection on sigma in [0, sigma_max]: returns the upper end once the bracket is
/// narrower than `tol`, so min_lambda h(sigma) <= eta holds at the returned sigma.
template <typename Scalar, typename Derived>
SigmaResult<Scalar> compute_sigma(const Eigen::MatrixBase<Derived>& norms, Scalar epsilon, Scalar eta, Scalar sigma_max,
                                  Scalar tol = Scalar(1e-6)) {
  if (!(eta > 0 && eta < 1)) throw ConfigError("risk level eta must lie in (0, 1)");
  if (!(tol > 0)) throw ConfigError("bisection tolerance must be positive");
  if (!(epsilon >= 0)) throw ConfigError("radius must be nonnegative");

  auto at_max = minimize_h_over_lambda(sigma_max, epsilon, norms);
  if (at_max.h > eta)
    throw InfeasibleAtSigmaMax("min over lambda of h(sigma_max) = " + std::to_string(double(at_max.h)) +
                               " exceeds eta; raise sigma_max or relax eta/epsilon");

  SigmaResult<Scalar> r;
  Scalar lo = 0, hi = sigma_max;
  LambdaMinimum<Scalar> upper = at_max;
  while (hi - lo >= tol) {
    const Scalar mid = Scalar(0.5) * (lo + hi);
    const auto m = minimize_h_over_lambda(mid, epsilon, norms);
    if (m.h > eta) {
      lo = mid;
    } else {
      hi = mid;
      upper = m;
    }
    ++r.iterations;
  }
  r.sigma = hi;
  r.lambda = upper.lambda;
  r.h = upper.h;
  return r;
}

/// Corners of the hypercube [-sigma, sigma]^m mapped through r = S v + mu. Row j has
/// coordinate k at +sigma when bit k of j is set.
template <typename Scalar>
MatrixX<Scalar> hypercube_vertices(Scalar sigma, const MatrixX<Scalar>& sqrt_cov, const VectorX<Scalar>& mean) {
  const auto m = mean.size();
  if (m > 20) throw ConfigError("vertex enumeration limited to 20 constraint dimensions");
  const Eigen::Index count = Eigen::Index(1) << m;
  MatrixX<Scalar> out(count, m);
  for (Eigen::Index j = 0; j < count; ++j) {
    VectorX<Scalar> v(m);
    for (Eigen::Index k = 0; k < m; ++k) v(k) = ((j >> k) & 1) ? sigma : -sigma;
    out.row(j) = (sqrt_cov * v + mean).transpose();
  }
  return out;
}

}  // namespace drsc::dro
