#pragma once

#include "drsc/common/error.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <vector>

namespace drsc::reduction {

/// Principal basis of a state dataset. Every direction the SVD produces is kept;
/// `q` selects how many the transforms use.
template <typename Scalar>
struct PcaBasis {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Vector mean;                      // n
  Matrix components;                // min(n, M) x n, orthonormal rows
  Vector singular_values;           // of the centered data, descending
  Vector explained_variance_ratio;  // s_i^2 / sum s^2
  Eigen::Index samples = 0;         // M used in the fit
  Eigen::Index q = 0;

  [[nodiscard]] Eigen::Index dimension() const { return mean.size(); }
  [[nodiscard]] auto retained() const { return components.topRows(q); }

  /// Variance of the data along each principal direction, s_i^2 / M.
  [[nodiscard]] Vector component_variance() const {
    return singular_values.array().square() / static_cast<Scalar>(samples);
  }
};

/// PCA of the rows of `states` (M x n) through an SVD of the centered data.
/// Sign convention: the largest-magnitude entry of every component is positive.
template <typename Derived>
PcaBasis<typename Derived::Scalar> fit_pca(const Eigen::MatrixBase<Derived>& states) {
  using Scalar = typename Derived::Scalar;
  using Basis = PcaBasis<Scalar>;
  const auto m = states.rows();
  if (m < 2) throw DegenerateData("PCA needs at least two samples");
  if (!states.allFinite()) throw DegenerateData("PCA input contains non-finite values");

  Basis basis;
  basis.samples = m;
  basis.mean = states.colwise().mean().transpose();
  const typename Basis::Matrix centered = states.rowwise() - basis.mean.transpose();
  const Scalar scale = states.cwiseAbs().maxCoeff();
  if (centered.cwiseAbs().maxCoeff() <= Scalar(1e-13) * (scale > 0 ? scale : Scalar(1)))
    throw DegenerateData("all PCA samples are identical");

  Eigen::BDCSVD<typename Basis::Matrix> svd(centered, Eigen::ComputeThinV);
  basis.singular_values = svd.singularValues();
  basis.components = svd.matrixV().transpose();
  for (Eigen::Index i = 0; i < basis.components.rows(); ++i) {
    Eigen::Index arg = 0;
    basis.components.row(i).cwiseAbs().maxCoeff(&arg);
    if (basis.components(i, arg) < 0) basis.components.row(i) *= Scalar(-1);
  }
  const Scalar total = basis.singular_values.squaredNorm();
  basis.explained_variance_ratio = basis.singular_values.array().square() / total;
  basis.q = basis.components.rows();
  return basis;
}

/// Smallest q whose cumulative explained variance reaches `threshold`.
/// Cumulative sums within 1e-12 of the threshold count as reaching it.
template <typename Scalar>
Eigen::Index choose_q(const PcaBasis<Scalar>& basis, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("variance threshold must lie in (0, 1]");
  Scalar cumulative = 0;
  const auto k = basis.explained_variance_ratio.size();
  for (Eigen::Index i = 0; i < k; ++i) {
    cumulative += basis.explained_variance_ratio(i);
    if (cumulative >= Scalar(threshold) - Scalar(1e-12)) return i + 1;
  }
  return k;
}

template <typename Scalar>
Scalar cumulative_variance(const PcaBasis<Scalar>& basis, Eigen::Index q) {
  return basis.explained_variance_ratio.head(q).sum();
}

template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> transform(const PcaBasis<Scalar>& basis,
                                                   const Eigen::MatrixBase<Derived>& state) {
  if (state.size() != basis.dimension()) throw DimensionMismatch("PCA transform: state length differs from basis");
  return basis.retained() * (state - basis.mean);
}

template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inverse_transform(const PcaBasis<Scalar>& basis,
                                                           const Eigen::MatrixBase<Derived>& reduced) {
  if (reduced.size() != basis.q) throw DimensionMismatch("PCA inverse: reduced length differs from q");
  return basis.mean + basis.retained().transpose() * reduced;
}

/// Row-wise transform of an M x n block.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> transform_rows(const PcaBasis<Scalar>& basis,
                                                                     const Eigen::MatrixBase<Derived>& states) {
  if (states.cols() != basis.dimension()) throw DimensionMismatch("PCA transform: column count differs from basis");
  return (states.rowwise() - basis.mean.transpose()) * basis.retained().transpose();
}

/// Mean over rows of the squared reconstruction error at the basis' q.
template <typename Scalar, typename Derived>
Scalar reconstruction_mse(const PcaBasis<Scalar>& basis, const Eigen::MatrixBase<Derived>& states) {
  const auto reduced = transform_rows(basis, states);
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> recon =
      (reduced * basis.retained()).rowwise() + basis.mean.transpose();
  return (states - recon).rowwise().squaredNorm().mean();
}

/// Field-wise affine normalization applied before PCA: each contiguous group of
/// state entries is shifted by its pooled mean and divided by its pooled standard deviation.
template <typename Scalar>
struct FieldScaling {
  std::vector<Eigen::Index> field_sizes;
  std::vector<Scalar> offsets;
  std::vector<Scalar> scales;

  [[nodiscard]] Eigen::Index dimension() const {
    Eigen::Index n = 0;
    for (auto s : field_sizes) n += s;
    return n;
  }

  template <typename Derived>
  [[nodiscard]] Eigen::Matrix<Scalar, Eigen::Dynamic, 1> apply(const Eigen::MatrixBase<Derived>& x) const {
    if (x.size() != dimension()) throw DimensionMismatch("field scaling: state length differs");
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(x.size());
    Eigen::Index at = 0;
    for (std::size_t f = 0; f < field_sizes.size(); ++f) {
      out.segment(at, field_sizes[f]) = (x.segment(at, field_sizes[f]).array() - offsets[f]) / scales[f];
      at += field_sizes[f];
    }
    return out;
  }

  template <typename Derived>
  [[nodiscard]] Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> apply_rows(
      const Eigen::MatrixBase<Derived>& states) const {
    if (states.cols() != dimension()) throw DimensionMismatch("field scaling: column count differs");
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(states.rows(), states.cols());
    Eigen::Index at = 0;
    for (std::size_t f = 0; f < field_sizes.size(); ++f) {
      out.middleCols(at, field_sizes[f]) = (states.middleCols(at, field_sizes[f]).array() - offsets[f]) / scales[f];
      at += field_sizes[f];
    }
    return out;
  }

  /// Identity scaling over one field of dimension n.
  static FieldScaling identity(Eigen::Index n) { return {{n}, {Scalar(0)}, {Scalar(1)}}; }
};

template <typename Derived>
FieldScaling<typename Derived::Scalar> fit_field_scaling(const Eigen::MatrixBase<Derived>& states,
                                                         const std::vector<Eigen::Index>& field_sizes) {
  using Scalar = typename Derived::Scalar;
  FieldScaling<Scalar> s;
  s.field_sizes = field_sizes;
  if (s.dimension() != states.cols()) throw DimensionMismatch("field sizes do not cover the state");
  Eigen::Index at = 0;
  for (auto size : field_sizes) {
    const auto block = states.middleCols(at, size);
    const Scalar mean = block.mean();
    const auto col_mean = block.colwise().mean();
    const Scalar var = (block.rowwise() - col_mean).squaredNorm() / static_cast<Scalar>(block.size());
    s.offsets.push_back(mean);
    s.scales.push_back(var > 0 ? std::sqrt(var) : Scalar(1));
    at += size;
  }
  return s;
}

}  // namespace drsc::reduction
