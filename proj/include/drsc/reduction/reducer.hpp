#pragma once

#include "drsc/reduction/pca.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <vector>

namespace drsc::reduction {

/// Field scaling followed by PCA projection: the full-state to reduced-state map.
struct StateReducer {
  FieldScaling<double> scaling;
  PcaBasis<double> basis;

  [[nodiscard]] Eigen::Index q() const { return basis.q; }
  [[nodiscard]] Eigen::Index dimension() const { return basis.dimension(); }

  [[nodiscard]] Eigen::VectorXd reduce(const Eigen::Ref<const Eigen::VectorXd>& state) const {
    return transform(basis, scaling.apply(state));
  }
  [[nodiscard]] Eigen::MatrixXd reduce_rows(const Eigen::Ref<const Eigen::MatrixXd>& states) const {
    return transform_rows(basis, scaling.apply_rows(states));
  }
};

struct ReducerOptions {
  /// Contiguous field sizes for per-field scaling; empty disables scaling.
  std::vector<Eigen::Index> field_sizes;
  double variance_threshold = 0.99;
  std::optional<Eigen::Index> fixed_q;
};

StateReducer fit_reducer(const Eigen::Ref<const Eigen::MatrixXd>& states, const ReducerOptions& options);

/// JSON header at `header` plus a CSV payload (mean row, then one row per component)
/// next to it. Returns the payload path.
std::filesystem::path save_reducer(const std::filesystem::path& header, const StateReducer& reducer);
StateReducer load_reducer(const std::filesystem::path& header);

}  // namespace drsc::reduction
