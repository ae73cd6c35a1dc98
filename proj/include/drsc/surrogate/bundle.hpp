#pragma once

#include "drsc/surrogate/network.hpp"

#include <Eigen/Core>

#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>

namespace drsc::surrogate {

using Net = FeedforwardNet<double>;

/// Net as JSON: layer sizes, activation names, normalization statistics and
/// row-major weights. Floats round-trip exactly.
void save_net(const std::filesystem::path& path, const Net& net);
Net load_net(const std::filesystem::path& path);

/// Cost and constraint surrogates evaluated at [x~ || U] with Jacobians restricted to U.
struct SurrogateBundle {
  Net cost;                       // J: (q + N + 1) -> 1
  Net constraint;                 // G_eta_s: (q + N + 1) -> N + 1
  std::optional<Net> temperature; // G_T, same shapes as the constraint net
  Eigen::Index q = 0;
  int horizon = 0;
  /// With a temperature net and a finite limit, the stacked constraint is [G_eta_s; T_max - G_T].
  double temperature_limit = std::numeric_limits<double>::infinity();

  [[nodiscard]] int window() const { return horizon + 1; }
  [[nodiscard]] bool temperature_active() const { return temperature.has_value() && std::isfinite(temperature_limit); }
  /// Rows of the stacked constraint vector.
  [[nodiscard]] int constraint_rows() const { return temperature_active() ? 2 * window() : window(); }
  /// Throws DimensionMismatch unless both nets take q + N + 1 inputs and emit 1 and N + 1 outputs.
  void validate() const;

  struct Evaluation {
    double j = 0.0;
    Eigen::VectorXd g;       // constraint_rows()
    Eigen::VectorXd dj_du;   // N + 1
    Eigen::MatrixXd dg_du;   // constraint_rows() x (N + 1)
  };
  [[nodiscard]] Evaluation evaluate(const Eigen::Ref<const Eigen::VectorXd>& reduced,
                                    const Eigen::Ref<const Eigen::VectorXd>& controls,
                                    bool with_jacobians = true) const;

  /// Forward-only evaluation of B candidate windows (columns of `controls`).
  void evaluate_batch(const Eigen::Ref<const Eigen::VectorXd>& reduced, const Eigen::Ref<const Eigen::MatrixXd>& controls,
                      Eigen::VectorXd& j, Eigen::MatrixXd& g) const;
};

}  // namespace drsc::surrogate
