#include "drsc/plant/heat_rod.hpp"

#include "drsc/common/error.hpp"

#include <cmath>

namespace drsc::plant {

Eigen::VectorXd step_heat_rod(const Eigen::VectorXd& t, double heat_flux, double dt, const HeatRodParams& p) {
  const auto n = t.size();
  if (n != p.nodes) throw DimensionMismatch("heat rod state length differs from node count");
  if (n < 2 || !(dt > 0.0)) throw ConfigError("heat rod needs >= 2 nodes and dt > 0");
  if (!t.allFinite() || !std::isfinite(heat_flux)) throw NonFiniteState("heat rod input");

  const double c = p.node_capacity / dt;
  const double g = p.conductance;
  Eigen::VectorXd diag = Eigen::VectorXd::Constant(n, c + 2.0 * g);
  diag(0) = diag(n - 1) = c + g;
  Eigen::VectorXd rhs = c * t;
  rhs(0) += heat_flux;

  Eigen::VectorXd cp(n), dp(n);
  cp(0) = -g / diag(0);
  dp(0) = rhs(0) / diag(0);
  for (Eigen::Index i = 1; i < n; ++i) {
    const double m = diag(i) + g * cp(i - 1);
    cp(i) = -g / m;
    dp(i) = (rhs(i) + g * dp(i - 1)) / m;
  }
  Eigen::VectorXd out(n);
  out(n - 1) = dp(n - 1);
  for (Eigen::Index i = n - 2; i >= 0; --i) out(i) = dp(i) - cp(i) * out(i + 1);
  if (!out.allFinite()) throw NonFiniteState("heat rod step");
  return out;
}

double heat_rod_energy(const Eigen::VectorXd& t, const HeatRodParams& p) { return p.node_capacity * t.sum(); }

Eigen::MatrixXd heat_rod_operator(const HeatRodParams& p) {
  const int n = p.nodes;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    a(i, i) += p.conductance;
    a(i + 1, i + 1) += p.conductance;
    a(i, i + 1) -= p.conductance;
    a(i + 1, i) -= p.conductance;
  }
  return a;
}

}  // namespace drsc::plant
