#pragma once

#include <Eigen/Core>

namespace drsc::plant {

/// Insulated 1-D rod of n lumped nodes heated through node 0. The linear test plant;
/// its constraint quantity is the hottest node.
struct HeatRodParams {
  int nodes = 100;
  double conductance = 1.0;    // between neighbouring nodes [W/K]
  double node_capacity = 1.0;  // per node [J/K]
};

/// Backward-Euler step; `heat_flux` [W] enters node 0. Linear in (state, heat_flux).
Eigen::VectorXd step_heat_rod(const Eigen::VectorXd& temperatures, double heat_flux, double dt,
                              const HeatRodParams& params);

/// Stored thermal energy relative to 0 K.
[[nodiscard]] double heat_rod_energy(const Eigen::VectorXd& temperatures, const HeatRodParams& params);

/// The discrete Laplacian operator A with C dT/dt = -A T (symmetric, Neumann ends).
[[nodiscard]] Eigen::MatrixXd heat_rod_operator(const HeatRodParams& params);

}  // namespace drsc::plant
