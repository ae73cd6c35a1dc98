#pragma once

#include "drsc/plant/params.hpp"

#include <Eigen/Core>

namespace drsc::plant {

/// Radial shell concentrations for both particles plus lumped temperature.
struct PlantState {
  Eigen::VectorXd c_neg;  // N_r shells, center to surface [mol/m^3]
  Eigen::VectorXd c_pos;
  double temperature = 0.0;  // [K]

  /// [c_neg, c_pos, T], dimension 2 N_r + 1.
  [[nodiscard]] Eigen::VectorXd flatten() const;
  static PlantState unflatten(const Eigen::Ref<const Eigen::VectorXd>& x, int radial_nodes);
};

struct PlantOutputs {
  double soc = 0.0;
  double voltage = 0.0;
  double eta_s = 0.0;      // side-reaction overpotential
  double eta_minus = 0.0;  // surface overpotentials
  double eta_plus = 0.0;
  double temperature = 0.0;
  double i0_minus = 0.0;  // exchange current densities [A/m^2]
  double i0_plus = 0.0;
  double theta_surface_neg = 0.0;
  double theta_surface_pos = 0.0;
  double open_circuit_voltage = 0.0;  // from bulk stoichiometries
  double flux_neg = 0.0;              // j_n, positive = lithium leaving the particle [mol/(m^2 s)]
  double flux_pos = 0.0;
};

/// Uniform equilibrium state at the given bulk SOC.
PlantState initial_state(const PlantParams& params, double soc, double temperature);

/// Pore-wall molar flux per electrode for a C-rate; charging drives lithium into the negative particle.
[[nodiscard]] double molar_flux_neg(const PlantParams& params, double c_rate);
[[nodiscard]] double molar_flux_pos(const PlantParams& params, double c_rate);

/// Exact volumes of N equal-width spherical shells of a particle of radius R.
[[nodiscard]] Eigen::VectorXd shell_volumes(double radius, int nodes);

/// Moles of lithium held by one particle.
[[nodiscard]] double particle_lithium(const Eigen::VectorXd& c, double radius);

/// Moles of lithium held by a whole electrode of the cell (particle average times solid volume).
[[nodiscard]] double electrode_lithium(const Eigen::VectorXd& c, const ElectrodeParams& e, double area);

/// Surface overpotential from the closed-form inverse of symmetric Butler-Volmer kinetics,
/// eta = (2RT/F) asinh(F j / (2 i0)). Requires transfer_coefficient = 0.5.
[[nodiscard]] double butler_volmer_overpotential(double flux, double i0, double temperature,
                                                 const PlantParams& params);

/// Forward Butler-Volmer molar flux j = (i0/F)(exp(a F eta/RT) - exp(-a F eta/RT)).
[[nodiscard]] double butler_volmer_flux(double eta, double i0, double temperature, const PlantParams& params);

/// Bulk SOC of the negative electrode.
[[nodiscard]] double bulk_soc(const PlantState& state, const PlantParams& params);

/// Advances diffusion (backward Euler, finite volume) and temperature by dt.
/// Throws ConcentrationOutOfRange or NonFiniteState.
PlantState step_spm(const PlantState& state, double c_rate, double dt, const PlantParams& params);

/// Algebraic outputs at (state, current). Throws NonFiniteOutput when a surface is
/// saturated or depleted under nonzero flux.
PlantOutputs observe(const PlantState& state, double c_rate, const PlantParams& params);

}  // namespace drsc::plant
