#pragma once

#include <filesystem>
#include <vector>

namespace drsc::plant {

/// Open-circuit potential tabulated against lithiation fraction (stoichiometry).
/// Breakpoints are strictly increasing in stoichiometry; volts are nonincreasing.
class OcpTable {
 public:
  OcpTable() = default;
  OcpTable(std::vector<double> stoichiometry, std::vector<double> volts);

  /// Piecewise-linear interpolation, held constant outside the table.
  [[nodiscard]] double operator()(double stoichiometry) const;

  [[nodiscard]] const std::vector<double>& stoichiometry() const { return x_; }
  [[nodiscard]] const std::vector<double>& volts() const { return v_; }
  [[nodiscard]] bool empty() const { return x_.empty(); }

  static OcpTable load_csv(const std::filesystem::path& path);

 private:
  std::vector<double> x_;
  std::vector<double> v_;
};

struct ElectrodeParams {
  double diffusivity = 0.0;          // D_s at T_ref [m^2/s]
  double particle_radius = 0.0;      // R_s [m]
  double max_concentration = 0.0;    // c_s,max [mol/m^3]
  double rate_constant = 0.0;        // k at T_ref, i0 = k c_ss^a (c_e (c_max - c_ss))^a [A/m^2 (m^3/mol)^(2a)]
  double active_area = 0.0;          // a [1/m]
  double thickness = 0.0;            // L [m]
  double film_resistance = 0.0;      // R_f [Ohm m^2], may be zero
  double diffusivity_activation = 0.0;  // E_D [J/mol]
  double rate_activation = 0.0;         // E_k [J/mol]
  double theta_0 = 0.0;    // stoichiometry at 0% SOC
  double theta_100 = 0.0;  // stoichiometry at 100% SOC
  OcpTable ocp;
};

struct ThermalParams {
  double mass = 0.0;                // m [kg]
  double heat_capacity = 0.0;       // c_P [J/(kg K)]
  double thermal_resistance = 0.0;  // R_th [K/W]
  double ambient = 0.0;             // T_amb [K]
  /// Entropic heat coefficient dU/dT; kept at zero for lack of data.
  double entropic_coefficient = 0.0;
};

struct PlantParams {
  ElectrodeParams negative;
  ElectrodeParams positive;
  ThermalParams thermal;

  double faraday = 96485.33212;
  double gas_constant = 8.314462618;
  double reference_temperature = 298.15;
  double electrolyte_concentration = 1000.0;  // c_e, held uniform [mol/m^3]
  double transfer_coefficient = 0.5;          // alpha_a = alpha_c
  double side_reaction_potential = 0.0;       // U_sr [V]
  double nominal_capacity_ah = 0.0;           // defines 1C
  double electrode_area = 0.0;                // A [m^2]
  int radial_nodes = 50;                      // N_r per electrode

  /// Applied current density [A/m^2] for a C-rate (positive = charging).
  [[nodiscard]] double current_density(double c_rate) const {
    return c_rate * nominal_capacity_ah / electrode_area;
  }
  /// Cell current [A] for a C-rate.
  [[nodiscard]] double cell_current(double c_rate) const { return c_rate * nominal_capacity_ah; }

  /// Flattened state dimension 2 N_r + 1.
  [[nodiscard]] int state_dimension() const { return 2 * radial_nodes + 1; }

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

/// Reads a `key = value` plant file. OCP file paths resolve relative to the file.
PlantParams load_plant_params(const std::filesystem::path& path);

/// Arrhenius scaling psi_ref * exp(E/R (1/T_ref - 1/T)).
[[nodiscard]] double arrhenius(double reference_value, double activation_energy, double temperature,
                               const PlantParams& params);

}  // namespace drsc::plant
