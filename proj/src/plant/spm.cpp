#include "drsc/plant/spm.hpp"

#include "drsc/common/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace drsc::plant {

namespace {

constexpr double kRangeTolerance = 1e-9;

// Backward-Euler finite-volume step of spherical diffusion with zero flux at the
// center and outward molar flux j at the surface. Shell i spans [i dr, (i+1) dr].
Eigen::VectorXd diffuse(const Eigen::VectorXd& c, double diffusivity, double radius, double flux,
                        double dt) {
  const auto n = c.size();
  const double dr = radius / static_cast<double>(n);
  const Eigen::VectorXd volume = shell_volumes(radius, static_cast<int>(n));

  // g(f) couples shells f-1 and f through the face at r = f dr, f = 1..n-1.
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n + 1);
  for (Eigen::Index f = 1; f < n; ++f) {
    const double r = static_cast<double>(f) * dr;
    g(f) = diffusivity * 4.0 * std::numbers::pi * r * r / dr;
  }

  Eigen::VectorXd diag = volume / dt + g.head(n) + g.tail(n);
  Eigen::VectorXd rhs = volume.cwiseProduct(c) / dt;
  rhs(n - 1) -= 4.0 * std::numbers::pi * radius * radius * flux;

  // Thomas algorithm; lower and upper bands are both -g(i+1).
  Eigen::VectorXd cp(n), dp(n);
  cp(0) = -g(1) / diag(0);
  dp(0) = rhs(0) / diag(0);
  for (Eigen::Index i = 1; i < n; ++i) {
    const double m = diag(i) + g(i) * cp(i - 1);
    cp(i) = (i + 1 < n) ? -g(i + 1) / m : 0.0;
    dp(i) = (rhs(i) + g(i) * dp(i - 1)) / m;
  }
  Eigen::VectorXd out(n);
  out(n - 1) = dp(n - 1);
  for (Eigen::Index i = n - 2; i >= 0; --i) out(i) = dp(i) - cp(i) * out(i + 1);
  return out;
}

void check_range(const Eigen::VectorXd& c, double c_max, const char* which) {
  if (!c.allFinite()) throw NonFiniteState(std::string(which) + " concentration");
  const double tol = kRangeTolerance * c_max;
  if (c.minCoeff() < -tol || c.maxCoeff() > c_max + tol)
    throw ConcentrationOutOfRange(std::string(which) + " shell concentration left [0, c_max]: min " +
                                  std::to_string(c.minCoeff()) + ", max " + std::to_string(c.maxCoeff()));
}

struct Kinetics {
  double theta_surface = 0.0;
  double i0 = 0.0;
  double eta = 0.0;
};

Kinetics surface_kinetics(const Eigen::VectorXd& c, const ElectrodeParams& e, double flux, double temperature,
                          const PlantParams& p, const char* which) {
  const double dr = e.particle_radius / static_cast<double>(c.size());
  const double diffusivity = arrhenius(e.diffusivity, e.diffusivity_activation, temperature, p);
  // Half-shell extrapolation along the imposed surface gradient -j/D.
  const double css = c(c.size() - 1) - 0.5 * dr * flux / diffusivity;
  const double alpha = p.transfer_coefficient;

  Kinetics k;
  k.theta_surface = css / e.max_concentration;
  const bool saturated = !(css > 0.0 && css < e.max_concentration);
  if (saturated) {
    if (flux != 0.0)
      throw NonFiniteOutput(std::string(which) + " surface saturated or depleted under nonzero flux");
    return k;
  }
  const double rate = arrhenius(e.rate_constant, e.rate_activation, temperature, p);
  k.i0 = rate * std::pow(css, alpha) * std::pow(p.electrolyte_concentration * (e.max_concentration - css), alpha);
  k.eta = butler_volmer_overpotential(flux, k.i0, temperature, p);
  return k;
}

}  // namespace

Eigen::VectorXd PlantState::flatten() const {
  Eigen::VectorXd x(c_neg.size() + c_pos.size() + 1);
  x << c_neg, c_pos, temperature;
  return x;
}

PlantState PlantState::unflatten(const Eigen::Ref<const Eigen::VectorXd>& x, int radial_nodes) {
  if (x.size() != 2 * radial_nodes + 1) throw DimensionMismatch("plant state has wrong length");
  PlantState s;
  s.c_neg = x.head(radial_nodes);
  s.c_pos = x.segment(radial_nodes, radial_nodes);
  s.temperature = x(2 * radial_nodes);
  return s;
}

PlantState initial_state(const PlantParams& p, double soc, double temperature) {
  const auto theta = [soc](const ElectrodeParams& e) { return e.theta_0 + soc * (e.theta_100 - e.theta_0); };
  PlantState s;
  s.c_neg = Eigen::VectorXd::Constant(p.radial_nodes, theta(p.negative) * p.negative.max_concentration);
  s.c_pos = Eigen::VectorXd::Constant(p.radial_nodes, theta(p.positive) * p.positive.max_concentration);
  s.temperature = temperature;
  return s;
}

double molar_flux_neg(const PlantParams& p, double c_rate) {
  return -p.current_density(c_rate) / (p.negative.active_area * p.faraday * p.negative.thickness);
}

double molar_flux_pos(const PlantParams& p, double c_rate) {
  return p.current_density(c_rate) / (p.positive.active_area * p.faraday * p.positive.thickness);
}

Eigen::VectorXd shell_volumes(double radius, int nodes) {
  Eigen::VectorXd v(nodes);
  const double dr = radius / nodes;
  for (int i = 0; i < nodes; ++i) {
    const double ri = i * dr;
    const double ro = (i + 1) * dr;
    v(i) = 4.0 / 3.0 * std::numbers::pi * (ro * ro * ro - ri * ri * ri);
  }
  return v;
}

double particle_lithium(const Eigen::VectorXd& c, double radius) {
  return shell_volumes(radius, static_cast<int>(c.size())).dot(c);
}

double electrode_lithium(const Eigen::VectorXd& c, const ElectrodeParams& e, double area) {
  const double particle_volume = 4.0 / 3.0 * std::numbers::pi * std::pow(e.particle_radius, 3);
  const double solid_fraction = e.active_area * e.particle_radius / 3.0;
  return particle_lithium(c, e.particle_radius) / particle_volume * solid_fraction * e.thickness * area;
}

double butler_volmer_overpotential(double flux, double i0, double temperature, const PlantParams& p) {
  const double thermal_voltage = p.gas_constant * temperature / p.faraday;
  return 2.0 * thermal_voltage * std::asinh(p.faraday * flux / (2.0 * i0));
}

double butler_volmer_flux(double eta, double i0, double temperature, const PlantParams& p) {
  const double f = p.faraday / (p.gas_constant * temperature);
  const double a = p.transfer_coefficient;
  return i0 / p.faraday * (std::exp(a * f * eta) - std::exp(-a * f * eta));
}

double bulk_soc(const PlantState& state, const PlantParams& p) {
  const auto& e = p.negative;
  const double particle_volume = 4.0 / 3.0 * std::numbers::pi * std::pow(e.particle_radius, 3);
  const double theta = particle_lithium(state.c_neg, e.particle_radius) / particle_volume / e.max_concentration;
  return (theta - e.theta_0) / (e.theta_100 - e.theta_0);
}

PlantOutputs observe(const PlantState& state, double c_rate, const PlantParams& p) {
  if (!state.c_neg.allFinite() || !state.c_pos.allFinite() || !std::isfinite(state.temperature))
    throw NonFiniteState("observe called on non-finite state");

  PlantOutputs out;
  out.temperature = state.temperature;
  out.flux_neg = molar_flux_neg(p, c_rate);
  out.flux_pos = molar_flux_pos(p, c_rate);

  const auto neg = surface_kinetics(state.c_neg, p.negative, out.flux_neg, state.temperature, p, "negative");
  const auto pos = surface_kinetics(state.c_pos, p.positive, out.flux_pos, state.temperature, p, "positive");
  out.theta_surface_neg = neg.theta_surface;
  out.theta_surface_pos = pos.theta_surface;
  out.i0_minus = neg.i0;
  out.i0_plus = pos.i0;
  out.eta_minus = neg.eta;
  out.eta_plus = pos.eta;

  const double u_neg = p.negative.ocp(neg.theta_surface);
  const double u_pos = p.positive.ocp(pos.theta_surface);
  const double film_neg = p.faraday * p.negative.film_resistance * out.flux_neg;
  const double film_pos = p.faraday * p.positive.film_resistance * out.flux_pos;

  // phi_s - phi_e = eta + U + F R_f j with phi_e taken as zero.
  out.eta_s = neg.eta + u_neg + film_neg - p.side_reaction_potential;
  out.voltage = (pos.eta + u_pos + film_pos) - (neg.eta + u_neg + film_neg);

  out.soc = bulk_soc(state, p);
  const auto bulk_theta = [](const Eigen::VectorXd& c, const ElectrodeParams& e) {
    const double vol = 4.0 / 3.0 * std::numbers::pi * std::pow(e.particle_radius, 3);
    return particle_lithium(c, e.particle_radius) / vol / e.max_concentration;
  };
  out.open_circuit_voltage =
      p.positive.ocp(bulk_theta(state.c_pos, p.positive)) - p.negative.ocp(bulk_theta(state.c_neg, p.negative));

  if (!std::isfinite(out.voltage) || !std::isfinite(out.eta_s) || !std::isfinite(out.soc))
    throw NonFiniteOutput("non-finite plant output");
  return out;
}

PlantState step_spm(const PlantState& state, double c_rate, double dt, const PlantParams& p) {
  if (!(dt > 0.0)) throw ConfigError("step_spm: dt must be positive");
  if (!std::isfinite(c_rate)) throw NonFiniteState("non-finite current");
  const auto out = observe(state, c_rate, p);
  const double temperature = state.temperature;

  PlantState next;
  next.c_neg = diffuse(state.c_neg, arrhenius(p.negative.diffusivity, p.negative.diffusivity_activation, temperature, p),
                       p.negative.particle_radius, out.flux_neg, dt);
  next.c_pos = diffuse(state.c_pos, arrhenius(p.positive.diffusivity, p.positive.diffusivity_activation, temperature, p),
                       p.positive.particle_radius, out.flux_pos, dt);

  // Irreversible plus entropic heat, written for charging-positive current.
  const double current = p.cell_current(c_rate);
  const double heat = current * (out.voltage - out.open_circuit_voltage) +
                      current * temperature * p.thermal.entropic_coefficient;
  const double capacity = p.thermal.mass * p.thermal.heat_capacity;
  const double rth = p.thermal.thermal_resistance;
  next.temperature = (temperature + dt / capacity * (p.thermal.ambient / rth + heat)) / (1.0 + dt / (capacity * rth));

  if (!std::isfinite(next.temperature) || !(next.temperature > 0.0)) throw NonFiniteState("temperature");
  check_range(next.c_neg, p.negative.max_concentration, "negative");
  check_range(next.c_pos, p.positive.max_concentration, "positive");
  return next;
}

}  // namespace drsc::plant
