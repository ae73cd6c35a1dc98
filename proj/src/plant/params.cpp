#include "drsc/plant/params.hpp"

#include "drsc/common/csv.hpp"
#include "drsc/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <string>

namespace drsc::plant {

OcpTable::OcpTable(std::vector<double> stoichiometry, std::vector<double> volts)
    : x_(std::move(stoichiometry)), v_(std::move(volts)) {
  if (x_.size() != v_.size() || x_.size() < 2)
    throw ConfigError("ocp table needs at least two (stoichiometry, volts) rows");
  for (std::size_t i = 1; i < x_.size(); ++i) {
    if (!(x_[i] > x_[i - 1])) throw ConfigError("ocp table stoichiometry must be strictly increasing");
    if (v_[i] > v_[i - 1]) throw ConfigError("ocp table volts must be nonincreasing in stoichiometry");
  }
  if (x_.front() < 0.0 || x_.back() > 1.0) throw ConfigError("ocp stoichiometry outside [0, 1]");
}

double OcpTable::operator()(double s) const {
  if (s <= x_.front()) return v_.front();
  if (s >= x_.back()) return v_.back();
  const auto it = std::upper_bound(x_.begin(), x_.end(), s);
  const auto i = static_cast<std::size_t>(it - x_.begin());
  const double w = (s - x_[i - 1]) / (x_[i] - x_[i - 1]);
  return v_[i - 1] + w * (v_[i] - v_[i - 1]);
}

OcpTable OcpTable::load_csv(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  if (table.values.cols() != 2) throw ConfigError("ocp csv must have two columns: " + path.string());
  std::vector<double> x(table.values.rows()), v(table.values.rows());
  for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
    x[r] = table.values(r, 0);
    v[r] = table.values(r, 1);
  }
  return {std::move(x), std::move(v)};
}

namespace {

void check_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("plant parameter must be positive: ") + name);
}

void validate_electrode(const ElectrodeParams& e, const char* which) {
  const std::string p(which);
  check_positive(e.diffusivity, (p + ".diffusivity").c_str());
  check_positive(e.particle_radius, (p + ".particle_radius").c_str());
  check_positive(e.max_concentration, (p + ".max_concentration").c_str());
  check_positive(e.rate_constant, (p + ".rate_constant").c_str());
  check_positive(e.active_area, (p + ".active_area").c_str());
  check_positive(e.thickness, (p + ".thickness").c_str());
  if (e.film_resistance < 0.0) throw ConfigError(p + ".film_resistance must be nonnegative");
  if (e.diffusivity_activation < 0.0 || e.rate_activation < 0.0)
    throw ConfigError(p + " activation energies must be nonnegative");
  if (e.theta_0 < 0.0 || e.theta_0 > 1.0 || e.theta_100 < 0.0 || e.theta_100 > 1.0 || e.theta_0 == e.theta_100)
    throw ConfigError(p + " stoichiometry window invalid");
  if (e.ocp.empty()) throw ConfigError(p + ".ocp_file not set");
}

}  // namespace

void PlantParams::validate() const {
  validate_electrode(negative, "negative");
  validate_electrode(positive, "positive");
  if (!(negative.theta_0 < negative.theta_100))
    throw ConfigError("negative electrode requires theta_0 < theta_100");
  check_positive(thermal.mass, "thermal.mass");
  check_positive(thermal.heat_capacity, "thermal.heat_capacity");
  check_positive(thermal.thermal_resistance, "thermal.thermal_resistance");
  check_positive(thermal.ambient, "thermal.ambient");
  check_positive(faraday, "faraday");
  check_positive(gas_constant, "gas_constant");
  check_positive(reference_temperature, "reference_temperature");
  check_positive(electrolyte_concentration, "electrolyte_concentration");
  check_positive(nominal_capacity_ah, "nominal_capacity_ah");
  check_positive(electrode_area, "electrode_area");
  // The kinetics are inverted in closed form, which needs symmetric transfer.
  if (transfer_coefficient != 0.5) throw ConfigError("transfer_coefficient must be 0.5");
  if (radial_nodes < 3) throw ConfigError("radial_nodes must be >= 3");
}

PlantParams load_plant_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open plant config " + path.string());

  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string{};
      return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  PlantParams p;
  const auto base = path.parent_path();
  std::map<std::string, std::function<void(const std::string&)>> setters;
  const auto num = [&](const std::string& key, double& target) {
    setters[key] = [&target, key](const std::string& v) {
      try {
        std::size_t used = 0;
        target = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
      } catch (const std::exception&) {
        throw ConfigError("plant config: bad number for " + key + ": '" + v + "'");
      }
    };
  };
  const auto electrode = [&](const std::string& prefix, ElectrodeParams& e) {
    num(prefix + ".diffusivity", e.diffusivity);
    num(prefix + ".particle_radius", e.particle_radius);
    num(prefix + ".max_concentration", e.max_concentration);
    num(prefix + ".rate_constant", e.rate_constant);
    num(prefix + ".active_area", e.active_area);
    num(prefix + ".thickness", e.thickness);
    num(prefix + ".film_resistance", e.film_resistance);
    num(prefix + ".diffusivity_activation", e.diffusivity_activation);
    num(prefix + ".rate_activation", e.rate_activation);
    num(prefix + ".theta_0", e.theta_0);
    num(prefix + ".theta_100", e.theta_100);
    setters[prefix + ".ocp_file"] = [&e, base](const std::string& v) {
      try {
        e.ocp = OcpTable::load_csv(base / v);
      } catch (const ArtifactError& err) {
        throw ConfigError(std::string("plant config: ") + err.what());
      }
    };
  };
  electrode("negative", p.negative);
  electrode("positive", p.positive);
  num("thermal.mass", p.thermal.mass);
  num("thermal.heat_capacity", p.thermal.heat_capacity);
  num("thermal.thermal_resistance", p.thermal.thermal_resistance);
  num("thermal.ambient", p.thermal.ambient);
  num("thermal.entropic_coefficient", p.thermal.entropic_coefficient);
  num("faraday", p.faraday);
  num("gas_constant", p.gas_constant);
  num("reference_temperature", p.reference_temperature);
  num("electrolyte_concentration", p.electrolyte_concentration);
  num("transfer_coefficient", p.transfer_coefficient);
  num("side_reaction_potential", p.side_reaction_potential);
  num("nominal_capacity_ah", p.nominal_capacity_ah);
  num("electrode_area", p.electrode_area);
  double nodes = p.radial_nodes;
  num("radial_nodes", nodes);
  double version = 1;
  num("format_version", version);

  for (const auto& [key, value] : kv) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("plant config: unknown key '" + key + "'");
    it->second(value);
  }
  if (version != 1) throw ConfigError("plant config: unsupported format_version");
  if (nodes != std::floor(nodes)) throw ConfigError("plant config: radial_nodes must be an integer");
  p.radial_nodes = static_cast<int>(nodes);
  p.validate();
  return p;
}

double arrhenius(double reference_value, double activation_energy, double temperature,
                 const PlantParams& params) {
  return reference_value * std::exp(activation_energy / params.gas_constant *
                                    (1.0 / params.reference_temperature - 1.0 / temperature));
}

}  // namespace drsc::plant
