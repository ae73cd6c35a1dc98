#include "drsc/experiment/config.hpp"

#include "drsc/common/error.hpp"
#include "drsc/common/hash.hpp"

#include <cmath>
#include <set>

namespace drsc::experiment {

namespace {

constexpr const char* kFormat = "drsc-experiment-config";
constexpr int kVersion = 1;

/// Reads optional keys of one section into fields and rejects unknown keys.
class SectionReader {
 public:
  SectionReader(const Json& root, const char* name) : name_(name) {
    if (root.contains(name)) {
      if (!root.at(name).is_object()) throw ConfigError(std::string("config section '") + name + "' must be an object");
      section_ = &root.at(name);
    }
  }
  ~SectionReader() noexcept(false) {
    if (section_ == nullptr || std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : section_->items())
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + std::string(name_) + "." + key + "'");
  }

  template <typename T>
  void operator()(const char* key, T& field) {
    seen_.insert(key);
    if (section_ == nullptr || !section_->contains(key)) return;
    try {
      field = section_->at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config key '" + std::string(name_) + "." + key + "' has the wrong type");
    }
  }

  void operator()(const char* key, std::optional<int>& field) {
    seen_.insert(key);
    if (section_ == nullptr || !section_->contains(key)) return;
    if (section_->at(key).is_null()) {
      field.reset();
      return;
    }
    int v = 0;
    (*this)(key, v);
    field = v;
  }

 private:
  const char* name_;
  const Json* section_ = nullptr;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid experiment config: " + what);
}

}  // namespace

void ExperimentConfig::validate() const {
  check(!plant_config.empty(), "plant.config is empty");
  check(radial_nodes == 0 || radial_nodes >= 3, "plant.radial_nodes must be 0 or >= 3");
  check(dt > 0.0 && std::isfinite(dt), "table.dt_s must be positive");
  check(horizon >= 1, "table.horizon must be >= 1");
  check(soc_initial >= 0.0 && soc_initial < soc_target && soc_target <= 1.0, "need 0 <= soc_initial < soc_target <= 1");
  check(ambient > 0.0, "table.ambient_K must be positive");
  check(episodes >= 1, "table.episodes must be >= 1");
  check(episode_length >= dt && control_length >= dt, "episode and control lengths must cover one step");
  check(max_current > 0.0, "table.max_current_C must be positive");
  check(beta > 0.0 && beta < 1.0, "table.beta must lie in (0, 1)");
  check(eta > 0.0 && eta < 1.0, "table.eta must lie in (0, 1)");
  check(min_hold >= 1 && max_hold >= min_hold, "datagen holds must satisfy 1 <= min <= max");
  check(variance_threshold > 0.0 && variance_threshold <= 1.0, "pca.variance_threshold must lie in (0, 1]");
  check(!fixed_q || *fixed_q >= 1, "pca.fixed_q must be >= 1");
  check(stride >= 1, "samples.stride must be >= 1");
  check(train_fraction > 0.0 && train_fraction < 1.0, "samples.train_fraction must lie in (0, 1)");
  check(!hidden.empty(), "surrogate.hidden must list at least one layer");
  for (const int h : hidden) check(h >= 1, "surrogate.hidden sizes must be >= 1");
  check(epochs >= 1 && batch_size >= 1 && learning_rate > 0.0, "surrogate epochs, batch size and rate must be positive");
  check(validation_fraction >= 0.0 && validation_fraction < 1.0, "surrogate.validation_fraction must lie in [0, 1)");
  dro::radius_method_from_string(radius_method);
  check(dro_tolerance > 0.0 && sigma_max_factor > 0.0, "dro tolerance and sigma_max_factor must be positive");
  control::solver_kind_from_string(solver);
  check(ranking == "feasibility-first" || ranking == "penalty", "control.ranking must be feasibility-first or penalty");
  check(population >= 1 && iterations >= 1 && mutation_scale > 0.0 && mutation_decay > 0.0, "invalid ES settings");
  check(grad_max_iterations >= 1 && grad_penalty_weight >= 0.0 && grad_initial_step > 0.0, "invalid gradient settings");
  check(v_cutoff > 0.0, "control.v_cutoff_V must be positive");
  check(max_temperature > ambient, "control.max_temperature_K must exceed the ambient temperature");
  check(scaling_factor >= 1, "scaling.radial_factor must be >= 1");
  check(comparison_states >= 1, "report.comparison_states must be >= 1");
}

std::filesystem::path ExperimentConfig::plant_path() const {
  const std::filesystem::path p(plant_config);
  return p.is_absolute() ? p : base_dir / p;
}

plant::PlantParams ExperimentConfig::plant() const {
  auto params = plant::load_plant_params(plant_path());
  if (radial_nodes > 0) params.radial_nodes = radial_nodes;
  params.thermal.ambient = ambient;
  params.validate();
  return params;
}

datagen::EpisodeConfig ExperimentConfig::episode_config() const {
  datagen::EpisodeConfig c;
  c.dt = dt;
  c.episode_length = episode_length;
  c.max_current = max_current;
  c.soc_initial = soc_initial;
  c.soc_target = soc_target;
  c.ambient = ambient;
  c.min_hold = min_hold;
  c.max_hold = max_hold;
  return c;
}

datagen::WindowConfig ExperimentConfig::window_config() const {
  datagen::WindowConfig c;
  c.horizon = horizon;
  c.stride = stride;
  c.soc_target = soc_target;
  c.dt = dt;
  return c;
}

reduction::ReducerOptions ExperimentConfig::reducer_options(int radial) const {
  reduction::ReducerOptions o;
  if (field_scaling) o.field_sizes = {radial, radial, 1};
  o.variance_threshold = variance_threshold;
  if (fixed_q) o.fixed_q = *fixed_q;
  return o;
}

surrogate::TrainConfig ExperimentConfig::train_config(std::uint64_t net_seed) const {
  surrogate::TrainConfig c;
  c.hidden.assign(hidden.begin(), hidden.end());
  c.epochs = epochs;
  c.batch_size = batch_size;
  c.learning_rate = learning_rate;
  c.validation_fraction = validation_fraction;
  c.seed = net_seed;
  return c;
}

dro::DroConfig ExperimentConfig::dro_config() const {
  dro::DroConfig c;
  c.beta = beta;
  c.eta = eta;
  c.method = dro::radius_method_from_string(radius_method);
  c.tolerance = dro_tolerance;
  c.sigma_max_factor = sigma_max_factor;
  return c;
}

control::RhcConfig ExperimentConfig::rhc_config(double offset, std::uint64_t es_seed) const {
  control::RhcConfig c;
  c.solver = control::solver_kind_from_string(solver);
  c.es.population = population;
  c.es.iterations = iterations;
  c.es.mutation_scale = mutation_scale;
  c.es.mutation_decay = mutation_decay;
  c.es.ranking = ranking == "penalty" ? control::RankingRule::Penalty : control::RankingRule::FeasibilityFirst;
  c.es.penalty_weight = es_penalty_weight;
  c.es.threads = es_threads;
  c.grad.max_iterations = grad_max_iterations;
  c.grad.penalty_weight = grad_penalty_weight;
  c.grad.initial_step = grad_initial_step;
  c.u_min = 0.0;
  c.u_max = max_current;
  c.offset = offset;
  c.seed = es_seed;
  return c;
}

control::ClosedLoopConfig ExperimentConfig::closed_loop_config() const {
  control::ClosedLoopConfig c;
  c.dt = dt;
  c.length = control_length;
  c.soc_initial = soc_initial;
  c.soc_target = soc_target;
  c.ambient = ambient;
  return c;
}

std::uint64_t ExperimentConfig::episode_seed() const { return stream_seed(seed, 1); }
std::uint64_t ExperimentConfig::split_seed() const { return stream_seed(seed, 2); }
std::uint64_t ExperimentConfig::training_seed(int net) const { return stream_seed(seed, 3, static_cast<std::uint64_t>(net)); }
std::uint64_t ExperimentConfig::control_seed() const { return stream_seed(seed, 4); }

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["seed"] = c.seed;
  j["plant"] = {{"config", c.plant_config}, {"radial_nodes", c.radial_nodes}};
  j["table"] = {{"dt_s", c.dt},
                {"horizon", c.horizon},
                {"soc_initial", c.soc_initial},
                {"soc_target", c.soc_target},
                {"ambient_K", c.ambient},
                {"episodes", c.episodes},
                {"episode_length_s", c.episode_length},
                {"max_current_C", c.max_current},
                {"beta", c.beta},
                {"eta", c.eta}};
  j["datagen"] = {{"min_hold", c.min_hold}, {"max_hold", c.max_hold}, {"threads", c.datagen_threads}};
  j["pca"] = {{"variance_threshold", c.variance_threshold},
              {"fixed_q", c.fixed_q ? Json(*c.fixed_q) : Json(nullptr)},
              {"field_scaling", c.field_scaling}};
  j["samples"] = {{"stride", c.stride}, {"train_fraction", c.train_fraction}};
  j["surrogate"] = {{"hidden", c.hidden},
                    {"epochs", c.epochs},
                    {"batch_size", c.batch_size},
                    {"learning_rate", c.learning_rate},
                    {"validation_fraction", c.validation_fraction},
                    {"temperature_net", c.temperature_net}};
  j["dro"] = {{"radius", c.radius_method}, {"tolerance", c.dro_tolerance}, {"sigma_max_factor", c.sigma_max_factor}};
  j["control"] = {{"solver", c.solver},
                  {"population", c.population},
                  {"iterations", c.iterations},
                  {"mutation_scale", c.mutation_scale},
                  {"mutation_decay", c.mutation_decay},
                  {"ranking", c.ranking},
                  {"es_penalty_weight", c.es_penalty_weight},
                  {"threads", c.es_threads},
                  {"grad_max_iterations", c.grad_max_iterations},
                  {"grad_penalty_weight", c.grad_penalty_weight},
                  {"grad_initial_step", c.grad_initial_step},
                  {"v_cutoff_V", c.v_cutoff},
                  {"max_temperature_K", c.max_temperature},
                  {"length_s", c.control_length}};
  j["scaling"] = {{"radial_factor", c.scaling_factor}};
  j["report"] = {{"comparison_states", c.comparison_states}};
  return j;
}

ExperimentConfig config_from_json(const Json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  if (j.value("format", std::string(kFormat)) != kFormat) throw ConfigError("not an experiment config");
  if (j.value("version", kVersion) != kVersion) throw ConfigError("unsupported experiment config version");
  static const std::set<std::string> sections{"format", "version", "seed",    "plant",   "table",  "datagen",
                                              "pca",    "samples", "surrogate", "dro", "control", "scaling", "report"};
  for (const auto& [key, value] : j.items())
    if (!sections.count(key)) throw ConfigError("unknown config key '" + key + "'");

  ExperimentConfig c;
  c.base_dir = base_dir;
  if (j.contains("seed")) c.seed = required<std::uint64_t>(j, "seed");
  {
    SectionReader r(j, "plant");
    r("config", c.plant_config);
    r("radial_nodes", c.radial_nodes);
  }
  {
    SectionReader r(j, "table");
    r("dt_s", c.dt);
    r("horizon", c.horizon);
    r("soc_initial", c.soc_initial);
    r("soc_target", c.soc_target);
    r("ambient_K", c.ambient);
    r("episodes", c.episodes);
    r("episode_length_s", c.episode_length);
    r("max_current_C", c.max_current);
    r("beta", c.beta);
    r("eta", c.eta);
  }
  {
    SectionReader r(j, "datagen");
    r("min_hold", c.min_hold);
    r("max_hold", c.max_hold);
    r("threads", c.datagen_threads);
  }
  {
    SectionReader r(j, "pca");
    r("variance_threshold", c.variance_threshold);
    r("fixed_q", c.fixed_q);
    r("field_scaling", c.field_scaling);
  }
  {
    SectionReader r(j, "samples");
    r("stride", c.stride);
    r("train_fraction", c.train_fraction);
  }
  {
    SectionReader r(j, "surrogate");
    r("hidden", c.hidden);
    r("epochs", c.epochs);
    r("batch_size", c.batch_size);
    r("learning_rate", c.learning_rate);
    r("validation_fraction", c.validation_fraction);
    r("temperature_net", c.temperature_net);
  }
  {
    SectionReader r(j, "dro");
    r("radius", c.radius_method);
    r("tolerance", c.dro_tolerance);
    r("sigma_max_factor", c.sigma_max_factor);
  }
  {
    SectionReader r(j, "control");
    r("solver", c.solver);
    r("population", c.population);
    r("iterations", c.iterations);
    r("mutation_scale", c.mutation_scale);
    r("mutation_decay", c.mutation_decay);
    r("ranking", c.ranking);
    r("es_penalty_weight", c.es_penalty_weight);
    r("threads", c.es_threads);
    r("grad_max_iterations", c.grad_max_iterations);
    r("grad_penalty_weight", c.grad_penalty_weight);
    r("grad_initial_step", c.grad_initial_step);
    r("v_cutoff_V", c.v_cutoff);
    r("max_temperature_K", c.max_temperature);
    r("length_s", c.control_length);
  }
  {
    SectionReader r(j, "scaling");
    r("radial_factor", c.scaling_factor);
  }
  {
    SectionReader r(j, "report");
    r("comparison_states", c.comparison_states);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return config_from_json(read_json(path), std::filesystem::absolute(path).parent_path());
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& config) {
  write_json(path, to_json(config));
}

std::string section_hash(const ExperimentConfig& config, const std::string& section) {
  const Json j = to_json(config);
  if (section == "seed") return sha256_hex(j.at("seed").dump());
  if (!j.contains(section) || section == "format" || section == "version")
    throw ConfigError("unknown config section '" + section + "'");
  return sha256_hex(j.at(section).dump());
}

}  // namespace drsc::experiment
