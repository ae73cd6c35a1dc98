#pragma once

#include "drsc/common/json_io.hpp"
#include "drsc/control/closed_loop.hpp"
#include "drsc/datagen/episodes.hpp"
#include "drsc/datagen/samples.hpp"
#include "drsc/dro/certificate.hpp"
#include "drsc/plant/params.hpp"
#include "drsc/reduction/reducer.hpp"
#include "drsc/surrogate/network.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace drsc::experiment {

struct ExperimentConfig {
  std::uint64_t seed = 0;

  std::string plant_config = "plant_default.cfg";  // relative to the config file
  int radial_nodes = 0;                            // 0 keeps the plant file value

  double dt = 15.0;
  int horizon = 4;
  double soc_initial = 0.0286;
  double soc_target = 0.7;
  double ambient = 281.0;
  int episodes = 150;
  double episode_length = 3300.0;
  double max_current = 2.5;
  double beta = 0.9;
  double eta = 0.1;

  int min_hold = 1;
  int max_hold = 8;
  unsigned datagen_threads = 0;

  double variance_threshold = 0.99;
  std::optional<int> fixed_q;
  bool field_scaling = true;

  int stride = 1;
  double train_fraction = 0.8;

  std::vector<int> hidden = {10, 10};
  int epochs = 2000;
  int batch_size = 256;
  double learning_rate = 1e-3;
  double validation_fraction = 0.1;
  bool temperature_net = false;  // train G_T and constrain temperature

  std::string radius_method = "concentration";
  double dro_tolerance = 1e-6;
  double sigma_max_factor = 3.0;

  std::string solver = "es";
  int population = 512;
  int iterations = 12;
  double mutation_scale = 0.15;
  double mutation_decay = 0.97;
  std::string ranking = "feasibility-first";
  double es_penalty_weight = 100.0;
  unsigned es_threads = 1;
  int grad_max_iterations = 200;
  double grad_penalty_weight = 100.0;
  double grad_initial_step = 1.0;
  double v_cutoff = 4.2;
  double max_temperature = 318.15;  // K, used only with temperature_net
  double control_length = 3300.0;

  int scaling_factor = 10;
  int comparison_states = 20;

  /// Directory against which plant_config resolves; not serialized.
  std::filesystem::path base_dir;

  void validate() const;

  [[nodiscard]] plant::PlantParams plant() const;
  [[nodiscard]] std::filesystem::path plant_path() const;
  [[nodiscard]] datagen::EpisodeConfig episode_config() const;
  [[nodiscard]] datagen::WindowConfig window_config() const;
  [[nodiscard]] reduction::ReducerOptions reducer_options(int radial) const;
  [[nodiscard]] surrogate::TrainConfig train_config(std::uint64_t seed) const;
  [[nodiscard]] dro::DroConfig dro_config() const;
  [[nodiscard]] control::RhcConfig rhc_config(double offset, std::uint64_t seed) const;
  [[nodiscard]] control::ClosedLoopConfig closed_loop_config() const;

  /// Seeds of the independent random streams, all derived from `seed`.
  [[nodiscard]] std::uint64_t episode_seed() const;
  [[nodiscard]] std::uint64_t split_seed() const;
  [[nodiscard]] std::uint64_t training_seed(int net) const;
  [[nodiscard]] std::uint64_t control_seed() const;
};

Json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const Json& j, const std::filesystem::path& base_dir);

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& config);

/// SHA-256 of one serialized section ("plant", "table", "datagen", ...).
std::string section_hash(const ExperimentConfig& config, const std::string& section);

}  // namespace drsc::experiment
