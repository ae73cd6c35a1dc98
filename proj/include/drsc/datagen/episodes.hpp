#pragma once

#include "drsc/plant/params.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace drsc::datagen {

struct EpisodeConfig {
  double dt = 15.0;                // s
  double episode_length = 3300.0;  // s
  double max_current = 2.5;        // C-rate
  double soc_initial = 0.0286;
  double soc_target = 0.7;
  double ambient = 281.0;          // K, also the initial temperature
  int min_hold = 1;                // steps
  int max_hold = 8;

  [[nodiscard]] int max_steps() const;
  void validate() const;
};

enum class Termination { TargetReached, TimeLimit, PlantError };

std::string to_string(Termination t);
Termination termination_from_string(const std::string& s);

/// One simulated trajectory. Record k holds the state at time k dt, the current
/// applied over [k dt, (k+1) dt), the outputs observed under that current, and the
/// SOC and temperature reached at the end of the step.
struct EpisodeLog {
  std::uint64_t seed = 0;
  Termination termination = Termination::TimeLimit;
  std::string error;

  std::vector<double> time;
  std::vector<double> current;
  std::vector<double> soc;
  std::vector<double> voltage;
  std::vector<double> eta_s;
  std::vector<double> temperature;
  std::vector<double> soc_next;
  std::vector<double> temperature_next;
  Eigen::MatrixXd states;  // records x n

  [[nodiscard]] Eigen::Index size() const { return static_cast<Eigen::Index>(time.size()); }
};

/// Piecewise-constant random charging: levels ~ U[0, I_max] held for U{min_hold..max_hold} steps.
EpisodeLog run_random_episode(std::uint64_t seed, const plant::PlantParams& params, const EpisodeConfig& config);

/// Episodes seeded master_seed + i, run on `threads` workers (0 = hardware concurrency).
/// The result is independent of the thread count.
std::vector<EpisodeLog> run_random_episodes(std::uint64_t master_seed, int count, const plant::PlantParams& params,
                                            const EpisodeConfig& config, unsigned threads = 0);

/// All logged states stacked row-wise.
Eigen::MatrixXd stack_states(const std::vector<EpisodeLog>& episodes);

/// One CSV per episode plus manifest.json carrying seeds, terminations and file hashes.
void save_episodes(const std::filesystem::path& dir, const std::vector<EpisodeLog>& episodes,
                   std::uint64_t master_seed, const std::string& config_hash);
/// Verifies every file against the manifest hash.
std::vector<EpisodeLog> load_episodes(const std::filesystem::path& dir);

}  // namespace drsc::datagen
