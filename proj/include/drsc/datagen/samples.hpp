#pragma once

#include "drsc/datagen/episodes.hpp"
#include "drsc/reduction/reducer.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace drsc::datagen {

/// Supervised pairs (x~_k, U_{k:k+N}) -> (J, eta_s series, temperature series).
struct SampleSet {
  Eigen::MatrixXd inputs;    // rows x (q + N + 1)
  Eigen::VectorXd labels_j;  // rows
  Eigen::MatrixXd labels_g;  // rows x (N + 1), eta_s
  Eigen::MatrixXd labels_t;  // rows x (N + 1), end-of-step temperature
  std::vector<int> episode;  // source episode index per row
  std::vector<int> step;     // window start within the episode

  Eigen::Index q = 0;
  int horizon = 0;  // N
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::string tag = "all";

  [[nodiscard]] Eigen::Index rows() const { return inputs.rows(); }
  [[nodiscard]] int window() const { return horizon + 1; }
  /// Subset in the given row order.
  [[nodiscard]] SampleSet select(const std::vector<Eigen::Index>& rows, const std::string& tag) const;
};

struct WindowConfig {
  int horizon = 4;  // N, windows hold N + 1 inputs
  int stride = 1;
  double soc_target = 0.7;
  double dt = 15.0;
};

/// Window cost sum_j (soc_next_j - soc_target)^2 over records k..k+N.
double window_cost(const EpisodeLog& episode, Eigen::Index k, int horizon, double soc_target);

SampleSet build_samples(const std::vector<EpisodeLog>& episodes, const reduction::StateReducer& reducer,
                        const WindowConfig& config);

/// Seeded shuffle, then the first round(fraction n) rows form the training set.
std::pair<SampleSet, SampleSet> split(const SampleSet& samples, double fraction, std::uint64_t seed);

/// CSV payload plus `<path>.json` sidecar with metadata and the payload hash.
void save_samples(const std::filesystem::path& path, const SampleSet& samples);
SampleSet load_samples(const std::filesystem::path& path);

}  // namespace drsc::datagen
