#pragma once

#include "drsc/control/closed_loop.hpp"
#include "drsc/experiment/config.hpp"
#include "drsc/experiment/manifest.hpp"
#include "drsc/reduction/reducer.hpp"
#include "drsc/surrogate/bundle.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace drsc::experiment {

enum class Variant { Robust, NonRobust, Cccv };
std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

// Artifact layout under the run directory.
inline constexpr const char* kEpisodesDir = "data/episodes";
inline constexpr const char* kBasisHeader = "pca/basis.json";
inline constexpr const char* kBasisPayload = "pca/basis.csv";
inline constexpr const char* kExplainedVariance = "pca/explained_variance.csv";
inline constexpr const char* kTrainSamples = "samples/train.csv";
inline constexpr const char* kTestSamples = "samples/test.csv";
inline constexpr const char* kCostNet = "surrogate/cost.json";
inline constexpr const char* kConstraintNet = "surrogate/constraint.json";
inline constexpr const char* kTemperatureNet = "surrogate/temperature.json";
inline constexpr const char* kTrainReport = "surrogate/train_report.json";
inline constexpr const char* kResidualsTest = "surrogate/residuals_test.csv";
inline constexpr const char* kResidualsTrain = "surrogate/residuals_train.csv";
inline constexpr const char* kCertificate = "dro/certificate.json";
inline constexpr const char* kScalingDir = "scaling";

std::string control_dir(Variant v);

void stage_simulate_data(const ExperimentConfig& config, const std::filesystem::path& run_dir);
void stage_fit_pca(const ExperimentConfig& config, const std::filesystem::path& run_dir);
void stage_train(const ExperimentConfig& config, const std::filesystem::path& run_dir);
void stage_compute_dro(const ExperimentConfig& config, const std::filesystem::path& run_dir);
control::ClosedLoopResult stage_run_control(const ExperimentConfig& config, const std::filesystem::path& run_dir,
                                            Variant variant);
/// Reruns the pipeline with N_r times config.scaling_factor under run_dir/scaling and
/// compares robust per-step controller wall time against the base run.
void stage_scaling(const ExperimentConfig& config, const std::filesystem::path& run_dir);
void stage_report(const ExperimentConfig& config, const std::filesystem::path& run_dir);

/// Every stage in order; the scaling rerun is optional.
void run_all(const ExperimentConfig& config, const std::filesystem::path& run_dir, bool with_scaling = true);

/// Verified controller inputs loaded from a finished pipeline.
struct ControllerArtifacts {
  plant::PlantParams params;
  reduction::StateReducer reducer;
  surrogate::SurrogateBundle bundle;
  double offset = 0.0;  // robust constraint offset r from the certificate
  std::map<std::string, std::string> inputs;  // path -> SHA-256
};
ControllerArtifacts load_controller_artifacts(const ExperimentConfig& config, const std::filesystem::path& run_dir,
                                              bool with_certificate);

/// One closed-loop run without persisting anything.
control::ClosedLoopResult run_variant(const ExperimentConfig& config, const ControllerArtifacts& artifacts,
                                      Variant variant, std::uint64_t es_seed);

}  // namespace drsc::experiment
