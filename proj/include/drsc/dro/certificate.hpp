#pragma once

#include "drsc/dro/wasserstein.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <string>

namespace drsc::dro {

enum class RadiusMethod { Concentration, Diameter };

std::string to_string(RadiusMethod method);
RadiusMethod radius_method_from_string(const std::string& name);

struct DroConfig {
  double beta = 0.9;  // confidence of the ambiguity ball
  double eta = 0.1;   // admissible violation probability
  RadiusMethod method = RadiusMethod::Concentration;
  double tolerance = 1e-6;
  double sigma_max_factor = 3.0;
  std::optional<double> ridge;
};

/// Everything needed to turn residual data into a deterministic constraint offset.
struct AmbiguityCertificate {
  RadiusMethod method = RadiusMethod::Concentration;
  bool fell_back_to_diameter = false;
  double radius_constant = 0.0;  // C or D
  double alpha = 0.0;            // concentration minimizer, 0 for the diameter method
  double epsilon = 0.0;
  double beta = 0.0;
  double eta = 0.0;
  double sigma = 0.0;
  double lambda = 0.0;
  double h = 0.0;
  double sigma_max = 0.0;
  double tolerance = 0.0;
  double ridge = 0.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd sqrt_cov;
  Eigen::MatrixXd vertices;  // 2^m x m, original residual units
  Eigen::Index samples = 0;
  Eigen::Index dims = 0;
  std::string residual_sha256;

  /// Pessimistic offset per constraint dimension: the largest vertex coordinate.
  [[nodiscard]] Eigen::VectorXd offset() const { return vertices.colwise().maxCoeff().transpose(); }
};

/// normalize -> radius -> sigma bisection -> vertices. If the concentration radius
/// overflows, the diameter radius is used and the fallback is flagged.
AmbiguityCertificate build_certificate(const Eigen::Ref<const Eigen::MatrixXd>& residuals, const DroConfig& config,
                                       const std::string& residual_sha256 = {});

void save_certificate(const std::filesystem::path& path, const AmbiguityCertificate& certificate);
AmbiguityCertificate load_certificate(const std::filesystem::path& path);

}  // namespace drsc::dro
