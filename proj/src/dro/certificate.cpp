#include "drsc/dro/certificate.hpp"

#include "drsc/common/error.hpp"
#include "drsc/common/json_io.hpp"

#include <iostream>

namespace drsc::dro {

std::string to_string(RadiusMethod method) {
  return method == RadiusMethod::Concentration ? "concentration" : "diameter";
}

RadiusMethod radius_method_from_string(const std::string& name) {
  if (name == "concentration") return RadiusMethod::Concentration;
  if (name == "diameter") return RadiusMethod::Diameter;
  throw ConfigError("unknown radius method '" + name + "' (expected concentration or diameter)");
}

AmbiguityCertificate build_certificate(const Eigen::Ref<const Eigen::MatrixXd>& residuals, const DroConfig& config,
                                       const std::string& residual_sha256) {
  const Eigen::MatrixXd data = residuals;
  const auto normalized = normalize(data, config.ridge, config.sigma_max_factor);

  AmbiguityCertificate c;
  c.method = config.method;
  c.beta = config.beta;
  c.eta = config.eta;
  c.tolerance = config.tolerance;
  c.ridge = normalized.ridge;
  c.sigma_max = normalized.sigma_max;
  c.mean = normalized.mean;
  c.sqrt_cov = normalized.sqrt_cov;
  c.samples = normalized.samples();
  c.dims = normalized.dims();
  c.residual_sha256 = residual_sha256;

  const auto use_diameter = [&] {
    c.radius_constant = sample_diameter(normalized.theta);
    c.epsilon = radius_diameter(c.radius_constant, c.samples, config.beta);
    c.alpha = 0.0;
  };
  if (config.method == RadiusMethod::Concentration) {
    try {
      const auto r = radius_concentration(normalized.theta, config.beta);
      c.radius_constant = r.constant;
      c.epsilon = r.epsilon;
      c.alpha = r.alpha;
    } catch (const OverflowGuard& e) {
      std::cerr << "warning: " << e.what() << "; using the diameter radius\n";
      c.fell_back_to_diameter = true;
      c.method = RadiusMethod::Diameter;
      use_diameter();
    }
  } else {
    use_diameter();
  }

  const auto s = compute_sigma(normalized.inf_norms, c.epsilon, config.eta, c.sigma_max, config.tolerance);
  c.sigma = s.sigma;
  c.lambda = s.lambda;
  c.h = s.h;
  c.vertices = hypercube_vertices(c.sigma, c.sqrt_cov, c.mean);
  return c;
}

void save_certificate(const std::filesystem::path& path, const AmbiguityCertificate& c) {
  Json j = {
      {"format", "drsc-ambiguity-certificate"},
      {"version", 1},
      {"method", to_string(c.method)},
      {"fell_back_to_diameter", c.fell_back_to_diameter},
      {"radius_constant", c.radius_constant},
      {"alpha", c.alpha},
      {"epsilon", c.epsilon},
      {"beta", c.beta},
      {"eta", c.eta},
      {"sigma", c.sigma},
      {"lambda", c.lambda},
      {"h", c.h},
      {"sigma_max", c.sigma_max},
      {"tolerance", c.tolerance},
      {"ridge", c.ridge},
      {"mean", to_json(c.mean)},
      {"sqrt_cov", matrix_to_json(c.sqrt_cov)},
      {"vertices", matrix_to_json(c.vertices)},
      {"offset", to_json(c.offset())},
      {"provenance", {{"residual_sha256", c.residual_sha256}, {"samples", c.samples}, {"dims", c.dims}}},
  };
  write_json(path, j);
}

AmbiguityCertificate load_certificate(const std::filesystem::path& path) {
  const Json j = read_json(path);
  if (required<std::string>(j, "format") != "drsc-ambiguity-certificate" || required<int>(j, "version") != 1)
    throw ConfigError("unsupported certificate format in " + path.string());
  AmbiguityCertificate c;
  c.method = radius_method_from_string(required<std::string>(j, "method"));
  c.fell_back_to_diameter = required<bool>(j, "fell_back_to_diameter");
  c.radius_constant = required<double>(j, "radius_constant");
  c.alpha = required<double>(j, "alpha");
  c.epsilon = required<double>(j, "epsilon");
  c.beta = required<double>(j, "beta");
  c.eta = required<double>(j, "eta");
  c.sigma = required<double>(j, "sigma");
  c.lambda = required<double>(j, "lambda");
  c.h = required<double>(j, "h");
  c.sigma_max = required<double>(j, "sigma_max");
  c.tolerance = required<double>(j, "tolerance");
  c.ridge = required<double>(j, "ridge");
  c.mean = vector_from_json(required<Json>(j, "mean"));
  c.sqrt_cov = matrix_from_json(required<Json>(j, "sqrt_cov"));
  c.vertices = matrix_from_json(required<Json>(j, "vertices"));
  const auto& p = required<Json>(j, "provenance");
  c.residual_sha256 = required<std::string>(p, "residual_sha256");
  c.samples = required<Eigen::Index>(p, "samples");
  c.dims = required<Eigen::Index>(p, "dims");
  if (c.mean.size() != c.dims || c.vertices.rows() != (Eigen::Index(1) << c.dims))
    throw DimensionMismatch("certificate dimensions are inconsistent");
  return c;
}

}  // namespace drsc::dro
