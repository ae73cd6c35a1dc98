#include "drsc/reduction/reducer.hpp"

#include "drsc/common/csv.hpp"
#include "drsc/common/error.hpp"
#include "drsc/common/hash.hpp"
#include "drsc/common/json_io.hpp"

#include <string>

namespace drsc::reduction {

namespace {
constexpr int kFormatVersion = 1;
}

StateReducer fit_reducer(const Eigen::Ref<const Eigen::MatrixXd>& states, const ReducerOptions& options) {
  StateReducer r;
  r.scaling = options.field_sizes.empty() ? FieldScaling<double>::identity(states.cols())
                                          : fit_field_scaling(states, options.field_sizes);
  r.basis = fit_pca(r.scaling.apply_rows(states));
  if (options.fixed_q) {
    if (*options.fixed_q < 1 || *options.fixed_q > r.basis.components.rows())
      throw ConfigError("fixed q outside [1, rank bound]");
    r.basis.q = *options.fixed_q;
  } else {
    r.basis.q = choose_q(r.basis, options.variance_threshold);
  }
  return r;
}

std::filesystem::path save_reducer(const std::filesystem::path& header, const StateReducer& reducer) {
  const auto& b = reducer.basis;
  auto payload = header;
  payload.replace_extension(".csv");

  csv::Table t;
  for (Eigen::Index i = 0; i < b.dimension(); ++i) t.columns.push_back("x" + std::to_string(i));
  t.values.resize(b.components.rows() + 1, b.dimension());
  t.values.row(0) = b.mean.transpose();
  t.values.bottomRows(b.components.rows()) = b.components;
  csv::write(payload, t);

  Json fields = Json::array();
  for (std::size_t f = 0; f < reducer.scaling.field_sizes.size(); ++f)
    fields.push_back({{"size", reducer.scaling.field_sizes[f]},
                      {"offset", reducer.scaling.offsets[f]},
                      {"scale", reducer.scaling.scales[f]}});
  Json j = {
      {"format", "drsc-pca-basis"},
      {"version", kFormatVersion},
      {"dimension", b.dimension()},
      {"components", b.components.rows()},
      {"samples", b.samples},
      {"q", b.q},
      {"singular_values", to_json(b.singular_values)},
      {"explained_variance_ratio", to_json(b.explained_variance_ratio)},
      {"cumulative_variance_at_q", cumulative_variance(b, b.q)},
      {"field_scaling", fields},
      {"payload", payload.filename().string()},
      {"payload_sha256", sha256_file(payload)},
  };
  write_json(header, j);
  return payload;
}

StateReducer load_reducer(const std::filesystem::path& header) {
  const Json j = read_json(header);
  if (required<std::string>(j, "format") != "drsc-pca-basis" || required<int>(j, "version") != kFormatVersion)
    throw ConfigError("unsupported PCA basis format in " + header.string());
  const auto payload = header.parent_path() / required<std::string>(j, "payload");
  if (!std::filesystem::exists(payload)) throw MissingArtifact(payload.string());
  if (sha256_file(payload) != required<std::string>(j, "payload_sha256")) throw StaleArtifact(payload.string());

  const auto t = csv::read(payload);
  const auto n = required<Eigen::Index>(j, "dimension");
  const auto k = required<Eigen::Index>(j, "components");
  if (t.values.cols() != n || t.values.rows() != k + 1) throw DimensionMismatch("PCA payload shape differs from header");

  StateReducer r;
  auto& b = r.basis;
  b.mean = t.values.row(0).transpose();
  b.components = t.values.bottomRows(k);
  b.singular_values = vector_from_json(j.at("singular_values"));
  b.explained_variance_ratio = vector_from_json(j.at("explained_variance_ratio"));
  b.samples = required<Eigen::Index>(j, "samples");
  b.q = required<Eigen::Index>(j, "q");
  if (b.q < 1 || b.q > k) throw ConfigError("PCA header q out of range");
  for (const auto& f : required<Json>(j, "field_scaling")) {
    r.scaling.field_sizes.push_back(required<Eigen::Index>(f, "size"));
    r.scaling.offsets.push_back(required<double>(f, "offset"));
    r.scaling.scales.push_back(required<double>(f, "scale"));
  }
  if (r.scaling.dimension() != n) throw DimensionMismatch("field scaling does not cover the basis dimension");
  return r;
}

}  // namespace drsc::reduction
