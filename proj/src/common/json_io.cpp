#include "drsc/common/json_io.hpp"

#include "drsc/common/error.hpp"

#include <fstream>
#include <string>

namespace drsc {

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact(path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& value) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << value.dump(2) << '\n';
}

Json to_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigError("expected a JSON array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError("expected a JSON array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Json matrix_to_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(to_json(m.row(r).transpose()));
  return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigError("expected a JSON array of rows");
  if (j.empty()) return {};
  const auto cols = vector_from_json(j[0]).size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto row = vector_from_json(j[r]);
    if (row.size() != cols) throw ConfigError("ragged JSON matrix");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

void throw_missing_key(const char* key) { throw ConfigError(std::string("missing JSON key '") + key + "'"); }
void throw_bad_key(const char* key) { throw ConfigError(std::string("JSON key '") + key + "' has the wrong type"); }

}  // namespace drsc
