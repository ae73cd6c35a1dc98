#pragma once

#include <json.hpp>

#include <Eigen/Core>

#include <filesystem>
#include <vector>

namespace drsc {

using Json = nlohmann::json;

/// Throws MissingArtifact when absent and ConfigError on malformed JSON.
Json read_json(const std::filesystem::path& path);
/// Two-space indented, trailing newline, parent directories created.
void write_json(const std::filesystem::path& path, const Json& value);

Json to_json(const Eigen::Ref<const Eigen::VectorXd>& v);
Eigen::VectorXd vector_from_json(const Json& j);

/// Row-major nested arrays.
Json matrix_to_json(const Eigen::Ref<const Eigen::MatrixXd>& m);
Eigen::MatrixXd matrix_from_json(const Json& j);

[[noreturn]] void throw_missing_key(const char* key);
[[noreturn]] void throw_bad_key(const char* key);

/// Fetches a required key, raising ConfigError with the key name when missing or mistyped.
template <typename T>
T required(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw_missing_key(key);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw_bad_key(key);
  }
}

}  // namespace drsc
