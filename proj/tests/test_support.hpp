#pragma once

#include "drsc/plant/params.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace drsc::test {

inline std::filesystem::path config_dir() { return DRSC_CONFIG_DIR; }

inline const plant::PlantParams& default_plant() {
  static const plant::PlantParams params = plant::load_plant_params(config_dir() / "plant_default.cfg");
  return params;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("drsc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace drsc::test
