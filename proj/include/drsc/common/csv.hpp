#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace drsc::csv {

/// A numeric table with named columns.
struct Table {
  std::vector<std::string> columns;
  Eigen::MatrixXd values;  // rows x columns

  [[nodiscard]] Eigen::Index column_index(const std::string& name) const;
  [[nodiscard]] Eigen::VectorXd column(const std::string& name) const;
};

/// Doubles are written with 17 significant digits so a read back is bit-exact.
std::string format_double(double v);

void write(const std::filesystem::path& path, const Table& table);
Table read(const std::filesystem::path& path);

}  // namespace drsc::csv
