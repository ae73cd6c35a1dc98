#include "drsc/common/csv.hpp"

#include "drsc/common/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace drsc::csv {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

Eigen::Index Table::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<Eigen::Index>(i);
  throw ConfigError("csv: no column named '" + name + "'");
}

Eigen::VectorXd Table::column(const std::string& name) const {
  return values.col(column_index(name));
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  if (ec != std::errc{}) throw Error("csv: cannot format value");
  return std::string(buf, end);
}

void write(const std::filesystem::path& path, const Table& table) {
  if (static_cast<Eigen::Index>(table.columns.size()) != table.values.cols())
    throw DimensionMismatch("csv: header/value column count differs for " + path.string());
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("csv: cannot open " + path.string() + " for writing");
  for (std::size_t c = 0; c < table.columns.size(); ++c)
    out << (c ? "," : "") << table.columns[c];
  out << '\n';
  for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.values.cols(); ++c)
      out << (c ? "," : "") << format_double(table.values(r, c));
    out << '\n';
  }
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact(path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv: empty file " + path.string());
  t.columns = split_line(line);
  std::vector<double> flat;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto cells = split_line(line);
    if (cells.size() != t.columns.size())
      throw ConfigError("csv: ragged row " + std::to_string(rows + 2) + " in " + path.string());
    for (const auto& cell : cells) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size())
        throw ConfigError("csv: non-numeric cell '" + cell + "' in " + path.string());
      flat.push_back(v);
    }
    ++rows;
  }
  const auto cols = static_cast<Eigen::Index>(t.columns.size());
  t.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      flat.data(), static_cast<Eigen::Index>(rows), cols);
  return t;
}

}  // namespace drsc::csv
