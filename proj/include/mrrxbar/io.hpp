#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mrrxbar/common.hpp"
#include "mrrxbar/errors.hpp"

namespace mrrxbar {

inline std::ofstream open_output(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write: " + path);
  return f;
}

inline void write_csv(const std::string& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream f = open_output(path);
  for (size_t c = 0; c < header.size(); ++c)
    f << (c ? "," : "") << header[c];
  f << "\n";
  for (const auto& row : rows) {
    for (size_t c = 0; c < row.size(); ++c)
      f << (c ? "," : "") << format_num(row[c]);
    f << "\n";
  }
}

// bare numeric grid, no header; round-trips with load_matrix_csv
inline void write_matrix_csv(const std::string& path, const Mat& m) {
  std::ofstream f = open_output(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      f << (j ? "," : "") << format_num(m(i, j));
    f << "\n";
  }
}

inline Mat load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ConfigError(path + ":" + std::to_string(lineno) +
                          ": bad numeric value '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ConfigError(path + ":" + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError(path + ": empty matrix");
  Mat m(rows.size(), rows.front().size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows.front().size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

// a single row or a single column of numbers
inline Vec load_vector_csv(const std::string& path) {
  const Mat m = load_matrix_csv(path);
  if (m.rows() == 1) return m.row(0).transpose();
  if (m.cols() == 1) return m.col(0);
  throw ConfigError(path + ": expected a vector, got " + std::to_string(m.rows()) +
                    "x" + std::to_string(m.cols()));
}

}  // namespace mrrxbar
