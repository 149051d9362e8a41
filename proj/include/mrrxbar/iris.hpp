#pragma once

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mrrxbar/common.hpp"
#include "mrrxbar/errors.hpp"

namespace mrrxbar {

struct Dataset {
  Mat x;                                 // samples x features
  std::vector<int> y;                    // class index per sample
  std::vector<std::string> class_names;  // index -> label

  int size() const { return static_cast<int>(x.rows()); }
  int features() const { return static_cast<int>(x.cols()); }
  int classes() const { return static_cast<int>(class_names.size()); }
};

// Numeric feature columns, last column a string class label, one header row.
inline Dataset load_labeled_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty dataset: " + path);

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  Dataset ds;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 2)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": need features and a label");
    std::vector<double> feat;
    for (size_t c = 0; c + 1 < cells.size(); ++c) {
      try {
        size_t used = 0;
        feat.push_back(std::stod(cells[c], &used));
        if (used != cells[c].size()) throw std::invalid_argument(cells[c]);
      } catch (const std::exception&) {
        throw ConfigError(path + ":" + std::to_string(lineno) +
                          ": bad numeric value '" + cells[c] + "'");
      }
    }
    if (!rows.empty() && feat.size() != rows.front().size())
      throw ConfigError(path + ":" + std::to_string(lineno) + ": ragged row");
    const std::string& name = cells.back();
    auto it = std::find(ds.class_names.begin(), ds.class_names.end(), name);
    int cls;
    if (it == ds.class_names.end()) {
      cls = static_cast<int>(ds.class_names.size());
      ds.class_names.push_back(name);
    } else {
      cls = static_cast<int>(it - ds.class_names.begin());
    }
    rows.push_back(std::move(feat));
    labels.push_back(cls);
  }
  if (rows.empty()) throw ConfigError("no samples in dataset: " + path);
  ds.x = Mat(rows.size(), rows.front().size());
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < rows.front().size(); ++c) ds.x(r, c) = rows[r][c];
  ds.y = std::move(labels);
  return ds;
}

// Class-stratified train/test split: train_count samples total, spread over
// classes as evenly as possible (remainder goes to the later classes), drawn
// by per-class shuffle.
inline std::pair<Dataset, Dataset> stratified_split(const Dataset& ds,
                                                    int train_count,
                                                    unsigned seed) {
  if (train_count < ds.classes() || train_count >= ds.size())
    throw ConfigError("stratified_split: train_count out of range");
  std::mt19937 rng(seed);
  const int k = ds.classes();
  std::vector<int> take(k, train_count / k);
  for (int c = k - train_count % k; c < k; ++c) ++take[c];

  std::vector<int> train_idx, test_idx;
  for (int c = 0; c < k; ++c) {
    std::vector<int> idx;
    for (int i = 0; i < ds.size(); ++i)
      if (ds.y[static_cast<size_t>(i)] == c) idx.push_back(i);
    if (static_cast<int>(idx.size()) < take[static_cast<size_t>(c)])
      throw ConfigError("stratified_split: class '" +
                        ds.class_names[static_cast<size_t>(c)] + "' too small");
    std::shuffle(idx.begin(), idx.end(), rng);
    for (size_t i = 0; i < idx.size(); ++i)
      (static_cast<int>(i) < take[static_cast<size_t>(c)] ? train_idx : test_idx)
          .push_back(idx[i]);
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());

  auto select = [&](const std::vector<int>& idx) {
    Dataset out;
    out.class_names = ds.class_names;
    out.x = Mat(idx.size(), ds.features());
    for (size_t r = 0; r < idx.size(); ++r) {
      out.x.row(static_cast<Eigen::Index>(r)) = ds.x.row(idx[r]);
      out.y.push_back(ds.y[static_cast<size_t>(idx[r])]);
    }
    return out;
  };
  return {select(train_idx), select(test_idx)};
}

// Per-feature full-scale divisor (train-split maxima); nonnegative features
// map into [0,1], matching the nonnegative optical input range.
inline Vec fit_feature_scale(const Mat& x) {
  if ((x.array() < 0).any())
    throw NegativeInput("fit_feature_scale: features must be >= 0");
  Vec s = x.colwise().maxCoeff();
  for (int c = 0; c < s.size(); ++c)
    if (s(c) <= 0) s(c) = 1.0;
  return s;
}

inline Mat apply_feature_scale(const Mat& x, const Vec& scale) {
  if (x.cols() != scale.size())
    throw DimensionMismatch("apply_feature_scale: scale length != feature count");
  Mat out = x.array().rowwise() / scale.transpose().array();
  return out.array().max(0.0).min(1.0).matrix();
}

}  // namespace mrrxbar
