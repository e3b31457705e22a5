/*
   Copyright 2026 The phoncl authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/
#pragma once

#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>

#include "phoncl/builtin_data.hpp"
#include "phoncl/common.hpp"

namespace phoncl {

// ---------------------------------------------------------------------------
// Articulatory feature table. Each phoneme maps to one ternary vector of
// length F; the normalized Hamming distance between two vectors is the
// phoneme distance used for difficulty binning.
// ---------------------------------------------------------------------------

inline constexpr int kMinFeatureCount = 20;

struct PhonemeFeatureTable {
  std::vector<std::string> inventory;
  std::vector<std::vector<int>> features;  // values in {+1, -1, 0}
  std::vector<std::string> feature_names;
  std::unordered_map<std::string, int> index;

  int feature_count() const { return static_cast<int>(feature_names.size()); }
  int size() const { return static_cast<int>(inventory.size()); }

  bool contains(const std::string& phoneme) const {
    return index.find(phoneme) != index.end();
  }

  int index_of(const std::string& phoneme) const {
    auto it = index.find(phoneme);
    if (it == index.end()) {
      fail(ErrorKind::kValidation, "unknown phoneme '" + phoneme + "'");
    }
    return it->second;
  }

  void validate() const {
    if (feature_count() < kMinFeatureCount) {
      fail(ErrorKind::kValidation,
           "feature table needs at least " + std::to_string(kMinFeatureCount) +
               " features, got " + std::to_string(feature_count()));
    }
    if (inventory.empty()) fail(ErrorKind::kValidation, "empty phoneme inventory");
    if (inventory.size() != features.size()) {
      fail(ErrorKind::kValidation, "inventory/features row count mismatch");
    }
    std::unordered_map<std::string, int> seen;
    for (size_t i = 0; i < inventory.size(); ++i) {
      if (!seen.emplace(inventory[i], 1).second) {
        fail(ErrorKind::kValidation, "duplicate phoneme '" + inventory[i] + "'");
      }
      if (static_cast<int>(features[i].size()) != feature_count()) {
        fail(ErrorKind::kValidation,
             "phoneme '" + inventory[i] + "' has wrong feature vector length");
      }
      for (int v : features[i]) {
        if (v != 1 && v != -1 && v != 0) {
          fail(ErrorKind::kValidation,
               "phoneme '" + inventory[i] + "' has non-ternary feature value");
        }
      }
    }
  }
};

// TSV layout: header row `phoneme<TAB>name_1..name_F`, then one row per
// phoneme with values +1 | -1 | 0.
inline PhonemeFeatureTable parse_feature_table(std::istream& is) {
  PhonemeFeatureTable table;
  std::string line;
  if (!std::getline(is, line)) {
    fail(ErrorKind::kValidation, "feature table: missing header row");
  }
  auto header = split(trim(line), '\t');
  if (header.size() < 2 || header[0] != "phoneme") {
    fail(ErrorKind::kValidation, "feature table: bad header row");
  }
  table.feature_names.assign(header.begin() + 1, header.end());
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    std::string t = trim(line);
    if (t.empty()) continue;
    auto cells = split(t, '\t');
    if (cells.size() != header.size()) {
      fail(ErrorKind::kValidation,
           "feature table row " + std::to_string(row) + ": wrong column count");
    }
    std::vector<int> vec;
    vec.reserve(cells.size() - 1);
    for (size_t i = 1; i < cells.size(); ++i) {
      const std::string& c = cells[i];
      if (c == "+1" || c == "1") vec.push_back(1);
      else if (c == "-1") vec.push_back(-1);
      else if (c == "0") vec.push_back(0);
      else
        fail(ErrorKind::kValidation,
             "feature table row " + std::to_string(row) + ": bad value '" + c + "'");
    }
    table.index.emplace(cells[0], static_cast<int>(table.inventory.size()));
    table.inventory.push_back(cells[0]);
    table.features.push_back(std::move(vec));
  }
  table.validate();
  return table;
}

inline PhonemeFeatureTable parse_feature_table(const std::string& text) {
  std::istringstream is(text);
  return parse_feature_table(is);
}

inline const PhonemeFeatureTable& builtin_feature_table() {
  static const PhonemeFeatureTable table = parse_feature_table(std::string(data::kFeatureTableTsv));
  return table;
}

// ---------------------------------------------------------------------------
// Distance.
// ---------------------------------------------------------------------------

inline double feature_distance_by_index(const PhonemeFeatureTable& table, int i, int j) {
  const auto& a = table.features[static_cast<size_t>(i)];
  const auto& b = table.features[static_cast<size_t>(j)];
  int diff = 0;
  for (size_t k = 0; k < a.size(); ++k) {
    if (a[k] != b[k]) ++diff;
  }
  return static_cast<double>(diff) / static_cast<double>(table.feature_count());
}

// Normalized Hamming distance over the ternary feature vectors, equal weight
// per feature. Ranges over {0, 1/F, ..., 1}.
inline double feature_distance(const PhonemeFeatureTable& table, const std::string& p,
                               const std::string& q) {
  return feature_distance_by_index(table, table.index_of(p), table.index_of(q));
}

struct PhonemeDistanceMatrix {
  std::vector<std::string> inventory;
  Matrix d;
};

inline PhonemeDistanceMatrix build_distance_matrix(const PhonemeFeatureTable& table) {
  table.validate();
  int n = table.size();
  PhonemeDistanceMatrix m;
  m.inventory = table.inventory;
  m.d = Matrix(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double d = feature_distance_by_index(table, i, j);
      m.d(i, j) = d;
      m.d(j, i) = d;
    }
  }
  return m;
}

inline void write_distance_matrix_csv(const PhonemeDistanceMatrix& m, std::ostream& os) {
  os << "phoneme";
  for (const auto& p : m.inventory) os << ',' << p;
  os << '\n';
  os << std::fixed << std::setprecision(6);
  for (size_t i = 0; i < m.inventory.size(); ++i) {
    os << m.inventory[i];
    for (size_t j = 0; j < m.inventory.size(); ++j) {
      os << ',' << m.d(static_cast<int>(i), static_cast<int>(j));
    }
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Difficulty schemes. Bins are half-open intervals over (0, 1]; a boundary
// value belongs to the harder (lower-ordinal) bin. Ordinal 0 is hardest.
// ---------------------------------------------------------------------------

struct DifficultyScheme {
  std::string name;
  std::vector<double> boundaries;  // strictly ascending, inside (0, 1)

  int bin_count() const { return static_cast<int>(boundaries.size()) + 1; }

  void validate() const {
    if (boundaries.empty()) fail(ErrorKind::kValidation, "scheme has no boundaries");
    for (size_t i = 0; i < boundaries.size(); ++i) {
      if (boundaries[i] <= 0.0 || boundaries[i] >= 1.0) {
        fail(ErrorKind::kValidation, "scheme boundary outside (0, 1)");
      }
      if (i > 0 && boundaries[i] <= boundaries[i - 1]) {
        fail(ErrorKind::kValidation, "scheme boundaries not strictly ascending");
      }
    }
  }
};

inline DifficultyScheme make_scheme(const std::string& name) {
  DifficultyScheme s;
  s.name = name;
  if (name == "2LV") {
    s.boundaries = {0.3};
  } else if (name == "3LV") {
    s.boundaries = {0.2, 0.3};
  } else if (name == "6LV") {
    s.boundaries = {0.1, 0.2, 0.3, 0.4, 0.5};
  } else {
    fail(ErrorKind::kValidation, "unknown difficulty scheme '" + name + "'");
  }
  return s;
}

// Bin of a distance d in (0, 1]: the number of boundaries strictly below d,
// so d exactly on a boundary lands in the harder bin.
inline int difficulty_bin(double d, const DifficultyScheme& scheme) {
  if (!(d > 0.0) || d > 1.0 || !std::isfinite(d)) {
    fail(ErrorKind::kDomain, "distance " + std::to_string(d) + " outside (0, 1]");
  }
  int bin = 0;
  for (double b : scheme.boundaries) {
    if (b < d) ++bin;
  }
  return bin;
}

// ---------------------------------------------------------------------------
// Distance statistics over the off-diagonal upper triangle.
// ---------------------------------------------------------------------------

inline constexpr double kHistogramBucketWidth = 0.05;

struct DistanceStats {
  double mean = 0.0;
  double median = 0.0;
  std::vector<int> histogram;  // 20 buckets of width 0.05 covering [0, 1]
};

inline DistanceStats distance_stats(const PhonemeDistanceMatrix& m) {
  int n = m.d.rows;
  if (n < 2) fail(ErrorKind::kDomain, "distance matrix smaller than 2x2");
  std::vector<double> values;
  values.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) values.push_back(m.d(i, j));
  }
  DistanceStats stats;
  stats.histogram.assign(static_cast<size_t>(std::lround(1.0 / kHistogramBucketWidth)), 0);
  double sum = 0.0;
  for (double v : values) {
    sum += v;
    int bucket = static_cast<int>(v / kHistogramBucketWidth);
    bucket = std::clamp(bucket, 0, static_cast<int>(stats.histogram.size()) - 1);
    ++stats.histogram[static_cast<size_t>(bucket)];
  }
  stats.mean = sum / static_cast<double>(values.size());
  std::sort(values.begin(), values.end());
  size_t k = values.size();
  stats.median = (k % 2 == 1) ? values[k / 2] : 0.5 * (values[k / 2 - 1] + values[k / 2]);
  return stats;
}

}  // namespace phoncl
