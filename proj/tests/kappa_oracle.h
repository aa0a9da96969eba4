// Copyright 2026 The nlicheck Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Agreement statistics coded independently of the library.

#ifndef NLICHECK_TESTS_KAPPA_ORACLE_H_
#define NLICHECK_TESTS_KAPPA_ORACLE_H_

#include <utility>
#include <vector>

namespace nlicheck::testing {

// Cohen's kappa from ordered (rater A, rater B) label pairs via the k x k
// confusion matrix.
inline double CohenKappa(const std::vector<std::pair<int, int>>& pairs,
                         int categories) {
  std::vector<std::vector<double>> m(categories,
                                     std::vector<double>(categories, 0.0));
  for (const auto& [a, b] : pairs) m[a][b] += 1.0;
  const double n = static_cast<double>(pairs.size());
  double observed = 0.0;
  for (int c = 0; c < categories; ++c) observed += m[c][c] / n;
  double expected = 0.0;
  for (int c = 0; c < categories; ++c) {
    double row = 0.0, col = 0.0;
    for (int d = 0; d < categories; ++d) {
      row += m[c][d];
      col += m[d][c];
    }
    expected += (row / n) * (col / n);
  }
  return (observed - expected) / (1.0 - expected);
}

// A two-rater count table does not say which rater gave which label, so
// the rater-order-free Cohen's kappa counts every item under both orders.
inline double SymmetricCohenKappa(const std::vector<std::vector<int>>& table) {
  const int categories = static_cast<int>(table.front().size());
  std::vector<std::pair<int, int>> pairs;
  for (const std::vector<int>& row : table) {
    std::vector<int> labels;
    for (int c = 0; c < categories; ++c) {
      for (int k = 0; k < row[c]; ++k) labels.push_back(c);
    }
    pairs.emplace_back(labels[0], labels[1]);
    pairs.emplace_back(labels[1], labels[0]);
  }
  return CohenKappa(pairs, categories);
}

}  // namespace nlicheck::testing

#endif  // NLICHECK_TESTS_KAPPA_ORACLE_H_
