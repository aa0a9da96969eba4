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

#ifndef NLICHECK_RIDGE_H_
#define NLICHECK_RIDGE_H_

#include <optional>

#include <Eigen/Dense>

#include "absl/status/statusor.h"

namespace nlicheck {

struct RidgeSolution {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
};

// Minimizes sum_i w_i (y_i - x_i.beta - b)^2 + lambda |beta|^2 through the
// normal equations. The intercept is unpenalized (and fixed at 0 when
// fit_intercept is false). Weights default to 1. A singular system is an
// error; callers should then pass lambda > 0.
absl::StatusOr<RidgeSolution> SolveRidge(
    const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
    bool fit_intercept = true,
    const std::optional<Eigen::VectorXd>& weights = std::nullopt);

// The minimized objective, for stationarity checks.
double RidgeObjective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      double lambda, const RidgeSolution& solution,
                      const std::optional<Eigen::VectorXd>& weights =
                          std::nullopt);

}  // namespace nlicheck

#endif  // NLICHECK_RIDGE_H_
