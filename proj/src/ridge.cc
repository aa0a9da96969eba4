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

#include "nlicheck/ridge.h"

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace nlicheck {

namespace {

// Reciprocal condition estimates below this are treated as singular.
constexpr double kMinRcond = 1e-12;

}  // namespace

absl::StatusOr<RidgeSolution> SolveRidge(
    const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
    bool fit_intercept, const std::optional<Eigen::VectorXd>& weights) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (n == 0 || y.size() != n) {
    return absl::InvalidArgumentError(absl::StrCat(
        "design has ", n, " rows but the target has ", y.size()));
  }
  if (!(lambda >= 0.0)) {
    return absl::InvalidArgumentError("lambda must be non-negative");
  }
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  if (weights) {
    if (weights->size() != n || (weights->array() < 0.0).any()) {
      return absl::InvalidArgumentError("weights must be n non-negatives");
    }
    w = *weights;
  }
  const double total = w.sum();
  if (!(total > 0.0)) return absl::InvalidArgumentError("weights sum to 0");

  Eigen::RowVectorXd x_mean = Eigen::RowVectorXd::Zero(p);
  double y_mean = 0.0;
  if (fit_intercept) {
    x_mean = (w.transpose() * x) / total;
    y_mean = w.dot(y) / total;
  }
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  RidgeSolution solution;
  if (p == 0) {
    solution.coefficients = Eigen::VectorXd(0);
    solution.intercept = y_mean;
    return solution;
  }
  Eigen::MatrixXd gram = xc.transpose() * w.asDiagonal() * xc;
  gram.diagonal().array() += lambda;
  const Eigen::VectorXd rhs = xc.transpose() * (w.asDiagonal() * yc);
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success || llt.rcond() < kMinRcond) {
    return absl::FailedPreconditionError(absl::StrCat(
        "normal equations are singular at lambda=", lambda,
        "; use lambda > 0"));
  }
  solution.coefficients = llt.solve(rhs);
  solution.intercept = fit_intercept ? y_mean - x_mean.dot(solution.coefficients)
                                     : 0.0;
  return solution;
}

double RidgeObjective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      double lambda, const RidgeSolution& solution,
                      const std::optional<Eigen::VectorXd>& weights) {
  Eigen::VectorXd residual =
      (y - x * solution.coefficients).array() - solution.intercept;
  double loss = weights ? (weights->array() * residual.array().square()).sum()
                        : residual.squaredNorm();
  return loss + lambda * solution.coefficients.squaredNorm();
}

}  // namespace nlicheck
