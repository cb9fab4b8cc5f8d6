// Copyright 2026 The Starpulse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>
#include <vector>

namespace starpulse {

/// min c'x subject to A x = b and lb <= x <= ub (ub entries may be +inf).
/// Dense data; intended for small instances (hundreds of variables, a
/// handful of rows).
struct LpProblem {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;
  std::vector<int> initial_basis;  // column indices forming a feasible basis
};

struct LpResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  bool optimal = false;
  int iterations = 0;
};

/// Bounded-variable primal simplex with Bland's rule (anti-cycling).
/// The caller supplies a starting basis whose basic solution is feasible;
/// nonbasic variables start at their finite lower bound.
LpResult simplex_solve(const LpProblem& problem, int max_iterations = 100000);

/// Maximize t subject to g_i . delta >= t for every row g_i of `gradients`
/// and lower <= delta <= upper componentwise (lower <= 0 <= upper, so
/// delta = 0, t = 0 is always feasible). Returns the step and the achieved
/// minimum first-order increment t.
struct MinimaxStep {
  Eigen::VectorXd delta;
  double t = 0.0;
};
MinimaxStep minimax_ascent_step(const Eigen::MatrixXd& gradients, const Eigen::VectorXd& lower,
                                const Eigen::VectorXd& upper);

}  // namespace starpulse
