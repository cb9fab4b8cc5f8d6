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

#include "starpulse/lp.hpp"

#include <cmath>
#include <limits>

#include "starpulse/io.hpp"

namespace starpulse {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kReducedCostTol = 1e-10;
constexpr double kPivotTol = 1e-12;
}  // namespace

LpResult simplex_solve(const LpProblem& p, int max_iterations) {
  const Eigen::Index m = p.a.rows();
  const Eigen::Index n = p.a.cols();
  if (p.b.size() != m || p.c.size() != n || p.lb.size() != n || p.ub.size() != n) {
    throw Error("simplex_solve: inconsistent problem sizes");
  }
  if (static_cast<Eigen::Index>(p.initial_basis.size()) != m) {
    throw Error("simplex_solve: initial basis must have one column per row");
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!std::isfinite(p.lb[j])) throw Error("simplex_solve: lower bounds must be finite");
    if (p.ub[j] < p.lb[j]) throw Error("simplex_solve: empty variable range");
  }

  std::vector<int> basis = p.initial_basis;
  std::vector<char> in_basis(n, 0);
  for (const int j : basis) in_basis[j] = 1;
  std::vector<char> at_upper(n, 0);  // meaningful for nonbasic columns only

  Eigen::VectorXd x(n);
  for (Eigen::Index j = 0; j < n; ++j) x[j] = p.lb[j];

  LpResult result;
  Eigen::MatrixXd bmat(m, m);
  for (int iter = 0; iter < max_iterations; ++iter) {
    for (Eigen::Index i = 0; i < m; ++i) bmat.col(i) = p.a.col(basis[i]);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(bmat);

    // Basic values for the current nonbasic bound assignment.
    Eigen::VectorXd rhs = p.b;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!in_basis[j] && x[j] != 0.0) rhs -= p.a.col(j) * x[j];
    }
    const Eigen::VectorXd xb = lu.solve(rhs);
    for (Eigen::Index i = 0; i < m; ++i) x[basis[i]] = xb[i];

    // Duals and reduced costs; Bland's rule picks the lowest eligible index.
    Eigen::VectorXd cb(m);
    for (Eigen::Index i = 0; i < m; ++i) cb[i] = p.c[basis[i]];
    const Eigen::VectorXd y = bmat.transpose().partialPivLu().solve(cb);

    Eigen::Index enter = -1;
    bool from_upper = false;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (in_basis[j]) continue;
      if (p.ub[j] - p.lb[j] == 0.0) continue;  // pinned variable can never move
      const double r = p.c[j] - y.dot(p.a.col(j));
      if (!at_upper[j] && r < -kReducedCostTol) {
        enter = j;
        from_upper = false;
        break;
      }
      if (at_upper[j] && r > kReducedCostTol) {
        enter = j;
        from_upper = true;
        break;
      }
    }
    if (enter < 0) {
      result.x = x;
      result.objective = p.c.dot(x);
      result.optimal = true;
      result.iterations = iter;
      return result;
    }

    // Moving the entering variable by +step (from lower) or -step (from
    // upper) changes the basic values by -sign * d * step.
    const Eigen::VectorXd d = lu.solve(p.a.col(enter));
    const double sign = from_upper ? -1.0 : 1.0;

    double step = p.ub[enter] - p.lb[enter];  // own-bound flip distance
    Eigen::Index leave = -1;
    bool leave_to_upper = false;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double rate = -sign * d[i];
      double lim;
      bool to_upper;
      if (rate > kPivotTol) {
        if (p.ub[basis[i]] == kInf) continue;
        lim = (p.ub[basis[i]] - xb[i]) / rate;
        to_upper = true;
      } else if (rate < -kPivotTol) {
        lim = (p.lb[basis[i]] - xb[i]) / rate;
        to_upper = false;
      } else {
        continue;
      }
      lim = std::max(lim, 0.0);
      // Strictly smaller limits win; within the tie tolerance, Bland's rule
      // prefers the smaller leaving column index, and a tie with the
      // entering variable's own flip distance resolves to a pivot.
      if (lim < step - kPivotTol) {
        step = lim;
        leave = i;
        leave_to_upper = to_upper;
      } else if (lim <= step + kPivotTol) {
        if (leave >= 0 && basis[i] < basis[leave]) {
          leave = i;
          leave_to_upper = to_upper;
        } else if (leave < 0 && lim <= step) {
          step = lim;
          leave = i;
          leave_to_upper = to_upper;
        }
      }
    }

    if (step == kInf) {
      result.x = x;
      result.objective = -kInf;
      result.optimal = false;
      result.iterations = iter;
      return result;  // unbounded
    }

    if (leave < 0) {
      // Bound flip: the entering variable crosses its whole range.
      at_upper[enter] = !at_upper[enter];
      x[enter] = at_upper[enter] ? p.ub[enter] : p.lb[enter];
      continue;
    }

    const int leaving_col = basis[leave];
    x[enter] = (from_upper ? p.ub[enter] : p.lb[enter]) + sign * step;
    x[leaving_col] = leave_to_upper ? p.ub[leaving_col] : p.lb[leaving_col];
    at_upper[leaving_col] = leave_to_upper;
    in_basis[leaving_col] = 0;
    in_basis[enter] = 1;
    at_upper[enter] = false;
    basis[leave] = static_cast<int>(enter);
  }
  throw Error("simplex_solve: iteration limit reached");
}

MinimaxStep minimax_ascent_step(const Eigen::MatrixXd& gradients, const Eigen::VectorXd& lower,
                                const Eigen::VectorXd& upper) {
  const Eigen::Index k = gradients.rows();
  const Eigen::Index n = gradients.cols();
  if (k < 1) throw Error("minimax_ascent_step: need at least one gradient");
  if (lower.size() != n || upper.size() != n) throw Error("minimax_ascent_step: bound sizes differ from gradient length");
  for (Eigen::Index j = 0; j < n; ++j) {
    if (lower[j] > 0.0 || upper[j] < 0.0) {
      throw Error("minimax_ascent_step: the step box must contain zero");
    }
  }

  // The raw data is badly scaled: fidelity gradients per rad/s are tiny
  // while the trust box is wide. Solve in unit variables delta_j =
  // s_j * dhat_j with s_j the box half-extent, and divide every row by a
  // single gamma so entries are O(1); a common row factor rescales t
  // without changing the argmax.
  Eigen::VectorXd col_scale(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double s = std::max(-lower[j], upper[j]);
    col_scale[j] = s > 0.0 ? s : 1.0;
  }
  Eigen::MatrixXd scaled = gradients * col_scale.asDiagonal();
  const double gamma = scaled.cwiseAbs().maxCoeff();
  MinimaxStep step;
  if (gamma == 0.0) {
    step.delta = Eigen::VectorXd::Zero(n);
    step.t = 0.0;
    return step;
  }
  scaled /= gamma;

  // Variables [pos (n), neg (n), t, slack (k)] with dhat = pos - neg:
  //   g_i . pos - g_i . neg - t - slack_i = 0,  slack_i >= 0, t >= 0.
  // The all-slack basis is feasible at zero.
  const Eigen::Index nv = 2 * n + 1 + k;
  LpProblem lp;
  lp.a = Eigen::MatrixXd::Zero(k, nv);
  lp.a.block(0, 0, k, n) = scaled;
  lp.a.block(0, n, k, n) = -scaled;
  lp.a.col(2 * n).setConstant(-1.0);
  for (Eigen::Index i = 0; i < k; ++i) lp.a(i, 2 * n + 1 + i) = -1.0;
  lp.b = Eigen::VectorXd::Zero(k);
  lp.c = Eigen::VectorXd::Zero(nv);
  lp.c[2 * n] = -1.0;  // maximize t
  lp.lb = Eigen::VectorXd::Zero(nv);
  lp.ub = Eigen::VectorXd::Constant(nv, kInf);
  lp.ub.head(n) = upper.cwiseQuotient(col_scale);
  lp.ub.segment(n, n) = (-lower).cwiseQuotient(col_scale);
  for (Eigen::Index i = 0; i < k; ++i) lp.initial_basis.push_back(static_cast<int>(2 * n + 1 + i));

  const LpResult res = simplex_solve(lp);
  if (!res.optimal) throw Error("minimax_ascent_step: LP solver failed");

  step.delta = col_scale.asDiagonal() * (res.x.head(n) - res.x.segment(n, n));
  step.t = gamma * res.x[2 * n];
  return step;
}

}  // namespace starpulse
