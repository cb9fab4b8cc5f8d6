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

#include <vector>

#include "starpulse/state.hpp"

namespace starpulse {

/// Phase-estimation figures of merit on a theta grid. Entries where the
/// signal derivative falls below the floor are masked: var_theta is
/// meaningless there and set to NaN.
struct SensingCurve {
  std::vector<double> theta;
  std::vector<double> expect_m;
  std::vector<double> var_m;
  std::vector<double> dm_dtheta;
  std::vector<double> var_theta;
  std::vector<bool> masked;
  int site_count = 0;

  std::string to_csv() const;
};

/// Multiplies each amplitude by exp(i theta * n1) where n1 counts the sites
/// in level 1; diagonal and norm-preserving, levels other than 1 untouched.
StateVector apply_phase_shift(const StateVector& psi, double theta);

/// Parity-type observable M = tensor product of per-site (|0><1| + |1><0|),
/// acting as zero on level 2. Returns (<M>, <M^2> - <M>^2). For two-level
/// sites M^2 is the identity; for three-level sites <M^2> is the weight of
/// the level-2-free subspace.
struct Measurement {
  double expect = 0.0;
  double variance = 0.0;
};
Measurement measure_m(const StateVector& psi);

/// d<M>/dtheta at the given phase-shifted state, computed analytically as
/// i <psi tilde| [M, P1] |psi tilde> with P1 the level-1 counting operator.
double expect_m_derivative(const StateVector& psi_shifted);

/// theta grid of `points` values spanning (0, 2 pi / N), offset from the
/// endpoints so the nodes of sin(N theta) are avoided for every N.
std::vector<double> default_theta_grid(int site_count, int points);

/// Full curve for the given prepared state: for each theta apply the phase
/// shift, measure, differentiate analytically, and propagate the variance
/// through var_theta = var_M / (d<M>/dtheta)^2.
SensingCurve sensing_curve(const StateVector& psi_final, const std::vector<double>& theta_grid,
                           double derivative_floor = 1e-6);

/// Total level-2 population summed over sites; requires three-level sites.
double leakage(const StateVector& psi);

}  // namespace starpulse
