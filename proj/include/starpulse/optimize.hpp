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

#include <cstdint>
#include <string>
#include <vector>

#include "starpulse/lp.hpp"
#include "starpulse/robustness.hpp"

namespace starpulse {

struct OptimizerConfig {
  double center_target = 1.0 - 1e-7;  // fidelity the center stage aims for
  int max_iters = 2000;               // quasi-Newton iteration cap
  int scp_max_iters = 300;
  double grad_tolerance = 1e-10;  // projected-gradient norm, scaled variables
  double trust_init = 0.02;       // initial per-variable trust radius / amplitude_bound
  std::vector<double> trust_init_vector;  // optional per-variable override (scaled units)
  double trust_grow = 1.15;
  double trust_shrink = 2.0;
  double trust_floor = 1e-8;  // terminate when trust scale falls below this fraction
  int seed_count = 1;
  std::uint64_t seed = 1;
  int history = 10;  // quasi-Newton memory
  GradientMethod gradient_method = GradientMethod::within_bin_integral;
  KrylovConfig krylov;

  void validate() const;
};

struct TraceRow {
  int iter = 0;
  double worst_case = 0.0;
  double average = 0.0;
  double step_norm = 0.0;
  double trust_scale = 0.0;
  bool accepted = false;
};

struct OptimizationTrace {
  std::vector<TraceRow> rows;
  std::string termination;
  bool converged = false;

  std::string to_csv() const;
};

struct CenterResult {
  PulseSet pulse;
  double fidelity = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string termination;
};

struct RobustResult {
  PulseSet pulse;
  OptimizationTrace trace;
  FidelityReport report;  // group fidelities at the returned pulse
};

/// Maximizes the fidelity at the hypercube center with a projected
/// quasi-Newton ascent (L-BFGS direction, Armijo backtracking, amplitudes
/// clamped to the bound). Returns immediately if the input already meets
/// the target. Non-convergence is a flagged result, not an error.
CenterResult optimize_center(const PulseSet& initial, const DeviceModel& model,
                             const StateVector& target, const OptimizerConfig& cfg);

/// One linearized max-min step: maximize t subject to g_i . delta >= t over
/// the per-variable trust box intersected with the amplitude bounds around
/// the current pulse. `gradients` holds one row per extreme-point group.
struct ScpStep {
  Eigen::VectorXd delta;
  double predicted_increment = 0.0;
};
ScpStep scp_minimax_step(const PulseSet& pulse, const Eigen::MatrixXd& gradients,
                         const Eigen::VectorXd& trust);

/// Max-min robust optimization: per iteration, linearize every group
/// fidelity, take the minimax LP step, and accept only if the realized
/// minimum group fidelity improves; the trust scale grows by trust_grow on
/// acceptance and shrinks by trust_shrink otherwise. Stops at scp_max_iters
/// or when the trust scale drops below trust_floor.
RobustResult optimize_scp(const PulseSet& initial, const UncertaintyBox& box,
                          const ModelBuilder& builder, const StateVector& target,
                          const OptimizerConfig& cfg);

/// Maximizes the multiplicity-weighted average group fidelity with the
/// projected quasi-Newton ascent; the worst case is reported alongside.
RobustResult optimize_average(const PulseSet& initial, const UncertaintyBox& box,
                              const ModelBuilder& builder, const StateVector& target,
                              const OptimizerConfig& cfg);

/// Uniform random pulse in [-bound/10, bound/10] per amplitude.
PulseSet random_pulse(const PulseGrid& grid, int channels, double amplitude_bound,
                      std::uint64_t seed);

enum class RobustMethod { scp, average };

/// seed_count independent starts (random init, center stage, robust stage);
/// returns the start with the highest worst-case fidelity.
struct MultiStartResult {
  RobustResult best;
  CenterResult best_center;
  int best_start = 0;
  std::vector<double> per_start_worst_case;
};
MultiStartResult optimize_robust_multistart(RobustMethod method, const PulseGrid& grid,
                                            double amplitude_bound, const UncertaintyBox& box,
                                            const ModelBuilder& builder, const StateVector& target,
                                            const OptimizerConfig& cfg);

}  // namespace starpulse
