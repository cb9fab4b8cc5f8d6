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

#include "starpulse/device.hpp"
#include "starpulse/krylov.hpp"
#include "starpulse/pulse.hpp"

namespace starpulse {

/// Stored forward states and backward costates for one (pulse, model) pair.
/// forward[n] is the state after the first n bins (forward[0] = |0...0>);
/// backward[n] is the costate just before bin n is applied, i.e. the target
/// pulled back through bins n+1..m-1 (backward[m] = target). The overlap
/// dot(backward[n], forward[n]) is n-independent: it telescopes to
/// <target|U(T)|0...0> for every n.
struct PropagationRecord {
  std::vector<StateVector> forward;   // m+1 states
  std::vector<StateVector> backward;  // m+1 costates
  const DeviceModel* model = nullptr;

  std::complex<double> final_overlap() const;
};

/// Runs the 2m Krylov propagations with H_n = H0 + Ox_n Sx + Oy_n Sy.
PropagationRecord propagate(const PulseSet& pulse, const DeviceModel& model,
                            const StateVector& target, const KrylovConfig& cfg = {});

/// |<target|U(T)|0...0>|^2 (forward pass only).
double fidelity(const PulseSet& pulse, const DeviceModel& model, const StateVector& target,
                const KrylovConfig& cfg = {});

/// How each bin's derivative of the step propagator is evaluated.
///  - within_bin_integral: exact derivative from the integral representation
///    of d exp(-i H dt)/dO, evaluated in paired Krylov subspaces. Cost is
///    about one extra forward+backward pass; accuracy follows the Krylov
///    tolerance, independent of dt.
///  - commutator_second_order: the O(dt^3)-truncated expansion
///    {-i dt S + (dt^2/2)[H_n, S]} applied between the stored states. Error
///    per entry scales as dt^2; cheap, constant number of spmv's per bin.
enum class GradientMethod { within_bin_integral, commutator_second_order };

struct FidelityGradient {
  double fidelity = 0.0;
  Eigen::VectorXd gradient;  // dF/dOmega, same layout as PulseSet amplitudes
};

FidelityGradient fidelity_and_gradient(const PulseSet& pulse, const DeviceModel& model,
                                       const StateVector& target,
                                       GradientMethod method = GradientMethod::within_bin_integral,
                                       const KrylovConfig& cfg = {});

/// Total level-2 population after each bin: entry n is the leakage of
/// forward[n], so the trajectory has m+1 samples from t = 0 to t = T.
std::vector<double> leakage_trajectory(const PulseSet& pulse, const DeviceModel& model,
                                       const KrylovConfig& cfg = {});

}  // namespace starpulse
