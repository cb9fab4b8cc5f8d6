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
#include <complex>
#include <cstdint>

namespace starpulse {

/// Pure state on a tensor-product space of `site_count` sites with
/// `site_levels` levels each. Site k occupies the k-th digit of the basis
/// index in base L, site 0 being the least significant digit.
struct StateVector {
  Eigen::VectorXcd amplitudes;
  int site_levels = 2;
  int site_count = 1;

  Eigen::Index dimension() const { return amplitudes.size(); }
  double norm() const { return amplitudes.norm(); }

  /// Level of site `site` in basis state `index`.
  static int digit(std::int64_t index, int site, int levels);
};

/// L^N as a checked 64-bit integer.
std::int64_t pow_levels(int levels, int sites);

/// Basis state |index>.
StateVector basis_state(int levels, int sites, std::int64_t index);

/// |0...0>.
StateVector ground_state(int levels, int sites);

/// (|0...0> + |1...1>)/sqrt(2).
StateVector ghz_state(int levels, int sites);

/// ((|0> + e^{i theta}|1>)/sqrt(2))^{tensor N}, on L-level sites.
StateVector product_plus_state(int levels, int sites, double theta);

/// min over a global phase of ||a - e^{i phi} b||; states themselves are
/// only defined up to that phase.
double phase_aligned_distance(const StateVector& a, const StateVector& b);

}  // namespace starpulse
