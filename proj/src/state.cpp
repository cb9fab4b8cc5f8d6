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

#include "starpulse/state.hpp"

#include <cmath>

#include "starpulse/io.hpp"

namespace starpulse {

int StateVector::digit(std::int64_t index, int site, int levels) {
  for (int k = 0; k < site; ++k) index /= levels;
  return static_cast<int>(index % levels);
}

std::int64_t pow_levels(int levels, int sites) {
  if (levels < 2 || sites < 1) throw Error("pow_levels: need levels >= 2, sites >= 1");
  std::int64_t d = 1;
  for (int k = 0; k < sites; ++k) {
    if (d > (1LL << 62) / levels) throw Error("pow_levels: dimension overflow");
    d *= levels;
  }
  return d;
}

StateVector basis_state(int levels, int sites, std::int64_t index) {
  const std::int64_t d = pow_levels(levels, sites);
  if (index < 0 || index >= d) throw Error("basis_state: index out of range");
  StateVector psi;
  psi.site_levels = levels;
  psi.site_count = sites;
  psi.amplitudes = Eigen::VectorXcd::Zero(d);
  psi.amplitudes[index] = 1.0;
  return psi;
}

StateVector ground_state(int levels, int sites) {
  return basis_state(levels, sites, 0);
}

StateVector ghz_state(int levels, int sites) {
  const std::int64_t d = pow_levels(levels, sites);
  // |1...1> has every base-L digit equal to 1.
  std::int64_t ones = 0;
  std::int64_t p = 1;
  for (int k = 0; k < sites; ++k) {
    ones += p;
    p *= levels;
  }
  StateVector psi;
  psi.site_levels = levels;
  psi.site_count = sites;
  psi.amplitudes = Eigen::VectorXcd::Zero(d);
  const double r = 1.0 / std::sqrt(2.0);
  psi.amplitudes[0] = r;
  psi.amplitudes[ones] = r;
  return psi;
}

StateVector product_plus_state(int levels, int sites, double theta) {
  const std::int64_t d = pow_levels(levels, sites);
  StateVector psi;
  psi.site_levels = levels;
  psi.site_count = sites;
  psi.amplitudes = Eigen::VectorXcd::Zero(d);
  const std::complex<double> phase(std::cos(theta), std::sin(theta));
  const double r = std::pow(1.0 / std::sqrt(2.0), sites);
  for (std::int64_t x = 0; x < d; ++x) {
    int ones = 0;
    bool in_qubit_subspace = true;
    std::int64_t y = x;
    for (int k = 0; k < sites; ++k) {
      const int dk = static_cast<int>(y % levels);
      y /= levels;
      if (dk == 1) {
        ++ones;
      } else if (dk != 0) {
        in_qubit_subspace = false;
        break;
      }
    }
    if (!in_qubit_subspace) continue;
    psi.amplitudes[x] = r * std::pow(phase, ones);
  }
  return psi;
}

double phase_aligned_distance(const StateVector& a, const StateVector& b) {
  if (a.dimension() != b.dimension()) throw Error("phase_aligned_distance: dimension mismatch");
  const std::complex<double> ov = a.amplitudes.dot(b.amplitudes);
  // ||a - e^{i phi} b||^2 = ||a||^2 + ||b||^2 - 2|<a|b>| at the optimal phi.
  const double na2 = a.amplitudes.squaredNorm();
  const double nb2 = b.amplitudes.squaredNorm();
  const double val = na2 + nb2 - 2.0 * std::abs(ov);
  return std::sqrt(std::max(val, 0.0));
}

}  // namespace starpulse
