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

#include "starpulse/sensing.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include "starpulse/io.hpp"

namespace starpulse {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct DigitCounts {
  int ones = 0;
  int twos = 0;
};

DigitCounts count_digits(std::int64_t index, int levels, int sites) {
  DigitCounts c;
  for (int k = 0; k < sites; ++k) {
    const int d = static_cast<int>(index % levels);
    index /= levels;
    if (d == 1) ++c.ones;
    else if (d == 2) ++c.twos;
  }
  return c;
}

// Basis index with every 0 <-> 1 digit swapped; -1 if any site sits on
// level 2 (where the observable acts as zero).
std::int64_t flipped_index(std::int64_t index, int levels, int sites) {
  std::int64_t out = 0;
  std::int64_t stride = 1;
  for (int k = 0; k < sites; ++k) {
    const int d = static_cast<int>(index % levels);
    index /= levels;
    if (d == 0) out += stride;
    else if (d == 1) out += 0;
    else return -1;
    stride *= levels;
  }
  return out;
}

}  // namespace

StateVector apply_phase_shift(const StateVector& psi, double theta) {
  StateVector out = psi;
  const std::int64_t d = psi.dimension();
  for (std::int64_t x = 0; x < d; ++x) {
    const DigitCounts c = count_digits(x, psi.site_levels, psi.site_count);
    const double phase = theta * c.ones;
    out.amplitudes[x] *= std::complex<double>(std::cos(phase), std::sin(phase));
  }
  return out;
}

Measurement measure_m(const StateVector& psi) {
  const std::int64_t d = psi.dimension();
  std::complex<double> expect(0.0, 0.0);
  double expect_m2 = 0.0;
  for (std::int64_t x = 0; x < d; ++x) {
    const std::int64_t y = flipped_index(x, psi.site_levels, psi.site_count);
    if (y < 0) continue;
    // <psi|M|psi> term: conj(psi_y) * psi_x with M|x> = |y>.
    expect += std::conj(psi.amplitudes[y]) * psi.amplitudes[x];
    // M^2 projects onto the level-2-free subspace.
    expect_m2 += std::norm(psi.amplitudes[x]);
  }
  Measurement m;
  m.expect = expect.real();
  m.variance = expect_m2 - m.expect * m.expect;
  return m;
}

double expect_m_derivative(const StateVector& psi_shifted) {
  // i<[M, P1]> = -2 Im <psi|M P1|psi>; P1 is diagonal (level-1 count).
  const std::int64_t d = psi_shifted.dimension();
  std::complex<double> mp1(0.0, 0.0);
  for (std::int64_t x = 0; x < d; ++x) {
    const std::int64_t y = flipped_index(x, psi_shifted.site_levels, psi_shifted.site_count);
    if (y < 0) continue;
    const DigitCounts c = count_digits(x, psi_shifted.site_levels, psi_shifted.site_count);
    // (M P1 psi)_y = ones(x) * psi_x, so <psi|M P1|psi> sums conj(psi_y) ones(x) psi_x.
    mp1 += std::conj(psi_shifted.amplitudes[y]) *
           (static_cast<double>(c.ones) * psi_shifted.amplitudes[x]);
  }
  return -2.0 * mp1.imag();
}

std::vector<double> default_theta_grid(int site_count, int points) {
  if (site_count < 1 || points < 2) throw Error("default_theta_grid: bad arguments");
  // Asymmetric inset keeps sin(N theta) nodes (0, pi/N, 2 pi/N) off the grid.
  const double lo = 0.003, hi = 0.9983;
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i) {
    const double f = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
    grid[i] = (kTwoPi / site_count) * f;
  }
  return grid;
}

SensingCurve sensing_curve(const StateVector& psi_final, const std::vector<double>& theta_grid,
                           double derivative_floor) {
  SensingCurve curve;
  curve.site_count = psi_final.site_count;
  const std::size_t n = theta_grid.size();
  curve.theta = theta_grid;
  curve.expect_m.resize(n);
  curve.var_m.resize(n);
  curve.dm_dtheta.resize(n);
  curve.var_theta.resize(n);
  curve.masked.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const StateVector shifted = apply_phase_shift(psi_final, theta_grid[i]);
    const Measurement m = measure_m(shifted);
    const double dm = expect_m_derivative(shifted);
    curve.expect_m[i] = m.expect;
    curve.var_m[i] = m.variance;
    curve.dm_dtheta[i] = dm;
    if (std::abs(dm) < derivative_floor) {
      curve.masked[i] = true;
      curve.var_theta[i] = std::numeric_limits<double>::quiet_NaN();
    } else {
      curve.masked[i] = false;
      curve.var_theta[i] = m.variance / (dm * dm);
    }
  }
  return curve;
}

std::string SensingCurve::to_csv() const {
  std::ostringstream out;
  out << "# theta: rad; expect_M, var_M: dimensionless; dM_dtheta: 1/rad; var_theta: rad^2\n";
  out << "theta,expect_M,var_M,dM_dtheta,var_theta,masked\n";
  for (std::size_t i = 0; i < theta.size(); ++i) {
    out << format_double(theta[i]) << ',' << format_double(expect_m[i]) << ','
        << format_double(var_m[i]) << ',' << format_double(dm_dtheta[i]) << ','
        << format_double(var_theta[i]) << ',' << (masked[i] ? 1 : 0) << '\n';
  }
  return out.str();
}

double leakage(const StateVector& psi) {
  if (psi.site_levels != 3) throw Error("leakage: defined for three-level sites only");
  const std::int64_t d = psi.dimension();
  double total = 0.0;
  for (std::int64_t x = 0; x < d; ++x) {
    const double w = std::norm(psi.amplitudes[x]);
    if (w == 0.0) continue;
    const DigitCounts c = count_digits(x, psi.site_levels, psi.site_count);
    total += w * c.twos;
  }
  return total;
}

}  // namespace starpulse
