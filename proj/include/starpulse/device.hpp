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

#include "starpulse/sparse.hpp"

namespace starpulse {

/// Star topology: one driven center site coupled to N-1 boundary sites.
/// Couplings are angular frequencies (rad/s). Site 0 is the center unless
/// driven_site says otherwise; couplings[j] attaches boundary site j+1
/// (in site order, skipping the center).
struct StarGraphSpec {
  int site_count = 2;
  int levels = 2;
  int driven_site = 0;
  std::vector<double> couplings;  // n_J = site_count - 1 entries, rad/s

  void validate() const;
};

/// Cooper-pair-box parameters. Frequencies are the conventional /2pi values
/// in Hz; the builders convert to angular units internally.
struct TransmonParams {
  double qubit_freq_hz = 5e9;       // omega^{(10)} / 2pi
  double anharmonicity_hz = 300e6;  // delta / 2pi, with delta = omega^{(2)} - 2 omega^{(1)}
  double ej_over_ec = 50.0;
  double gate_charge = 0.25;
  int charge_basis_cutoff = 15;  // charge states -cutoff..cutoff

  void validate() const;
};

/// Drift and control operators in the rotating frame of a resonant drive.
struct DeviceModel {
  SparseOperator h0;  // drift: bare terms + couplings
  SparseOperator sx;  // drive quadrature on the driven site
  SparseOperator sy;
  StarGraphSpec spec;

  std::int64_t dimension() const { return h0.dimension(); }
};

/// Eigenstructure of the truncated charge-basis diagonalization.
struct ChargeMatrixElements {
  double n01 = 0;  // <0|n|1>, phase-fixed real positive
  double n12 = 0;  // <1|n|2>
  double omega0 = 0, omega1 = 0, omega2 = 0;  // lowest eigenenergies, units of E_C
};

/// Two-level star with flip-flop couplings: H0 = sum_j J_j (s+_j s-_d + h.c.),
/// Sx = sigma_x on the driven site, Sy = sigma_y.
DeviceModel build_tls_star(const StarGraphSpec& spec);

/// Diagonalizes H = 4 E_C (n - n_g)^2 - (E_J/2) sum(|q><q+1| + h.c.) on the
/// truncated charge basis and returns the lowest energies plus the charge
/// matrix elements n^{(01)}, n^{(12)} with a real-positive phase convention.
/// Throws if the retained eigenstates carry weight above 1e-8 on the
/// boundary charge states (cutoff too small).
ChargeMatrixElements charge_matrix_elements(const TransmonParams& p);

/// Three-level star: per-site bare term delta|2><2|, ladder operators
/// S+ = |1><0| + r |2><1| with r = n^{(12)}/n^{(01)}, couplings
/// J_j (S+_j S-_d + h.c.), controls Sx = S+ + S-, Sy = -i(S+ - S-) on the
/// driven site. delta is taken from params.anharmonicity_hz; the charge
/// diagonalization supplies only the ratio r.
DeviceModel build_transmon_star(const StarGraphSpec& spec, const TransmonParams& p);

/// Same construction with the level ratio and anharmonicity given directly;
/// build_transmon_star delegates here. r12 = 0 decouples level 2 from the
/// drive/coupling ladder entirely.
DeviceModel build_transmon_star_from_ratio(const StarGraphSpec& spec, double delta_rad,
                                           double r12);

}  // namespace starpulse
