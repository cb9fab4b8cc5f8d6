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

#include "starpulse/device.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "starpulse/io.hpp"

namespace starpulse {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Entries of a one-site operator `op` (L x L dense) embedded at `site` on
// the N-site space. Appends to `out`.
void embed_one_site(const Eigen::MatrixXcd& op, int levels, int sites, int site,
                    std::vector<Triplet>& out) {
  const std::int64_t d = pow_levels(levels, sites);
  std::int64_t stride = 1;
  for (int k = 0; k < site; ++k) stride *= levels;
  for (std::int64_t x = 0; x < d; ++x) {
    const int a = static_cast<int>((x / stride) % levels);
    for (int b = 0; b < levels; ++b) {
      const std::complex<double> v = op(b, a);
      if (v == std::complex<double>(0.0, 0.0)) continue;
      const std::int64_t y = x + static_cast<std::int64_t>(b - a) * stride;
      out.push_back({y, x, v});
    }
  }
}

// (opA at siteA) * (opB at siteB), siteA != siteB.
void embed_two_site(const Eigen::MatrixXcd& op_a, int site_a, const Eigen::MatrixXcd& op_b,
                    int site_b, int levels, int sites, std::vector<Triplet>& out) {
  const std::int64_t d = pow_levels(levels, sites);
  std::int64_t stride_a = 1, stride_b = 1;
  for (int k = 0; k < site_a; ++k) stride_a *= levels;
  for (int k = 0; k < site_b; ++k) stride_b *= levels;
  for (std::int64_t x = 0; x < d; ++x) {
    const int a = static_cast<int>((x / stride_a) % levels);
    const int b = static_cast<int>((x / stride_b) % levels);
    for (int ap = 0; ap < levels; ++ap) {
      const std::complex<double> va = op_a(ap, a);
      if (va == std::complex<double>(0.0, 0.0)) continue;
      for (int bp = 0; bp < levels; ++bp) {
        const std::complex<double> vb = op_b(bp, b);
        if (vb == std::complex<double>(0.0, 0.0)) continue;
        const std::int64_t y = x + static_cast<std::int64_t>(ap - a) * stride_a +
                               static_cast<std::int64_t>(bp - b) * stride_b;
        out.push_back({y, x, va * vb});
      }
    }
  }
}

}  // namespace

void StarGraphSpec::validate() const {
  if (site_count < 2) throw Error("StarGraphSpec: site_count must be >= 2");
  if (levels != 2 && levels != 3) throw Error("StarGraphSpec: levels must be 2 or 3");
  if (driven_site < 0 || driven_site >= site_count) throw Error("StarGraphSpec: driven_site out of range");
  if (static_cast<int>(couplings.size()) != site_count - 1) {
    throw Error("StarGraphSpec: expected " + std::to_string(site_count - 1) + " couplings, got " +
                std::to_string(couplings.size()));
  }
}

void TransmonParams::validate() const {
  if (ej_over_ec <= 0.0) throw Error("TransmonParams: ej_over_ec must be positive");
  if (charge_basis_cutoff < 5) throw Error("TransmonParams: charge_basis_cutoff must be >= 5");
}

DeviceModel build_tls_star(const StarGraphSpec& spec) {
  spec.validate();
  if (spec.levels != 2) throw Error("build_tls_star: levels must be 2");
  const int n = spec.site_count;
  const std::int64_t d = pow_levels(2, n);

  Eigen::MatrixXcd sp(2, 2), sm(2, 2), sx(2, 2), sy(2, 2);
  sp.setZero();
  sp(1, 0) = 1.0;  // |1><0|
  sm = sp.adjoint();
  sx = sp + sm;
  sy = std::complex<double>(0.0, -1.0) * (sp - sm);

  std::vector<Triplet> h0t;
  int j = 0;
  for (int site = 0; site < n; ++site) {
    if (site == spec.driven_site) continue;
    const double coupling = spec.couplings[j++];
    embed_two_site(coupling * sp, site, sm, spec.driven_site, 2, n, h0t);
    embed_two_site(coupling * sm, site, sp, spec.driven_site, 2, n, h0t);
  }
  std::vector<Triplet> sxt, syt;
  embed_one_site(sx, 2, n, spec.driven_site, sxt);
  embed_one_site(sy, 2, n, spec.driven_site, syt);

  DeviceModel model;
  model.h0 = SparseOperator::from_triplets(d, std::move(h0t), true);
  model.sx = SparseOperator::from_triplets(d, std::move(sxt), true);
  model.sy = SparseOperator::from_triplets(d, std::move(syt), true);
  model.spec = spec;
  return model;
}

ChargeMatrixElements charge_matrix_elements(const TransmonParams& p) {
  p.validate();
  const int nc = p.charge_basis_cutoff;
  const int dim = 2 * nc + 1;
  // Units of E_C: H = 4 (q - n_g)^2 - (ej_over_ec / 2) * offdiagonal.
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    const double q = static_cast<double>(i - nc);
    h(i, i) = 4.0 * (q - p.gate_charge) * (q - p.gate_charge);
    if (i + 1 < dim) {
      h(i, i + 1) = -0.5 * p.ej_over_ec;
      h(i + 1, i) = -0.5 * p.ej_over_ec;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  if (solver.info() != Eigen::Success) throw Error("charge_matrix_elements: eigensolver failed");
  const Eigen::VectorXd evals = solver.eigenvalues();
  Eigen::MatrixXd evecs = solver.eigenvectors();

  // The three retained states must not feel the truncation boundary.
  for (int k = 0; k < 3; ++k) {
    const double boundary_weight =
        evecs(0, k) * evecs(0, k) + evecs(dim - 1, k) * evecs(dim - 1, k);
    if (boundary_weight > 1e-8) {
      throw Error("charge_matrix_elements: charge_basis_cutoff too small, boundary weight " +
                  format_double(boundary_weight) + " on eigenstate " + std::to_string(k));
    }
  }

  // Phase convention: flip eigenvector signs so <k|n|k+1> > 0 for k = 0, 1.
  ChargeMatrixElements out;
  for (int k = 0; k < 2; ++k) {
    double elem = 0.0;
    for (int i = 0; i < dim; ++i) {
      elem += evecs(i, k) * static_cast<double>(i - nc) * evecs(i, k + 1);
    }
    if (elem < 0.0) {
      evecs.col(k + 1) *= -1.0;
      elem = -elem;
    }
    if (k == 0) out.n01 = elem;
    else out.n12 = elem;
  }
  out.omega0 = evals[0];
  out.omega1 = evals[1];
  out.omega2 = evals[2];
  return out;
}

DeviceModel build_transmon_star_from_ratio(const StarGraphSpec& spec, double delta_rad,
                                           double r12) {
  spec.validate();
  if (spec.levels != 3) throw Error("build_transmon_star: levels must be 3");
  const int n = spec.site_count;
  const std::int64_t d = pow_levels(3, n);

  Eigen::MatrixXcd sp(3, 3), sm(3, 3), sx(3, 3), sy(3, 3), q(3, 3);
  sp.setZero();
  sp(1, 0) = 1.0;  // normalized so <1|S+|0> = 1
  sp(2, 1) = r12;
  sm = sp.adjoint();
  sx = sp + sm;
  sy = std::complex<double>(0.0, -1.0) * (sp - sm);
  q.setZero();
  q(2, 2) = delta_rad;  // rotating frame: omega^{(0)} = 0, resonant drive

  std::vector<Triplet> h0t;
  for (int site = 0; site < n; ++site) {
    embed_one_site(q, 3, n, site, h0t);
  }
  int j = 0;
  for (int site = 0; site < n; ++site) {
    if (site == spec.driven_site) continue;
    const double coupling = spec.couplings[j++];
    embed_two_site(coupling * sp, site, sm, spec.driven_site, 3, n, h0t);
    embed_two_site(coupling * sm, site, sp, spec.driven_site, 3, n, h0t);
  }
  std::vector<Triplet> sxt, syt;
  embed_one_site(sx, 3, n, spec.driven_site, sxt);
  embed_one_site(sy, 3, n, spec.driven_site, syt);

  DeviceModel model;
  model.h0 = SparseOperator::from_triplets(d, std::move(h0t), true);
  model.sx = SparseOperator::from_triplets(d, std::move(sxt), true);
  model.sy = SparseOperator::from_triplets(d, std::move(syt), true);
  model.spec = spec;
  return model;
}

DeviceModel build_transmon_star(const StarGraphSpec& spec, const TransmonParams& p) {
  const ChargeMatrixElements elems = charge_matrix_elements(p);
  const double delta_rad = kTwoPi * p.anharmonicity_hz;
  return build_transmon_star_from_ratio(spec, delta_rad, elems.n12 / elems.n01);
}

}  // namespace starpulse
