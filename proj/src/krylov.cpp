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

#include "starpulse/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace starpulse {

namespace {
constexpr std::complex<double> kI(0.0, 1.0);
}

Eigen::VectorXcd LanczosDecomposition::small_exp(double t) const {
  // u(t) = P exp(-i diag(evals) t) P' e1 * input_norm; P is real.
  Eigen::VectorXcd u(k);
  Eigen::VectorXd w = evecs.row(0).transpose() * input_norm;  // P' e1 * beta0
  for (int a = 0; a < k; ++a) {
    u[a] = std::exp(-kI * evals[a] * t) * w[a];
  }
  return (evecs.cast<std::complex<double>>() * u).eval();
}

Eigen::VectorXcd LanczosDecomposition::apply_exp(double t) const {
  return basis * small_exp(t);
}

double LanczosDecomposition::exp_error_estimate(double t) const {
  if (next_offdiag == 0.0 || k == 0) return 0.0;
  // The subspace solution phi(s) = V u(s) obeys
  //   phi'(s) = -iH phi(s) + i * next_offdiag * u_k(s) * v_{k+1},
  // so the accumulated error is bounded by next_offdiag * int_0^t |u_k(s)| ds.
  // Estimate the integral from three samples of |u_k|.
  double peak = 0.0;
  for (const double frac : {1.0 / 3.0, 2.0 / 3.0, 1.0}) {
    const Eigen::VectorXcd u = small_exp(t * frac);
    peak = std::max(peak, std::abs(u[k - 1]));
  }
  return next_offdiag * std::abs(t) * peak;
}

LanczosDecomposition lanczos_decompose(const SparseOperator& h, const Eigen::VectorXcd& v,
                                       int max_dim) {
  if (h.dimension() != v.size()) throw Error("lanczos_decompose: dimension mismatch");
  if (max_dim < 2) throw Error("lanczos_decompose: max_dim must be >= 2");
  const std::int64_t d = h.dimension();
  const int kmax = static_cast<int>(std::min<std::int64_t>(max_dim, d));

  LanczosDecomposition dec;
  dec.input_norm = v.norm();
  if (dec.input_norm == 0.0) throw Error("lanczos_decompose: zero input vector");

  Eigen::MatrixXcd basis(d, kmax);
  Eigen::VectorXd alpha(kmax), beta(kmax);
  basis.col(0) = v / dec.input_norm;

  double scale = std::max(1.0, dec.input_norm);
  int k = 0;
  double next_offdiag = 0.0;
  Eigen::VectorXcd w(d);
  for (int j = 0; j < kmax; ++j) {
    h.apply(basis.col(j), w);
    alpha[j] = std::real(basis.col(j).dot(w));
    w -= alpha[j] * basis.col(j);
    if (j > 0) w -= beta[j - 1] * basis.col(j - 1);
    // Full reorthogonalization, two passes.
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i <= j; ++i) {
        w -= basis.col(i).dot(w) * basis.col(i);
      }
    }
    scale = std::max(scale, std::abs(alpha[j]));
    const double b = w.norm();
    k = j + 1;
    if (b <= 1e-13 * scale || k == kmax) {
      next_offdiag = (b <= 1e-13 * scale) ? 0.0 : b;
      break;
    }
    beta[j] = b;
    scale = std::max(scale, b);
    basis.col(j + 1) = w / b;
  }

  dec.k = k;
  dec.basis = basis.leftCols(k);
  dec.next_offdiag = next_offdiag;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(alpha.head(k), beta.head(std::max(k - 1, 0)));
  if (solver.info() != Eigen::Success) throw Error("lanczos_decompose: tridiagonal eigensolver failed");
  dec.evals = solver.eigenvalues();
  dec.evecs = solver.eigenvectors();
  return dec;
}

StateVector krylov_expv(const SparseOperator& h, const StateVector& psi, double dt,
                        const KrylovConfig& cfg) {
  if (!h.hermitian()) throw Error("krylov_expv: generator must be hermitian");
  if (h.dimension() != psi.dimension()) throw Error("krylov_expv: dimension mismatch");
  if (!std::isfinite(dt)) throw Error("krylov_expv: dt must be finite");
  if (cfg.max_subspace_dim < 2 || cfg.tolerance <= 0.0) throw Error("krylov_expv: bad config");

  StateVector out = psi;
  if (dt == 0.0) return out;

  const double tol_total = cfg.tolerance * std::max(1.0, psi.norm());
  double last_residual = 0.0;
  for (int nsub = 1; nsub <= cfg.max_substeps; nsub *= 2) {
    const double tau = dt / nsub;
    const double tol_sub = tol_total / nsub;
    Eigen::VectorXcd phi = psi.amplitudes;
    bool ok = true;
    for (int i = 0; i < nsub; ++i) {
      const LanczosDecomposition dec = lanczos_decompose(h, phi, cfg.max_subspace_dim);
      const double err = dec.exp_error_estimate(tau);
      if (err > tol_sub) {
        ok = false;
        last_residual = err;
        break;
      }
      phi = dec.apply_exp(tau);
    }
    if (ok) {
      out.amplitudes = std::move(phi);
      return out;
    }
  }
  throw KrylovError("krylov_expv: residual estimate " + format_double(last_residual) +
                        " above tolerance after max_substeps",
                    last_residual);
}

}  // namespace starpulse
