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

#include "starpulse/io.hpp"
#include "starpulse/sparse.hpp"
#include "starpulse/state.hpp"

namespace starpulse {

struct KrylovConfig {
  int max_subspace_dim = 30;
  double tolerance = 1e-12;
  int max_substeps = 64;
};

/// Raised when the adaptive propagator still misses the tolerance at the
/// substep limit; carries the last residual estimate seen.
class KrylovError : public Error {
 public:
  KrylovError(const std::string& what, double residual)
      : Error(what), last_residual(residual) {}
  double last_residual = 0.0;
};

/// Lanczos factorization H V = V T + next_offdiag * v_{k+1} e_k', with the
/// eigendecomposition of the small tridiagonal T attached. Because H is
/// hermitian the recurrence has three terms; full reorthogonalization keeps
/// the basis orthonormal to machine precision.
struct LanczosDecomposition {
  Eigen::MatrixXcd basis;   // D x k, orthonormal columns
  Eigen::VectorXd evals;    // eigenvalues of T, size k
  Eigen::MatrixXd evecs;    // eigenvectors of T (real orthogonal), k x k
  double next_offdiag = 0;  // 0 on happy breakdown
  double input_norm = 0;    // ||v||
  int k = 0;

  /// exp(-i H t) v approximated inside the subspace, as a full-space vector.
  Eigen::VectorXcd apply_exp(double t) const;

  /// Coefficients of apply_exp in the Lanczos basis (length k).
  Eigen::VectorXcd small_exp(double t) const;

  /// Residual-based bound estimate for ||apply_exp(t) - exp(-iHt) v||.
  double exp_error_estimate(double t) const;
};

LanczosDecomposition lanczos_decompose(const SparseOperator& h, const Eigen::VectorXcd& v,
                                       int max_dim);

/// phi ~= exp(-i H dt) psi via the Lanczos subspace with adaptive
/// sub-stepping: the substep count doubles until the accumulated residual
/// estimate is below cfg.tolerance, or KrylovError is thrown.
StateVector krylov_expv(const SparseOperator& h, const StateVector& psi, double dt,
                        const KrylovConfig& cfg = {});

}  // namespace starpulse
