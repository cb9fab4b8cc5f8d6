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
#include <vector>

#include "starpulse/state.hpp"

namespace starpulse {

struct Triplet {
  std::int64_t row = 0;
  std::int64_t col = 0;
  std::complex<double> value;
};

/// Immutable sparse matrix in compressed-sparse-row form. Duplicate
/// triplets are summed and exact zeros dropped at construction, so the
/// stored pattern never carries explicit zeros.
class SparseOperator {
 public:
  SparseOperator() = default;

  /// Builds from triplets. If `hermitian` is requested the entries are
  /// verified to satisfy A = A' exactly; a violation throws.
  static SparseOperator from_triplets(std::int64_t dimension,
                                      std::vector<Triplet> triplets,
                                      bool hermitian);

  static SparseOperator identity(std::int64_t dimension);
  static SparseOperator zero(std::int64_t dimension);

  std::int64_t dimension() const { return dim_; }
  bool hermitian() const { return hermitian_; }
  std::int64_t nonzero_count() const { return static_cast<std::int64_t>(values_.size()); }

  const std::vector<std::int64_t>& row_offsets() const { return row_offsets_; }
  const std::vector<std::int64_t>& cols() const { return cols_; }
  const std::vector<std::complex<double>>& values() const { return values_; }

  /// y = A x.
  void apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const;
  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;

  /// Dense copy, for oracles and small eigenproblems only.
  Eigen::MatrixXcd to_dense() const;

  /// Crude upper bound on the spectral norm (max absolute row sum).
  double norm_bound() const;

 private:
  friend class HamiltonianAssembler;

  std::int64_t dim_ = 0;
  bool hermitian_ = false;
  std::vector<std::int64_t> row_offsets_;  // size dim_+1
  std::vector<std::int64_t> cols_;
  std::vector<std::complex<double>> values_;
};

/// Sparse matrix-vector product with shape checking; `psi` is untouched.
StateVector spmv(const SparseOperator& a, const StateVector& psi);

/// Evaluates H = H0 + ox*Sx + oy*Sy on a merged sparsity pattern that is
/// computed once; updating the drive only rewrites the value array. One
/// instance per worker: with_drive() mutates internal storage.
class HamiltonianAssembler {
 public:
  HamiltonianAssembler(const SparseOperator& h0, const SparseOperator& sx,
                       const SparseOperator& sy);

  /// Reference stays valid until the next with_drive() call.
  const SparseOperator& with_drive(double ox, double oy);

 private:
  SparseOperator work_;
  // Scatter maps from each source operator's value array into work_.values_.
  std::vector<std::int64_t> h0_slots_, sx_slots_, sy_slots_;
  std::vector<std::complex<double>> h0_vals_, sx_vals_, sy_vals_;
};

}  // namespace starpulse
