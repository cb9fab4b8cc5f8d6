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

#include "starpulse/sparse.hpp"

#include <algorithm>
#include <cmath>

#include "starpulse/io.hpp"

namespace starpulse {

SparseOperator SparseOperator::from_triplets(std::int64_t dimension,
                                             std::vector<Triplet> triplets,
                                             bool hermitian) {
  if (dimension <= 0) throw Error("SparseOperator: dimension must be positive");
  for (const Triplet& t : triplets) {
    if (t.row < 0 || t.row >= dimension || t.col < 0 || t.col >= dimension) {
      throw Error("SparseOperator: triplet index out of range");
    }
  }
  // Stable: duplicates sum in insertion order, so a caller that pushes
  // (r, c, v) / (c, r, conj v) pairs gets exactly conjugate cell sums.
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseOperator op;
  op.dim_ = dimension;
  op.hermitian_ = hermitian;
  op.row_offsets_.assign(static_cast<std::size_t>(dimension) + 1, 0);

  // Merge duplicates, drop exact zeros.
  std::size_t i = 0;
  while (i < triplets.size()) {
    std::complex<double> v = triplets[i].value;
    std::size_t j = i + 1;
    while (j < triplets.size() && triplets[j].row == triplets[i].row &&
           triplets[j].col == triplets[i].col) {
      v += triplets[j].value;
      ++j;
    }
    if (v != std::complex<double>(0.0, 0.0)) {
      op.cols_.push_back(triplets[i].col);
      op.values_.push_back(v);
      ++op.row_offsets_[static_cast<std::size_t>(triplets[i].row) + 1];
    }
    i = j;
  }
  for (std::size_t r = 0; r < static_cast<std::size_t>(dimension); ++r) {
    op.row_offsets_[r + 1] += op.row_offsets_[r];
  }

  if (hermitian) {
    // Every stored (r, c, v) must have a stored mirror (c, r, conj v).
    for (std::int64_t r = 0; r < dimension; ++r) {
      for (std::int64_t k = op.row_offsets_[r]; k < op.row_offsets_[r + 1]; ++k) {
        const std::int64_t c = op.cols_[static_cast<std::size_t>(k)];
        const std::complex<double> v = op.values_[static_cast<std::size_t>(k)];
        const auto lo = op.cols_.begin() + op.row_offsets_[static_cast<std::size_t>(c)];
        const auto hi = op.cols_.begin() + op.row_offsets_[static_cast<std::size_t>(c) + 1];
        const auto it = std::lower_bound(lo, hi, r);
        if (it == hi || *it != r) throw Error("SparseOperator: hermitian flag violated (pattern)");
        const std::complex<double> mirror =
            op.values_[static_cast<std::size_t>(it - op.cols_.begin())];
        if (mirror != std::conj(v)) throw Error("SparseOperator: hermitian flag violated (value)");
      }
    }
  }
  return op;
}

SparseOperator SparseOperator::identity(std::int64_t dimension) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(dimension));
  for (std::int64_t i = 0; i < dimension; ++i) t.push_back({i, i, 1.0});
  return from_triplets(dimension, std::move(t), true);
}

SparseOperator SparseOperator::zero(std::int64_t dimension) {
  return from_triplets(dimension, {}, true);
}

void SparseOperator::apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const {
  if (x.size() != dim_) throw Error("SparseOperator::apply: dimension mismatch");
  y.resize(dim_);
  for (std::int64_t r = 0; r < dim_; ++r) {
    std::complex<double> acc(0.0, 0.0);
    for (std::int64_t k = row_offsets_[static_cast<std::size_t>(r)];
         k < row_offsets_[static_cast<std::size_t>(r) + 1]; ++k) {
      acc += values_[static_cast<std::size_t>(k)] * x[cols_[static_cast<std::size_t>(k)]];
    }
    y[r] = acc;
  }
}

Eigen::VectorXcd SparseOperator::apply(const Eigen::VectorXcd& x) const {
  Eigen::VectorXcd y;
  apply(x, y);
  return y;
}

Eigen::MatrixXcd SparseOperator::to_dense() const {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim_, dim_);
  for (std::int64_t r = 0; r < dim_; ++r) {
    for (std::int64_t k = row_offsets_[static_cast<std::size_t>(r)];
         k < row_offsets_[static_cast<std::size_t>(r) + 1]; ++k) {
      m(r, cols_[static_cast<std::size_t>(k)]) = values_[static_cast<std::size_t>(k)];
    }
  }
  return m;
}

double SparseOperator::norm_bound() const {
  double best = 0.0;
  for (std::int64_t r = 0; r < dim_; ++r) {
    double s = 0.0;
    for (std::int64_t k = row_offsets_[static_cast<std::size_t>(r)];
         k < row_offsets_[static_cast<std::size_t>(r) + 1]; ++k) {
      s += std::abs(values_[static_cast<std::size_t>(k)]);
    }
    best = std::max(best, s);
  }
  return best;
}

StateVector spmv(const SparseOperator& a, const StateVector& psi) {
  if (a.dimension() != psi.dimension()) throw Error("spmv: dimension mismatch");
  StateVector out = psi;
  a.apply(psi.amplitudes, out.amplitudes);
  return out;
}

namespace {

// Slot index in the merged CSR pattern for each stored entry of `src`.
std::vector<std::int64_t> scatter_slots(const SparseOperator& merged, const SparseOperator& src) {
  std::vector<std::int64_t> slots;
  slots.reserve(static_cast<std::size_t>(src.nonzero_count()));
  for (std::int64_t r = 0; r < src.dimension(); ++r) {
    for (std::int64_t k = src.row_offsets()[static_cast<std::size_t>(r)];
         k < src.row_offsets()[static_cast<std::size_t>(r) + 1]; ++k) {
      const std::int64_t c = src.cols()[static_cast<std::size_t>(k)];
      const auto lo = merged.cols().begin() + merged.row_offsets()[static_cast<std::size_t>(r)];
      const auto hi = merged.cols().begin() + merged.row_offsets()[static_cast<std::size_t>(r) + 1];
      const auto it = std::lower_bound(lo, hi, c);
      if (it == hi || *it != c) throw Error("HamiltonianAssembler: merged pattern is missing an entry");
      slots.push_back(it - merged.cols().begin());
    }
  }
  return slots;
}

}  // namespace

HamiltonianAssembler::HamiltonianAssembler(const SparseOperator& h0, const SparseOperator& sx,
                                           const SparseOperator& sy) {
  if (h0.dimension() != sx.dimension() || h0.dimension() != sy.dimension()) {
    throw Error("HamiltonianAssembler: operator dimensions differ");
  }
  if (!h0.hermitian() || !sx.hermitian() || !sy.hermitian()) {
    throw Error("HamiltonianAssembler: all source operators must be hermitian");
  }
  // Merged pattern with value 0 marked by a real sentinel 1 so no entry is
  // dropped; values are overwritten on every with_drive() call.
  std::vector<Triplet> pattern;
  for (const SparseOperator* src : {&h0, &sx, &sy}) {
    for (std::int64_t r = 0; r < src->dimension(); ++r) {
      for (std::int64_t k = src->row_offsets()[static_cast<std::size_t>(r)];
           k < src->row_offsets()[static_cast<std::size_t>(r) + 1]; ++k) {
        pattern.push_back({r, src->cols()[static_cast<std::size_t>(k)], 1.0});
      }
    }
  }
  work_ = SparseOperator::from_triplets(h0.dimension(), std::move(pattern), false);
  work_.hermitian_ = true;  // real combination of hermitian sources

  h0_slots_ = scatter_slots(work_, h0);
  sx_slots_ = scatter_slots(work_, sx);
  sy_slots_ = scatter_slots(work_, sy);
  h0_vals_ = h0.values();
  sx_vals_ = sx.values();
  sy_vals_ = sy.values();
}

const SparseOperator& HamiltonianAssembler::with_drive(double ox, double oy) {
  std::fill(work_.values_.begin(), work_.values_.end(), std::complex<double>(0.0, 0.0));
  for (std::size_t k = 0; k < h0_slots_.size(); ++k) {
    work_.values_[static_cast<std::size_t>(h0_slots_[k])] += h0_vals_[k];
  }
  for (std::size_t k = 0; k < sx_slots_.size(); ++k) {
    work_.values_[static_cast<std::size_t>(sx_slots_[k])] += ox * sx_vals_[k];
  }
  for (std::size_t k = 0; k < sy_slots_.size(); ++k) {
    work_.values_[static_cast<std::size_t>(sy_slots_[k])] += oy * sy_vals_[k];
  }
  return work_;
}

}  // namespace starpulse
