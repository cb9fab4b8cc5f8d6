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

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "starpulse/device.hpp"
#include "starpulse/propagate.hpp"

namespace starpulse {

/// Hypercube of coupling values: every coupling lies in
/// [mean - half_width, mean + half_width], the same interval for all.
struct UncertaintyBox {
  double mean = 0.0;        // rad/s
  double half_width = 0.0;  // rad/s
  int n_v = 1;              // number of uncertain couplings

  double low() const { return mean - half_width; }
  double high() const { return mean + half_width; }
  void validate() const;
};

/// One symmetry class of hypercube corners: all corners with the same
/// number of couplings at the high end give the same fidelity on a star.
struct ExtremePointGroup {
  std::vector<double> representative;
  std::uint64_t multiplicity = 1;
  int high_count = 0;
};

/// All 2^{n_v} corner assignments; guarded at n_v <= 20, beyond which the
/// caller should use the symmetry grouping instead.
std::vector<std::vector<double>> enumerate_extreme_points(const UncertaintyBox& box);

/// The n_v + 1 corner classes of a star with identical sites, keyed by
/// high_count, with binomial multiplicities. Representative: the first
/// high_count couplings at the high end, the rest at the low end.
std::vector<ExtremePointGroup> symmetry_groups_star(const UncertaintyBox& box);

/// One group per corner (no symmetry assumed): generic-topology fallback.
std::vector<ExtremePointGroup> groups_full_enumeration(const UncertaintyBox& box);

struct GroupFidelity {
  int group_id = 0;
  int high_count = 0;
  std::uint64_t multiplicity = 1;
  double fidelity = 0.0;
};

struct AuditReport {
  int samples = 0;
  std::uint64_t seed = 0;
  double tolerance = 0.0;
  double worst_case = 0.0;   // extreme-point minimum the samples are checked against
  double min_sampled = 1.0;
  bool passed = false;
  std::optional<std::vector<double>> violation_couplings;
  std::optional<double> violation_fidelity;
};

struct FidelityReport {
  std::vector<GroupFidelity> per_group;
  double worst_case = 0.0;
  double average = 0.0;
  std::optional<AuditReport> audit;

  std::string to_json() const;
};

using ModelBuilder = std::function<DeviceModel(const std::vector<double>& couplings)>;

/// Evaluates the fidelity once per group; worst_case is the minimum and
/// average the multiplicity-weighted mean, which equals the plain mean
/// over all corners.
FidelityReport worst_case_fidelity(const PulseSet& pulse,
                                   const std::vector<ExtremePointGroup>& groups,
                                   const ModelBuilder& builder, const StateVector& target,
                                   const KrylovConfig& cfg = {});

/// Star-symmetry convenience overload.
FidelityReport worst_case_fidelity(const PulseSet& pulse, const UncertaintyBox& box,
                                   const ModelBuilder& builder, const StateVector& target,
                                   const KrylovConfig& cfg = {});

/// Draws `samples` uniform points in the box and checks that no sampled
/// fidelity undercuts `worst_case` by more than `tolerance`; the
/// extreme-point minimum is trustworthy only if this holds. Violations are
/// recorded in the report, never thrown.
AuditReport concavity_audit_fn(const std::function<double(const std::vector<double>&)>& fidelity_fn,
                               const UncertaintyBox& box, double worst_case, int samples,
                               std::uint64_t seed, double tolerance = 1e-6);

AuditReport concavity_audit(const PulseSet& pulse, const UncertaintyBox& box,
                            const ModelBuilder& builder, const StateVector& target,
                            int samples, std::uint64_t seed, double tolerance = 1e-6,
                            const KrylovConfig& cfg = {});

}  // namespace starpulse
