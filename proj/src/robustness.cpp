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

#include "starpulse/robustness.hpp"

#include <algorithm>
#include <json.hpp>
#include <limits>

#include "starpulse/io.hpp"
#include "starpulse/rng.hpp"

namespace starpulse {

void UncertaintyBox::validate() const {
  if (half_width < 0.0) throw Error("UncertaintyBox: half_width must be >= 0");
  if (n_v < 1) throw Error("UncertaintyBox: n_v must be >= 1");
  if (!(mean > 0.0)) throw Error("UncertaintyBox: mean coupling must be positive");
}

std::vector<std::vector<double>> enumerate_extreme_points(const UncertaintyBox& box) {
  box.validate();
  if (box.n_v > 20) {
    throw Error("enumerate_extreme_points: 2^" + std::to_string(box.n_v) +
                " corners is too many; use symmetry_groups_star or sample instead");
  }
  const std::uint64_t count = 1ULL << box.n_v;
  std::vector<std::vector<double>> points;
  points.reserve(count);
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    std::vector<double> p(box.n_v);
    for (int j = 0; j < box.n_v; ++j) {
      p[j] = (mask >> j) & 1ULL ? box.high() : box.low();
    }
    points.push_back(std::move(p));
  }
  return points;
}

std::vector<ExtremePointGroup> symmetry_groups_star(const UncertaintyBox& box) {
  box.validate();
  std::vector<ExtremePointGroup> groups;
  groups.reserve(box.n_v + 1);
  for (int high = 0; high <= box.n_v; ++high) {
    ExtremePointGroup g;
    g.high_count = high;
    g.representative.assign(box.n_v, box.low());
    for (int j = 0; j < high; ++j) g.representative[j] = box.high();
    // C(n_v, high) without overflow for n_v <= 62.
    std::uint64_t mult = 1;
    for (int j = 0; j < high; ++j) {
      mult = mult * static_cast<std::uint64_t>(box.n_v - j) / static_cast<std::uint64_t>(j + 1);
    }
    g.multiplicity = mult;
    groups.push_back(std::move(g));
  }
  return groups;
}

std::vector<ExtremePointGroup> groups_full_enumeration(const UncertaintyBox& box) {
  std::vector<ExtremePointGroup> groups;
  for (auto& p : enumerate_extreme_points(box)) {
    ExtremePointGroup g;
    g.high_count = static_cast<int>(std::count(p.begin(), p.end(), box.high()));
    if (box.half_width == 0.0) g.high_count = 0;  // degenerate box: low == high
    g.representative = std::move(p);
    g.multiplicity = 1;
    groups.push_back(std::move(g));
  }
  return groups;
}

FidelityReport worst_case_fidelity(const PulseSet& pulse,
                                   const std::vector<ExtremePointGroup>& groups,
                                   const ModelBuilder& builder, const StateVector& target,
                                   const KrylovConfig& cfg) {
  if (groups.empty()) throw Error("worst_case_fidelity: no groups");
  FidelityReport report;
  double weighted_sum = 0.0;
  std::uint64_t total_mult = 0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const ExtremePointGroup& g = groups[i];
    double f;
    try {
      f = fidelity(pulse, builder(g.representative), target, cfg);
    } catch (const Error& e) {
      throw Error("worst_case_fidelity: evaluation failed at group " + std::to_string(i) +
                  " (high_count " + std::to_string(g.high_count) + "): " + e.what());
    }
    report.per_group.push_back({static_cast<int>(i), g.high_count, g.multiplicity, f});
    weighted_sum += static_cast<double>(g.multiplicity) * f;
    total_mult += g.multiplicity;
  }
  report.worst_case = report.per_group[0].fidelity;
  for (const GroupFidelity& gf : report.per_group) {
    report.worst_case = std::min(report.worst_case, gf.fidelity);
  }
  report.average = weighted_sum / static_cast<double>(total_mult);
  return report;
}

FidelityReport worst_case_fidelity(const PulseSet& pulse, const UncertaintyBox& box,
                                   const ModelBuilder& builder, const StateVector& target,
                                   const KrylovConfig& cfg) {
  return worst_case_fidelity(pulse, symmetry_groups_star(box), builder, target, cfg);
}

AuditReport concavity_audit_fn(const std::function<double(const std::vector<double>&)>& fidelity_fn,
                               const UncertaintyBox& box, double worst_case, int samples,
                               std::uint64_t seed, double tolerance) {
  box.validate();
  if (samples < 1) throw Error("concavity_audit: samples must be >= 1");
  AuditReport report;
  report.samples = samples;
  report.seed = seed;
  report.tolerance = tolerance;
  report.worst_case = worst_case;
  report.min_sampled = std::numeric_limits<double>::infinity();
  report.passed = true;

  SeededRng rng(seed);
  std::vector<double> point(box.n_v);
  for (int s = 0; s < samples; ++s) {
    for (int j = 0; j < box.n_v; ++j) point[j] = rng.uniform(box.low(), box.high());
    const double f = fidelity_fn(point);
    if (f < report.min_sampled) {
      report.min_sampled = f;
      if (f < worst_case - tolerance) {
        report.passed = false;
        report.violation_couplings = point;
        report.violation_fidelity = f;
      }
    }
  }
  return report;
}

AuditReport concavity_audit(const PulseSet& pulse, const UncertaintyBox& box,
                            const ModelBuilder& builder, const StateVector& target,
                            int samples, std::uint64_t seed, double tolerance,
                            const KrylovConfig& cfg) {
  return concavity_audit_fn(
      [&](const std::vector<double>& couplings) {
        return fidelity(pulse, builder(couplings), target, cfg);
      },
      box, worst_case_fidelity(pulse, box, builder, target, cfg).worst_case, samples, seed,
      tolerance);
}

namespace {

nlohmann::json audit_to_json(const AuditReport& a) {
  nlohmann::json j;
  j["samples"] = a.samples;
  j["seed"] = a.seed;
  j["tolerance"] = a.tolerance;
  j["worst_case"] = a.worst_case;
  j["min_sampled"] = a.min_sampled;
  j["passed"] = a.passed;
  if (a.violation_couplings) {
    j["violation"] = {{"couplings", *a.violation_couplings}, {"fidelity", *a.violation_fidelity}};
  } else {
    j["violation"] = nullptr;
  }
  return j;
}

}  // namespace

std::string FidelityReport::to_json() const {
  nlohmann::json j;
  j["units"] = {{"fidelity", "dimensionless"}, {"couplings", "rad_per_s"}};
  j["per_group"] = nlohmann::json::array();
  for (const GroupFidelity& g : per_group) {
    j["per_group"].push_back({{"high_count", g.high_count},
                              {"multiplicity", g.multiplicity},
                              {"fidelity", g.fidelity}});
  }
  j["worst_case"] = worst_case;
  j["average"] = average;
  if (audit) j["audit"] = audit_to_json(*audit);
  return j.dump(2) + "\n";
}

}  // namespace starpulse
