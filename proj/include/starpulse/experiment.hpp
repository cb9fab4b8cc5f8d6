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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "starpulse/optimize.hpp"
#include "starpulse/sensing.hpp"

namespace starpulse {

/// One JSON document drives a whole experiment. Frequencies are entered as
/// conventional /2pi values in Hz and converted to angular rad/s
/// internally; every emitted file carries SI units.
struct ExperimentConfig {
  // device block
  int sites = 4;
  int levels = 2;
  double mean_coupling_hz = 30e6;   // J bar / 2pi
  double total_time_s = 100e-9;
  int bins = 100;
  double max_amplitude_hz = 150e6;  // Omega_max / 2pi
  TransmonParams transmon;

  // uncertainty block: Delta J / J bar fractions, plus the sampling audit
  std::vector<double> uncertainty_levels = {0.01, 0.02, 0.03, 0.04, 0.05};
  int audit_samples = 10000;
  double audit_tolerance = 1e-6;

  // optimizer block
  RobustMethod method = RobustMethod::scp;
  OptimizerConfig optimizer;

  // sensing block
  int theta_points = 201;
  double derivative_floor = 1e-6;
  std::string state_selection = "worst";  // "worst", "center", or "group:<k>"
  std::optional<double> sensing_level;    // defaults to the last uncertainty level

  // run block
  std::string output_dir = "out";
  int workers = 0;  // 0: hardware concurrency

  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_json_file(const std::filesystem::path& path);
  std::string to_json() const;
  void validate() const;

  double mean_coupling_rad() const;
  double max_amplitude_rad() const;
  PulseGrid grid() const;
  StateVector target_state() const;
  ModelBuilder model_builder() const;
  UncertaintyBox box(double level) const;
};

/// "scp" or "average"; throws on anything else.
RobustMethod parse_robust_method(const std::string& name);
std::string robust_method_name(RobustMethod m);

/// Per-job record of a sweep run.
struct JobRecord {
  std::string name;
  std::string status;  // "ok", "failed", "skipped_existing"
  std::string error;
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> files;  // path, content hash
};

struct SweepOutcome {
  bool all_ok = false;
  std::filesystem::path manifest_path;
  std::vector<JobRecord> jobs;
};

/// Robust and non-robust arms over every uncertainty level. Deterministic
/// for a fixed (config, seeds); existing per-job outputs are skipped unless
/// `force`. A failing level is recorded in the manifest and does not stop
/// the others.
SweepOutcome run_sweep(const ExperimentConfig& config, bool force = false);

/// Emits the four sensing curves (robust arm, non-robust arm, ideal GHZ,
/// ideal product state) from the sweep artifacts in config.output_dir.
/// Throws if an expected pulse file is missing, naming the path.
std::vector<std::filesystem::path> run_sensing(const ExperimentConfig& config);

/// Per-bin amplitude columns, plus the level-2 population at the end of
/// each bin for three-level devices.
void emit_pulse_figure_data(const ExperimentConfig& config,
                            const std::filesystem::path& pulse_path,
                            const std::filesystem::path& out_csv);

/// Worst-case report plus sampling audit for a stored pulse at one
/// uncertainty level; returns the report (with audit attached) and writes
/// it to out_path when given.
FidelityReport run_audit(const ExperimentConfig& config, const std::filesystem::path& pulse_path,
                         double level, int samples, std::uint64_t seed,
                         const std::optional<std::filesystem::path>& out_path);

}  // namespace starpulse
