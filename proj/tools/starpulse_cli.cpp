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

#include <CLI11.hpp>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "starpulse/experiment.hpp"
#include "starpulse/io.hpp"

namespace {

using starpulse::ExperimentConfig;

struct CommonFlags {
  std::string config_path;
  std::vector<double> levels;
  double delta_j = -1.0;
  std::string method;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  int workers = -1;
};

void add_common(CLI::App* sub, CommonFlags* flags) {
  sub->add_option("-c,--config", flags->config_path, "Experiment config JSON (defaults apply)")
      ->check(CLI::ExistingFile);
  sub->add_option("--levels", flags->levels,
                  "Override uncertainty levels (Delta J / J bar fractions)");
  sub->add_option("--delta-j", flags->delta_j,
                  "Override with a single uncertainty level (fraction of J bar)");
  sub->add_option("--method", flags->method, "Robust objective: scp or average");
  auto* seed_opt = sub->add_option("--seed", flags->seed, "Override base RNG seed");
  sub->parse_complete_callback([flags, seed_opt] { flags->seed_set = seed_opt->count() > 0; });
  sub->add_option("-o,--out", flags->out_dir, "Override output directory");
  sub->add_option("--workers", flags->workers, "Worker threads for the sweep (0: all cores)");
}

ExperimentConfig load_config(const CommonFlags& flags) {
  ExperimentConfig cfg = flags.config_path.empty()
                             ? ExperimentConfig{}
                             : ExperimentConfig::from_json_file(flags.config_path);
  if (!flags.levels.empty()) cfg.uncertainty_levels = flags.levels;
  if (flags.delta_j >= 0.0) cfg.uncertainty_levels = {flags.delta_j};
  if (!flags.method.empty()) cfg.method = starpulse::parse_robust_method(flags.method);
  if (flags.seed_set) cfg.optimizer.seed = flags.seed;
  if (!flags.out_dir.empty()) cfg.output_dir = flags.out_dir;
  if (flags.workers >= 0) cfg.workers = flags.workers;
  cfg.validate();
  return cfg;
}

int cmd_sweep(const CommonFlags& flags, bool force) {
  ExperimentConfig cfg = load_config(flags);
  starpulse::SweepOutcome outcome = starpulse::run_sweep(cfg, force);
  for (const starpulse::JobRecord& job : outcome.jobs) {
    std::printf("job %-24s %-17s %8.2fs%s%s\n", job.name.c_str(), job.status.c_str(),
                job.wall_time_s, job.error.empty() ? "" : "  ", job.error.c_str());
  }
  std::printf("manifest: %s\n", outcome.manifest_path.string().c_str());
  return outcome.all_ok ? 0 : 1;
}

int cmd_sense(const CommonFlags& flags) {
  ExperimentConfig cfg = load_config(flags);
  for (const auto& path : starpulse::run_sensing(cfg)) {
    std::printf("wrote %s\n", path.string().c_str());
  }
  return 0;
}

int cmd_pulsefig(const CommonFlags& flags, const std::string& pulse_path,
                 const std::string& out_csv) {
  ExperimentConfig cfg = load_config(flags);
  std::filesystem::path out =
      out_csv.empty() ? std::filesystem::path(cfg.output_dir) / "pulsefig.csv"
                      : std::filesystem::path(out_csv);
  starpulse::emit_pulse_figure_data(cfg, pulse_path, out);
  std::printf("wrote %s\n", out.string().c_str());
  return 0;
}

int cmd_audit(const CommonFlags& flags, const std::string& pulse_path, int samples,
              const std::string& report_path) {
  ExperimentConfig cfg = load_config(flags);
  const double level = cfg.uncertainty_levels.back();
  const int n = samples >= 0 ? samples : cfg.audit_samples;
  std::optional<std::filesystem::path> out;
  if (!report_path.empty()) out = report_path;
  starpulse::FidelityReport report =
      starpulse::run_audit(cfg, pulse_path, level, n, cfg.optimizer.seed, out);
  const starpulse::AuditReport& audit = *report.audit;
  std::printf("level=%s worst_case=%.12g min_sampled=%.12g samples=%d audit=%s\n",
              starpulse::format_double(level).c_str(), report.worst_case, audit.min_sampled,
              audit.samples, audit.passed ? "pass" : "FAIL");
  if (out) std::printf("wrote %s\n", out->string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust GHZ-preparation pulses on star-coupled qubits"};
  app.require_subcommand(1);

  CommonFlags sweep_flags, sense_flags, fig_flags, audit_flags;
  bool force = false;
  std::string fig_pulse, fig_out, audit_pulse, audit_report;
  int audit_samples = -1;

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Optimize robust and non-robust pulses over the uncertainty levels");
  add_common(sweep, &sweep_flags);
  sweep->add_flag("-f,--force", force, "Recompute jobs whose outputs already exist");

  CLI::App* sense = app.add_subcommand(
      "sense", "Phase-estimation curves for the sweep's pulses plus ideal references");
  add_common(sense, &sense_flags);

  CLI::App* fig = app.add_subcommand("pulsefig", "Per-bin amplitude (and leakage) table");
  add_common(fig, &fig_flags);
  fig->add_option("--pulse", fig_pulse, "Pulse JSON to tabulate")
      ->required()
      ->check(CLI::ExistingFile);
  fig->add_option("--fig-out", fig_out, "Output CSV path (default: <output_dir>/pulsefig.csv)");

  CLI::App* audit = app.add_subcommand("audit", "Worst-case report plus concavity sampling audit");
  add_common(audit, &audit_flags);
  audit->add_option("--pulse", audit_pulse, "Pulse JSON to audit")
      ->required()
      ->check(CLI::ExistingFile);
  audit->add_option("--samples", audit_samples, "Sample count (default: config audit_samples)");
  audit->add_option("--report", audit_report, "Write the JSON report here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sweep->parsed()) return cmd_sweep(sweep_flags, force);
    if (sense->parsed()) return cmd_sense(sense_flags);
    if (fig->parsed()) return cmd_pulsefig(fig_flags, fig_pulse, fig_out);
    if (audit->parsed()) return cmd_audit(audit_flags, audit_pulse, audit_samples, audit_report);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
