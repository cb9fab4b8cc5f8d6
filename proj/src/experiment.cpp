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

#include "starpulse/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <functional>
#include <json.hpp>
#include <limits>
#include <sstream>
#include <thread>
#include <utility>

#include "starpulse/io.hpp"
#include "starpulse/propagate.hpp"

namespace starpulse {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kTwoPi = 6.283185307179586476925286766559;

void check_keys(const json& obj, const char* block, std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw Error("config: unknown key '" + it.key() + "' in " + block + " block");
    }
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

GradientMethod parse_gradient_method(const std::string& name) {
  if (name == "integral") return GradientMethod::within_bin_integral;
  if (name == "commutator2") return GradientMethod::commutator_second_order;
  throw Error("config: optimizer.gradient_method must be 'integral' or 'commutator2', got '" +
              name + "'");
}

std::string gradient_method_name(GradientMethod m) {
  return m == GradientMethod::within_bin_integral ? "integral" : "commutator2";
}

/// Shortest round-trip decimal of the level, used in file names so that a
/// level maps to the same file on every run.
std::string level_tag(double level) { return format_double(level); }

std::string iso_utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

RobustMethod parse_robust_method(const std::string& name) {
  if (name == "scp") return RobustMethod::scp;
  if (name == "average") return RobustMethod::average;
  throw Error("config: optimizer.method must be 'scp' or 'average', got '" + name + "'");
}

std::string robust_method_name(RobustMethod m) {
  return m == RobustMethod::scp ? "scp" : "average";
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error("config: top level must be a JSON object");

  ExperimentConfig c;
  try {
    check_keys(j, "top-level",
               {"device", "uncertainty", "optimizer", "sensing", "output_dir", "workers"});
    if (j.contains("device")) {
      const json& d = j.at("device");
      check_keys(d, "device",
                 {"sites", "levels", "mean_coupling_hz", "total_time_s", "bins",
                  "max_amplitude_hz", "transmon"});
      read_field(d, "sites", c.sites);
      read_field(d, "levels", c.levels);
      read_field(d, "mean_coupling_hz", c.mean_coupling_hz);
      read_field(d, "total_time_s", c.total_time_s);
      read_field(d, "bins", c.bins);
      read_field(d, "max_amplitude_hz", c.max_amplitude_hz);
      if (d.contains("transmon")) {
        const json& t = d.at("transmon");
        check_keys(t, "device.transmon",
                   {"qubit_freq_hz", "anharmonicity_hz", "ej_over_ec", "gate_charge",
                    "charge_basis_cutoff"});
        read_field(t, "qubit_freq_hz", c.transmon.qubit_freq_hz);
        read_field(t, "anharmonicity_hz", c.transmon.anharmonicity_hz);
        read_field(t, "ej_over_ec", c.transmon.ej_over_ec);
        read_field(t, "gate_charge", c.transmon.gate_charge);
        read_field(t, "charge_basis_cutoff", c.transmon.charge_basis_cutoff);
      }
    }
    if (j.contains("uncertainty")) {
      const json& u = j.at("uncertainty");
      check_keys(u, "uncertainty", {"levels", "audit_samples", "audit_tolerance"});
      read_field(u, "levels", c.uncertainty_levels);
      read_field(u, "audit_samples", c.audit_samples);
      read_field(u, "audit_tolerance", c.audit_tolerance);
    }
    if (j.contains("optimizer")) {
      const json& o = j.at("optimizer");
      check_keys(o, "optimizer",
                 {"method", "seeds", "seed", "center_target", "max_iters", "scp_max_iters",
                  "grad_tolerance", "trust_init", "trust_grow", "trust_shrink", "trust_floor",
                  "history", "gradient_method"});
      if (o.contains("method")) c.method = parse_robust_method(o.at("method").get<std::string>());
      read_field(o, "seeds", c.optimizer.seed_count);
      read_field(o, "seed", c.optimizer.seed);
      read_field(o, "center_target", c.optimizer.center_target);
      read_field(o, "max_iters", c.optimizer.max_iters);
      read_field(o, "scp_max_iters", c.optimizer.scp_max_iters);
      read_field(o, "grad_tolerance", c.optimizer.grad_tolerance);
      read_field(o, "trust_init", c.optimizer.trust_init);
      read_field(o, "trust_grow", c.optimizer.trust_grow);
      read_field(o, "trust_shrink", c.optimizer.trust_shrink);
      read_field(o, "trust_floor", c.optimizer.trust_floor);
      read_field(o, "history", c.optimizer.history);
      if (o.contains("gradient_method")) {
        c.optimizer.gradient_method =
            parse_gradient_method(o.at("gradient_method").get<std::string>());
      }
    }
    if (j.contains("sensing")) {
      const json& s = j.at("sensing");
      check_keys(s, "sensing", {"theta_points", "derivative_floor", "state_selection", "level"});
      read_field(s, "theta_points", c.theta_points);
      read_field(s, "derivative_floor", c.derivative_floor);
      read_field(s, "state_selection", c.state_selection);
      if (s.contains("level")) c.sensing_level = s.at("level").get<double>();
    }
    read_field(j, "output_dir", c.output_dir);
    read_field(j, "workers", c.workers);
  } catch (const json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_json_file(const fs::path& path) {
  return from_json_text(read_file(path));
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["device"]["sites"] = sites;
  j["device"]["levels"] = levels;
  j["device"]["mean_coupling_hz"] = mean_coupling_hz;
  j["device"]["total_time_s"] = total_time_s;
  j["device"]["bins"] = bins;
  j["device"]["max_amplitude_hz"] = max_amplitude_hz;
  j["device"]["transmon"]["qubit_freq_hz"] = transmon.qubit_freq_hz;
  j["device"]["transmon"]["anharmonicity_hz"] = transmon.anharmonicity_hz;
  j["device"]["transmon"]["ej_over_ec"] = transmon.ej_over_ec;
  j["device"]["transmon"]["gate_charge"] = transmon.gate_charge;
  j["device"]["transmon"]["charge_basis_cutoff"] = transmon.charge_basis_cutoff;
  j["uncertainty"]["levels"] = uncertainty_levels;
  j["uncertainty"]["audit_samples"] = audit_samples;
  j["uncertainty"]["audit_tolerance"] = audit_tolerance;
  j["optimizer"]["method"] = robust_method_name(method);
  j["optimizer"]["seeds"] = optimizer.seed_count;
  j["optimizer"]["seed"] = optimizer.seed;
  j["optimizer"]["center_target"] = optimizer.center_target;
  j["optimizer"]["max_iters"] = optimizer.max_iters;
  j["optimizer"]["scp_max_iters"] = optimizer.scp_max_iters;
  j["optimizer"]["grad_tolerance"] = optimizer.grad_tolerance;
  j["optimizer"]["trust_init"] = optimizer.trust_init;
  j["optimizer"]["trust_grow"] = optimizer.trust_grow;
  j["optimizer"]["trust_shrink"] = optimizer.trust_shrink;
  j["optimizer"]["trust_floor"] = optimizer.trust_floor;
  j["optimizer"]["history"] = optimizer.history;
  j["optimizer"]["gradient_method"] = gradient_method_name(optimizer.gradient_method);
  j["sensing"]["theta_points"] = theta_points;
  j["sensing"]["derivative_floor"] = derivative_floor;
  j["sensing"]["state_selection"] = state_selection;
  if (sensing_level) j["sensing"]["level"] = *sensing_level;
  j["output_dir"] = output_dir;
  j["workers"] = workers;
  return j.dump(2) + "\n";
}

void ExperimentConfig::validate() const {
  if (sites < 2) throw Error("config: device.sites must be at least 2");
  if (levels != 2 && levels != 3) throw Error("config: device.levels must be 2 or 3");
  if (bins < 1) throw Error("config: device.bins must be positive");
  if (!(total_time_s > 0)) throw Error("config: device.total_time_s must be positive");
  if (!(mean_coupling_hz > 0)) throw Error("config: device.mean_coupling_hz must be positive");
  if (!(max_amplitude_hz > 0)) throw Error("config: device.max_amplitude_hz must be positive");
  if (levels == 3) transmon.validate();
  if (uncertainty_levels.empty()) throw Error("config: uncertainty.levels must be non-empty");
  for (double level : uncertainty_levels) {
    if (!(level >= 0.0) || !(level < 2.0)) {
      throw Error("config: uncertainty levels are Delta J / J bar fractions in [0, 2)");
    }
  }
  if (audit_samples < 0) throw Error("config: uncertainty.audit_samples must be non-negative");
  if (!(audit_tolerance >= 0)) throw Error("config: uncertainty.audit_tolerance must be >= 0");
  if (theta_points < 2) throw Error("config: sensing.theta_points must be at least 2");
  if (!(derivative_floor >= 0)) throw Error("config: sensing.derivative_floor must be >= 0");
  if (state_selection != "worst" && state_selection != "center") {
    const std::string prefix = "group:";
    bool ok = state_selection.rfind(prefix, 0) == 0;
    if (ok) {
      try {
        // Groups are indexed by high_count, 0..n_v with n_v = sites - 1.
        const int k = std::stoi(state_selection.substr(prefix.size()));
        ok = k >= 0 && k <= sites - 1;
      } catch (const std::exception&) {
        ok = false;
      }
    }
    if (!ok) {
      throw Error("config: sensing.state_selection must be 'worst', 'center', or 'group:<k>'");
    }
  }
  if (sensing_level) {
    bool found = false;
    for (double level : uncertainty_levels) {
      if (std::abs(level - *sensing_level) <= 1e-12) found = true;
    }
    if (!found) throw Error("config: sensing.level must be one of uncertainty.levels");
  }
  if (output_dir.empty()) throw Error("config: output_dir must be non-empty");
  if (workers < 0) throw Error("config: workers must be >= 0");
  optimizer.validate();
}

double ExperimentConfig::mean_coupling_rad() const { return kTwoPi * mean_coupling_hz; }
double ExperimentConfig::max_amplitude_rad() const { return kTwoPi * max_amplitude_hz; }
PulseGrid ExperimentConfig::grid() const { return PulseGrid{total_time_s, bins}; }
StateVector ExperimentConfig::target_state() const { return ghz_state(levels, sites); }

ModelBuilder ExperimentConfig::model_builder() const {
  const int n = sites;
  if (levels == 2) {
    return [n](const std::vector<double>& couplings) {
      StarGraphSpec spec;
      spec.site_count = n;
      spec.levels = 2;
      spec.driven_site = 0;
      spec.couplings = couplings;
      return build_tls_star(spec);
    };
  }
  // One charge diagonalization up front; the per-corner builds reuse the
  // ratio so the sweep never repeats the dense eigensolve.
  ChargeMatrixElements cm = charge_matrix_elements(transmon);
  const double r12 = cm.n12 / cm.n01;
  const double delta_rad = kTwoPi * transmon.anharmonicity_hz;
  return [n, r12, delta_rad](const std::vector<double>& couplings) {
    StarGraphSpec spec;
    spec.site_count = n;
    spec.levels = 3;
    spec.driven_site = 0;
    spec.couplings = couplings;
    return build_transmon_star_from_ratio(spec, delta_rad, r12);
  };
}

UncertaintyBox ExperimentConfig::box(double level) const {
  UncertaintyBox b;
  b.mean = mean_coupling_rad();
  b.half_width = 0.5 * level * mean_coupling_rad();
  b.n_v = sites - 1;
  b.validate();
  return b;
}

namespace {

struct TimedRun {
  std::string status;  // "ok" or "failed"
  std::string error;
  double wall_time_s = 0.0;
};

/// Runs `body`, catching any exception into a failed status.
TimedRun timed(const std::function<void()>& body) {
  TimedRun r;
  auto t0 = std::chrono::steady_clock::now();
  try {
    body();
    r.status = "ok";
  } catch (const std::exception& e) {
    r.status = "failed";
    r.error = e.what();
  }
  r.wall_time_s = seconds_since(t0);
  return r;
}

bool all_exist(const std::vector<fs::path>& paths) {
  for (const fs::path& p : paths) {
    if (!fs::exists(p)) return false;
  }
  return true;
}

void hash_outputs(JobRecord& rec, const std::vector<fs::path>& paths) {
  for (const fs::path& p : paths) {
    rec.files.emplace_back(p.filename().string(), fnv1a_hex(read_file(p)));
  }
}

void remove_partial(const std::vector<fs::path>& paths) {
  for (const fs::path& p : paths) {
    std::error_code ec;
    fs::remove(p, ec);
  }
}

/// Representative coupling assignment for the sensing state, per the
/// configured selection rule.
std::vector<double> select_couplings(const ExperimentConfig& cfg, const PulseSet& pulse,
                                     double level, const ModelBuilder& builder,
                                     const StateVector& target) {
  if (cfg.state_selection == "center") {
    return std::vector<double>(static_cast<size_t>(cfg.sites - 1), cfg.mean_coupling_rad());
  }
  std::vector<ExtremePointGroup> groups = symmetry_groups_star(cfg.box(level));
  if (cfg.state_selection.rfind("group:", 0) == 0) {
    int k = std::stoi(cfg.state_selection.substr(6));
    if (k >= static_cast<int>(groups.size())) {
      throw Error("sensing: group index " + std::to_string(k) + " out of range, have " +
                  std::to_string(groups.size()) + " groups");
    }
    return groups[static_cast<size_t>(k)].representative;
  }
  // "worst": the representative of the lowest-fidelity corner group.
  FidelityReport report =
      worst_case_fidelity(pulse, groups, builder, target, cfg.optimizer.krylov);
  int worst_id = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (const GroupFidelity& g : report.per_group) {
    if (g.fidelity < worst) {
      worst = g.fidelity;
      worst_id = g.group_id;
    }
  }
  return groups[static_cast<size_t>(worst_id)].representative;
}

json job_to_json(const JobRecord& rec) {
  json j;
  j["name"] = rec.name;
  j["status"] = rec.status;
  j["seed"] = rec.seed;
  j["wall_time_s"] = rec.wall_time_s;
  json files = json::object();
  for (const auto& [name, hash] : rec.files) files[name] = hash;
  j["files"] = files;
  if (!rec.error.empty()) j["error"] = rec.error;
  return j;
}

}  // namespace

SweepOutcome run_sweep(const ExperimentConfig& cfg, bool force) {
  cfg.validate();
  const fs::path outdir = cfg.output_dir;
  fs::create_directories(outdir);
  write_file(outdir / "config.json", cfg.to_json());

  const ModelBuilder builder = cfg.model_builder();
  const StateVector target = cfg.target_state();
  const PulseGrid grid = cfg.grid();
  const double bound = cfg.max_amplitude_rad();
  const int seeds = cfg.optimizer.seed_count;
  const std::vector<double> center_couplings(static_cast<size_t>(cfg.sites - 1),
                                             cfg.mean_coupling_rad());

  SweepOutcome outcome;

  // Stage 1: center-point optimization, one start per seed. The best start
  // is the non-robust arm's pulse and every start seeds the robust arm.
  std::vector<fs::path> center_files = {outdir / "center.pulse.json",
                                        outdir / "nonrobust.pulse.json",
                                        outdir / "center.report.json"};
  for (int s = 0; s < seeds; ++s) {
    center_files.push_back(outdir / ("center_seed" + std::to_string(s) + ".pulse.json"));
  }

  JobRecord center_rec;
  center_rec.name = "center";
  center_rec.seed = cfg.optimizer.seed;
  std::vector<PulseSet> center_pulses;
  PulseSet nonrobust_pulse = zero_pulse(grid, 1, bound);

  if (!force && all_exist(center_files)) {
    center_rec.status = "skipped_existing";
    for (int s = 0; s < seeds; ++s) {
      center_pulses.push_back(load_pulse(center_files[static_cast<size_t>(3 + s)]));
    }
    nonrobust_pulse = load_pulse(outdir / "nonrobust.pulse.json");
    hash_outputs(center_rec, center_files);
  } else {
    TimedRun run = timed([&] {
      DeviceModel center_model = builder(center_couplings);
      std::vector<CenterResult> results;
      int best = 0;
      for (int s = 0; s < seeds; ++s) {
        PulseSet init =
            random_pulse(grid, 1, bound, cfg.optimizer.seed + static_cast<std::uint64_t>(s));
        results.push_back(optimize_center(init, center_model, target, cfg.optimizer));
        if (results.back().fidelity > results[static_cast<size_t>(best)].fidelity) best = s;
        save_pulse(results.back().pulse, center_files[static_cast<size_t>(3 + s)]);
      }
      const CenterResult& winner = results[static_cast<size_t>(best)];
      save_pulse(winner.pulse, outdir / "center.pulse.json");
      save_pulse(winner.pulse, outdir / "nonrobust.pulse.json");
      json report;
      report["best_seed_index"] = best;
      report["center_fidelity"] = winner.fidelity;
      report["units"] = {{"fidelity", "dimensionless"}};
      json per_seed = json::array();
      for (int s = 0; s < seeds; ++s) {
        const CenterResult& r = results[static_cast<size_t>(s)];
        per_seed.push_back({{"seed", cfg.optimizer.seed + static_cast<std::uint64_t>(s)},
                            {"fidelity", r.fidelity},
                            {"iterations", r.iterations},
                            {"converged", r.converged},
                            {"termination", r.termination}});
      }
      report["per_seed"] = per_seed;
      write_file(outdir / "center.report.json", report.dump(2) + "\n");
      center_pulses.clear();
      for (const CenterResult& r : results) center_pulses.push_back(r.pulse);
      nonrobust_pulse = winner.pulse;
    });
    center_rec.status = run.status;
    center_rec.error = run.error;
    center_rec.wall_time_s = run.wall_time_s;
    if (run.status == "ok") {
      hash_outputs(center_rec, center_files);
    } else {
      remove_partial(center_files);
    }
  }
  outcome.jobs.push_back(center_rec);
  const bool center_ok = center_rec.status != "failed";

  // Stage 2: one robust and one non-robust job per uncertainty level,
  // independent of each other, run on a small worker pool. Outputs depend
  // only on (config, seeds), so the pool size never changes the bytes.
  struct LevelJob {
    std::string name;
    double level = 0.0;
    bool robust = false;
    std::uint64_t audit_seed = 0;
    std::vector<fs::path> outputs;
  };
  std::vector<LevelJob> jobs;
  for (size_t i = 0; i < cfg.uncertainty_levels.size(); ++i) {
    const double level = cfg.uncertainty_levels[i];
    const std::string tag = level_tag(level);
    LevelJob robust;
    robust.name = "robust_level_" + tag;
    robust.level = level;
    robust.robust = true;
    robust.audit_seed = cfg.optimizer.seed + 7919 * (static_cast<std::uint64_t>(i) + 1);
    robust.outputs = {outdir / (robust.name + ".pulse.json"),
                      outdir / (robust.name + ".report.json"),
                      outdir / (robust.name + ".trace.csv")};
    jobs.push_back(robust);
    LevelJob nonrobust;
    nonrobust.name = "nonrobust_level_" + tag;
    nonrobust.level = level;
    nonrobust.robust = false;
    nonrobust.audit_seed = cfg.optimizer.seed + 104729 * (static_cast<std::uint64_t>(i) + 1);
    nonrobust.outputs = {outdir / (nonrobust.name + ".report.json")};
    jobs.push_back(nonrobust);
  }

  auto run_level_job = [&](const LevelJob& job) {
    JobRecord rec;
    rec.name = job.name;
    rec.seed = job.audit_seed;
    if (!center_ok) {
      rec.status = "failed";
      rec.error = "center stage failed: " + center_rec.error;
      return rec;
    }
    if (!force && all_exist(job.outputs)) {
      rec.status = "skipped_existing";
      hash_outputs(rec, job.outputs);
      return rec;
    }
    TimedRun run = timed([&] {
      const UncertaintyBox level_box = cfg.box(job.level);
      if (job.robust) {
        RobustResult best;
        int best_start = 0;
        for (int s = 0; s < seeds; ++s) {
          RobustResult r =
              cfg.method == RobustMethod::scp
                  ? optimize_scp(center_pulses[static_cast<size_t>(s)], level_box, builder,
                                 target, cfg.optimizer)
                  : optimize_average(center_pulses[static_cast<size_t>(s)], level_box, builder,
                                     target, cfg.optimizer);
          if (s == 0 || r.report.worst_case > best.report.worst_case) {
            best = std::move(r);
            best_start = s;
          }
        }
        (void)best_start;
        best.report.audit =
            concavity_audit(best.pulse, level_box, builder, target, cfg.audit_samples,
                            job.audit_seed, cfg.audit_tolerance, cfg.optimizer.krylov);
        save_pulse(best.pulse, job.outputs[0]);
        write_file(job.outputs[1], best.report.to_json());
        write_file(job.outputs[2], best.trace.to_csv());
      } else {
        FidelityReport report = worst_case_fidelity(nonrobust_pulse, level_box, builder, target,
                                                    cfg.optimizer.krylov);
        report.audit =
            concavity_audit(nonrobust_pulse, level_box, builder, target, cfg.audit_samples,
                            job.audit_seed, cfg.audit_tolerance, cfg.optimizer.krylov);
        write_file(job.outputs[0], report.to_json());
      }
    });
    rec.status = run.status;
    rec.error = run.error;
    rec.wall_time_s = run.wall_time_s;
    if (run.status == "ok") {
      hash_outputs(rec, job.outputs);
    } else {
      remove_partial(job.outputs);
    }
    return rec;
  };

  std::vector<JobRecord> level_records(jobs.size());
  int workers = cfg.workers > 0 ? cfg.workers : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
  std::atomic<size_t> next{0};
  auto worker_loop = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      level_records[i] = run_level_job(jobs[i]);
    }
  };
  if (workers <= 1) {
    worker_loop();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker_loop);
    for (std::thread& t : pool) t.join();
  }
  for (JobRecord& rec : level_records) outcome.jobs.push_back(std::move(rec));

  outcome.all_ok = true;
  for (const JobRecord& rec : outcome.jobs) {
    if (rec.status == "failed") outcome.all_ok = false;
  }

  json manifest;
  manifest["generated_at"] = iso_utc_now();
  manifest["config_hash"] = fnv1a_hex(cfg.to_json());
  manifest["all_ok"] = outcome.all_ok;
  json job_array = json::array();
  for (const JobRecord& rec : outcome.jobs) job_array.push_back(job_to_json(rec));
  manifest["jobs"] = job_array;
  outcome.manifest_path = outdir / "manifest.json";
  write_file(outcome.manifest_path, manifest.dump(2) + "\n");
  return outcome;
}

std::vector<fs::path> run_sensing(const ExperimentConfig& cfg) {
  cfg.validate();
  const fs::path outdir = cfg.output_dir;
  const double level = cfg.sensing_level ? *cfg.sensing_level : cfg.uncertainty_levels.back();
  const fs::path robust_path = outdir / ("robust_level_" + level_tag(level) + ".pulse.json");
  const fs::path nonrobust_path = outdir / "nonrobust.pulse.json";
  for (const fs::path& p : {robust_path, nonrobust_path}) {
    if (!fs::exists(p)) {
      throw Error("sensing: missing sweep artifact '" + p.string() + "'; run the sweep first");
    }
  }

  const ModelBuilder builder = cfg.model_builder();
  const StateVector target = cfg.target_state();
  const std::vector<double> grid_theta = default_theta_grid(cfg.sites, cfg.theta_points);

  auto prepared_state = [&](const fs::path& pulse_path) {
    PulseSet pulse = load_pulse(pulse_path);
    std::vector<double> couplings = select_couplings(cfg, pulse, level, builder, target);
    DeviceModel model = builder(couplings);
    PropagationRecord rec = propagate(pulse, model, target, cfg.optimizer.krylov);
    return rec.forward.back();
  };

  std::vector<std::pair<fs::path, StateVector>> curves;
  curves.emplace_back(outdir / "sense_robust.csv", prepared_state(robust_path));
  curves.emplace_back(outdir / "sense_nonrobust.csv", prepared_state(nonrobust_path));
  // Ideal references are two-level by construction; leakage-free.
  curves.emplace_back(outdir / "sense_ideal_ghz.csv", ghz_state(2, cfg.sites));
  curves.emplace_back(outdir / "sense_ideal_product.csv", product_plus_state(2, cfg.sites, 0.0));

  std::vector<fs::path> written;
  for (const auto& [path, psi] : curves) {
    SensingCurve curve = sensing_curve(psi, grid_theta, cfg.derivative_floor);
    write_file(path, curve.to_csv());
    written.push_back(path);
  }
  return written;
}

void emit_pulse_figure_data(const ExperimentConfig& cfg, const fs::path& pulse_path,
                            const fs::path& out_csv) {
  cfg.validate();
  const PulseSet pulse = load_pulse(pulse_path);
  std::vector<double> leak;
  if (cfg.levels == 3) {
    const std::vector<double> center(static_cast<size_t>(cfg.sites - 1),
                                     cfg.mean_coupling_rad());
    DeviceModel model = cfg.model_builder()(center);
    leak = leakage_trajectory(pulse, model, cfg.optimizer.krylov);
  }

  std::ostringstream out;
  out << "# omega: rad/s; one row per bin, bin n covers t in [n dt, (n+1) dt)";
  if (!leak.empty()) out << "; leakage_p2: dimensionless, at the right bin edge";
  out << "\n";
  for (int c = 0; c < pulse.channels; ++c) {
    const std::string suffix = pulse.channels == 1 ? "" : std::to_string(c);
    if (c > 0) out << ",";
    out << "omega_x" << suffix << "_rad_per_s,omega_y" << suffix << "_rad_per_s";
  }
  if (!leak.empty()) out << ",leakage_p2";
  out << "\n";
  for (int n = 0; n < pulse.grid.bins; ++n) {
    for (int c = 0; c < pulse.channels; ++c) {
      if (c > 0) out << ",";
      out << format_double(pulse.ox(n, c)) << "," << format_double(pulse.oy(n, c));
    }
    if (!leak.empty()) out << "," << format_double(leak[static_cast<size_t>(n) + 1]);
    out << "\n";
  }
  write_file(out_csv, out.str());
}

FidelityReport run_audit(const ExperimentConfig& cfg, const fs::path& pulse_path, double level,
                         int samples, std::uint64_t seed,
                         const std::optional<fs::path>& out_path) {
  cfg.validate();
  const PulseSet pulse = load_pulse(pulse_path);
  const UncertaintyBox level_box = cfg.box(level);
  const ModelBuilder builder = cfg.model_builder();
  const StateVector target = cfg.target_state();
  FidelityReport report =
      worst_case_fidelity(pulse, level_box, builder, target, cfg.optimizer.krylov);
  report.audit = concavity_audit(pulse, level_box, builder, target, samples, seed,
                                 cfg.audit_tolerance, cfg.optimizer.krylov);
  if (out_path) write_file(*out_path, report.to_json());
  return report;
}

}  // namespace starpulse
