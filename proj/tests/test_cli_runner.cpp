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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "starpulse/experiment.hpp"
#include "starpulse/io.hpp"

#include <json.hpp>

using namespace starpulse;
namespace fs = std::filesystem;

namespace {

ExperimentConfig micro_config(const fs::path& out_dir) {
  ExperimentConfig cfg;
  cfg.sites = 3;
  cfg.levels = 2;
  cfg.mean_coupling_hz = 30e6;
  cfg.total_time_s = 4e-8;
  cfg.bins = 6;
  cfg.max_amplitude_hz = 150e6;
  cfg.uncertainty_levels = {0.05};
  cfg.audit_samples = 25;
  cfg.optimizer.center_target = 0.999;
  cfg.optimizer.max_iters = 150;
  cfg.optimizer.scp_max_iters = 12;
  cfg.optimizer.seed = 7;
  cfg.theta_points = 7;
  cfg.output_dir = out_dir.string();
  cfg.workers = 2;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

nlohmann::json manifest_without_volatiles(const fs::path& path) {
  nlohmann::json j = nlohmann::json::parse(slurp(path));
  j.erase("generated_at");
  for (auto& job : j["jobs"]) {
    job.erase("wall_time_s");
    job.erase("status");
  }
  return j;
}

}  // namespace

TEST_CASE("unknown configuration keys are rejected in every block") {
  const std::vector<std::string> bad = {
      R"({"frobnicate": 1})",
      R"({"device": {"sites": 3, "coupling": 1}})",
      R"({"device": {"transmon": {"ej": 50}}})",
      R"({"uncertainty": {"level": [0.05]}})",
      R"({"optimizer": {"trust": 0.1}})",
      R"({"sensing": {"points": 7}})",
  };
  for (const std::string& text : bad) {
    CHECK_THROWS_AS(ExperimentConfig::from_json_text(text), Error);
    try {
      ExperimentConfig::from_json_text(text);
    } catch (const Error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("config: unknown key") != std::string::npos);
    }
  }
}

TEST_CASE("malformed values surface as configuration errors, not JSON guts") {
  for (const std::string& text :
       {std::string(R"({"device": {"sites": "three"}})"), std::string("not json at all"),
        std::string("[1, 2]")}) {
    try {
      ExperimentConfig::from_json_text(text);
      FAIL("expected a throw");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).rfind("config:", 0) == 0);
    }
  }
}

TEST_CASE("defaults survive a JSON round trip unchanged") {
  ExperimentConfig cfg;
  const std::string text = cfg.to_json();
  ExperimentConfig back = ExperimentConfig::from_json_text(text);
  CHECK(back.to_json() == text);
  ExperimentConfig twice = ExperimentConfig::from_json_text(back.to_json());
  CHECK(twice.to_json() == text);
}

TEST_CASE("validation guards the physical and numerical ranges") {
  ExperimentConfig cfg = micro_config("unused");
  cfg.levels = 4;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = micro_config("unused");
  cfg.uncertainty_levels = {-0.1};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = micro_config("unused");
  cfg.uncertainty_levels = {2.5};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = micro_config("unused");
  cfg.sensing_level = 0.123;  // not one of uncertainty_levels
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = micro_config("unused");
  cfg.state_selection = "best";
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = micro_config("unused");
  cfg.state_selection = "group:7";  // out of range for 3 sites
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = micro_config("unused");
  cfg.sites = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = micro_config("unused");
  cfg.theta_points = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("sweep, resume, byte determinism, sensing, figure data, audit") {
  const fs::path dir_a = fresh_dir("sp_sweep_a");
  ExperimentConfig cfg = micro_config(dir_a);

  SweepOutcome first = run_sweep(cfg);
  REQUIRE(first.all_ok);

  // Job order: center first, then the robust and nonrobust arm per level.
  REQUIRE(first.jobs.size() == 3);
  CHECK(first.jobs[0].name == "center");
  CHECK(first.jobs[1].name == "robust_level_0.05");
  CHECK(first.jobs[2].name == "nonrobust_level_0.05");
  for (const JobRecord& job : first.jobs) {
    CHECK(job.status == "ok");
    CHECK(job.error.empty());
    CHECK(job.wall_time_s >= 0.0);
    REQUIRE(!job.files.empty());
    for (const auto& [name, hash] : job.files) {
      CHECK(fs::exists(dir_a / name));
      CHECK(hash.size() == 16);  // 64-bit FNV-1a in hex
      CHECK(hash.find_first_not_of("0123456789abcdef") == std::string::npos);
    }
  }
  CHECK(fs::exists(first.manifest_path));
  CHECK(fs::exists(dir_a / "config.json"));
  CHECK(fs::exists(dir_a / "center.pulse.json"));
  CHECK(fs::exists(dir_a / "nonrobust.pulse.json"));
  CHECK(fs::exists(dir_a / "robust_level_0.05.pulse.json"));
  CHECK(fs::exists(dir_a / "robust_level_0.05.report.json"));
  CHECK(fs::exists(dir_a / "robust_level_0.05.trace.csv"));
  CHECK(fs::exists(dir_a / "nonrobust_level_0.05.report.json"));

  // The robust report embeds a passing audit at the requested sample count.
  {
    nlohmann::json rep =
        nlohmann::json::parse(slurp(dir_a / "robust_level_0.05.report.json"));
    REQUIRE(rep.contains("audit"));
    CHECK(rep["audit"]["samples"].get<int>() == cfg.audit_samples);
    CHECK(rep["audit"]["passed"].get<bool>());
    CHECK(rep["worst_case"].get<double>() > 0.9);
  }

  // Resume: nothing is recomputed, hashes are unchanged.
  SweepOutcome second = run_sweep(cfg);
  REQUIRE(second.all_ok);
  for (size_t i = 0; i < second.jobs.size(); ++i) {
    CHECK(second.jobs[i].status == "skipped_existing");
    CHECK(second.jobs[i].files == first.jobs[i].files);
  }

  // Independent fresh run: every payload byte-identical, manifest equal
  // up to timestamps and wall times.
  const fs::path dir_b = fresh_dir("sp_sweep_b");
  ExperimentConfig cfg_b = micro_config(dir_b);
  SweepOutcome fresh = run_sweep(cfg_b);
  REQUIRE(fresh.all_ok);
  std::set<std::string> names;
  for (const JobRecord& job : first.jobs) {
    for (const auto& [name, hash] : job.files) names.insert(name);
  }
  for (const std::string& name : names) {
    CHECK(slurp(dir_a / name) == slurp(dir_b / name));
  }
  nlohmann::json ma = manifest_without_volatiles(dir_a / "manifest.json");
  nlohmann::json mb = manifest_without_volatiles(dir_b / "manifest.json");
  // Payload dirs differ only through output_dir inside config.json/hash.
  ma.erase("config_hash");
  mb.erase("config_hash");
  CHECK(ma["jobs"] == mb["jobs"]);
  CHECK(ma["all_ok"] == mb["all_ok"]);

  // Force: recomputes (status ok, not skipped) and reproduces the bytes.
  SweepOutcome forced = run_sweep(cfg, true);
  REQUIRE(forced.all_ok);
  for (size_t i = 0; i < forced.jobs.size(); ++i) {
    CHECK(forced.jobs[i].status == "ok");
    CHECK(forced.jobs[i].files == first.jobs[i].files);
  }

  // Sensing rides on the sweep artifacts and writes all four curves.
  std::vector<fs::path> curves = run_sensing(cfg);
  REQUIRE(curves.size() == 4);
  std::set<std::string> curve_names;
  for (const fs::path& p : curves) {
    CHECK(fs::exists(p));
    curve_names.insert(p.filename().string());
  }
  CHECK(curve_names == std::set<std::string>{"sense_robust.csv", "sense_nonrobust.csv",
                                             "sense_ideal_ghz.csv", "sense_ideal_product.csv"});
  {
    std::istringstream in(slurp(dir_a / "sense_ideal_ghz.csv"));
    std::string line;
    std::getline(in, line);  // units comment
    std::getline(in, line);  // column names
    int rows = 0;
    double var_theta_sum = 0.0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      ++rows;
      // var_theta is the fifth comma-separated column.
      std::istringstream fields(line);
      std::string tok;
      for (int k = 0; k < 5; ++k) std::getline(fields, tok, ',');
      var_theta_sum += std::stod(tok);
    }
    CHECK(rows == cfg.theta_points);
    // Ideal GHZ on 3 sites: var_theta = 1/9 at every unmasked point.
    CHECK(var_theta_sum / rows == doctest::Approx(1.0 / 9.0).epsilon(1e-9));
  }

  // Figure data for the robust pulse: header plus one row per bin.
  const fs::path fig = dir_a / "pulsefig.csv";
  emit_pulse_figure_data(cfg, dir_a / "robust_level_0.05.pulse.json", fig);
  {
    std::istringstream in(slurp(fig));
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("# omega: rad/s", 0) == 0);
    std::getline(in, line);
    CHECK(line == "omega_x_rad_per_s,omega_y_rad_per_s");
    int rows = 0;
    while (std::getline(in, line)) {
      if (!line.empty()) ++rows;
    }
    CHECK(rows == cfg.bins);
  }

  // Stand-alone audit agrees with the sweep's robust report.
  FidelityReport audit_rep =
      run_audit(cfg, dir_a / "robust_level_0.05.pulse.json", 0.05, 25, 99, std::nullopt);
  REQUIRE(audit_rep.audit.has_value());
  CHECK(audit_rep.audit->passed);
  nlohmann::json rep = nlohmann::json::parse(slurp(dir_a / "robust_level_0.05.report.json"));
  CHECK(audit_rep.worst_case ==
        doctest::Approx(rep["worst_case"].get<double>()).epsilon(1e-12));

  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("zero-width uncertainty collapses both arms to point reports") {
  const fs::path dir = fresh_dir("sp_sweep_zero");
  ExperimentConfig cfg = micro_config(dir);
  cfg.uncertainty_levels = {0.0};
  cfg.audit_samples = 5;

  SweepOutcome out = run_sweep(cfg);
  REQUIRE(out.all_ok);
  for (const std::string name : {"robust_level_0.report.json", "nonrobust_level_0.report.json"}) {
    nlohmann::json rep = nlohmann::json::parse(slurp(dir / name));
    const double worst = rep["worst_case"].get<double>();
    const double average = rep["average"].get<double>();
    CHECK(worst == doctest::Approx(average).epsilon(1e-12));
    for (const auto& g : rep["per_group"]) {
      CHECK(g["fidelity"].get<double>() == doctest::Approx(worst).epsilon(1e-12));
    }
  }
  // The robust arm can only improve on the evaluated center pulse.
  nlohmann::json robust = nlohmann::json::parse(slurp(dir / "robust_level_0.report.json"));
  nlohmann::json plain = nlohmann::json::parse(slurp(dir / "nonrobust_level_0.report.json"));
  CHECK(robust["worst_case"].get<double>() >= plain["worst_case"].get<double>() - 1e-12);
  fs::remove_all(dir);
}

TEST_CASE("sensing without sweep artifacts names the missing file") {
  const fs::path dir = fresh_dir("sp_sense_missing");
  ExperimentConfig cfg = micro_config(dir);
  try {
    run_sensing(cfg);
    FAIL("expected a throw");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("run the sweep first") != std::string::npos);
    CHECK(msg.find("robust_level_0.05.pulse.json") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("figure data for a zero pulse is identically zero") {
  const fs::path dir = fresh_dir("sp_fig_zero");
  fs::create_directories(dir);
  ExperimentConfig cfg = micro_config(dir);
  PulseSet zero = zero_pulse(cfg.grid(), 1, cfg.max_amplitude_rad());
  save_pulse(zero, dir / "zero.pulse.json");
  emit_pulse_figure_data(cfg, dir / "zero.pulse.json", dir / "fig.csv");
  std::istringstream in(slurp(dir / "fig.csv"));
  std::string line;
  std::getline(in, line);  // comment
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    CHECK(line == "0,0");
  }
  fs::remove_all(dir);
}

TEST_CASE("three-level figure data appends the leakage column") {
  const fs::path dir = fresh_dir("sp_fig_leak");
  fs::create_directories(dir);
  ExperimentConfig cfg = micro_config(dir);
  cfg.levels = 3;
  cfg.bins = 4;
  PulseSet zero = zero_pulse(cfg.grid(), 1, cfg.max_amplitude_rad());
  save_pulse(zero, dir / "zero.pulse.json");
  emit_pulse_figure_data(cfg, dir / "zero.pulse.json", dir / "fig.csv");
  std::istringstream in(slurp(dir / "fig.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line.find("leakage") != std::string::npos);
  std::getline(in, line);
  CHECK(line == "omega_x_rad_per_s,omega_y_rad_per_s,leakage_p2");
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows;
    // Zero drive never populates level 2.
    CHECK(line == "0,0,0");
  }
  CHECK(rows == cfg.bins);
  fs::remove_all(dir);
}

TEST_CASE("method names round-trip through their parser") {
  CHECK(parse_robust_method("scp") == RobustMethod::scp);
  CHECK(parse_robust_method("average") == RobustMethod::average);
  CHECK(robust_method_name(RobustMethod::scp) == "scp");
  CHECK(robust_method_name(RobustMethod::average) == "average");
  CHECK_THROWS_AS(parse_robust_method("minimax"), Error);
}
