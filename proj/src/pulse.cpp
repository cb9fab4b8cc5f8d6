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

#include "starpulse/pulse.hpp"

#include <cmath>
#include <json.hpp>

#include "starpulse/io.hpp"

namespace starpulse {

void PulseGrid::validate() const {
  if (!(total_time > 0.0) || !std::isfinite(total_time)) throw Error("PulseGrid: total_time must be positive");
  if (bins < 1) throw Error("PulseGrid: bins must be >= 1");
}

void PulseSet::validate() const {
  grid.validate();
  if (channels < 1) throw Error("PulseSet: channels must be >= 1");
  const Eigen::Index expected = static_cast<Eigen::Index>(grid.bins) * channels * 2;
  if (amplitudes.size() != expected) {
    throw Error("PulseSet: amplitude array has " + std::to_string(amplitudes.size()) +
                " entries, expected " + std::to_string(expected));
  }
  if (!(amplitude_bound > 0.0)) throw Error("PulseSet: amplitude_bound must be positive");
  for (Eigen::Index i = 0; i < amplitudes.size(); ++i) {
    if (!std::isfinite(amplitudes[i])) throw Error("PulseSet: non-finite amplitude");
    if (std::abs(amplitudes[i]) > amplitude_bound) {
      throw Error("PulseSet: amplitude " + format_double(amplitudes[i]) + " exceeds bound " +
                  format_double(amplitude_bound));
    }
  }
}

PulseSet zero_pulse(const PulseGrid& grid, int channels, double amplitude_bound) {
  PulseSet p;
  p.grid = grid;
  p.channels = channels;
  p.amplitudes = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.bins) * channels * 2);
  p.amplitude_bound = amplitude_bound;
  p.validate();
  return p;
}

std::string pulse_to_json(const PulseSet& pulse) {
  pulse.validate();
  nlohmann::json doc;
  doc["T"] = pulse.grid.total_time;
  doc["m"] = pulse.grid.bins;
  doc["channels"] = pulse.channels;
  doc["amplitude_bound"] = pulse.amplitude_bound;
  std::vector<double> amps(pulse.amplitudes.data(), pulse.amplitudes.data() + pulse.amplitudes.size());
  doc["amplitudes"] = amps;
  doc["convention"] = "rad_per_s";
  return doc.dump(2) + "\n";
}

PulseSet pulse_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("pulse_from_json: invalid JSON: ") + e.what());
  }
  for (const char* key : {"T", "m", "channels", "amplitudes", "convention"}) {
    if (!doc.contains(key)) throw Error(std::string("pulse_from_json: missing key '") + key + "'");
  }
  if (doc["convention"].get<std::string>() != "rad_per_s") {
    throw Error("pulse_from_json: unsupported convention '" + doc["convention"].get<std::string>() + "'");
  }
  PulseSet p;
  p.grid.total_time = doc["T"].get<double>();
  p.grid.bins = doc["m"].get<int>();
  p.channels = doc["channels"].get<int>();
  const auto amps = doc["amplitudes"].get<std::vector<double>>();
  p.amplitudes = Eigen::Map<const Eigen::VectorXd>(amps.data(), static_cast<Eigen::Index>(amps.size()));
  if (doc.contains("amplitude_bound")) {
    p.amplitude_bound = doc["amplitude_bound"].get<double>();
  } else {
    // Older files without an explicit bound: tightest bound covering the data.
    p.amplitude_bound = p.amplitudes.size() ? p.amplitudes.cwiseAbs().maxCoeff() : 1.0;
    if (p.amplitude_bound == 0.0) p.amplitude_bound = 1.0;
  }
  p.validate();
  return p;
}

void save_pulse(const PulseSet& pulse, const std::filesystem::path& path) {
  write_file(path, pulse_to_json(pulse));
}

PulseSet load_pulse(const std::filesystem::path& path) {
  return pulse_from_json(read_file(path));
}

}  // namespace starpulse
