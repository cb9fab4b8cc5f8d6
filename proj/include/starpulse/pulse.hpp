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
#include <filesystem>
#include <string>

namespace starpulse {

/// Uniform time grid: total_time split into `bins` equal intervals.
struct PulseGrid {
  double total_time = 0.0;  // seconds
  int bins = 1;

  double dt() const { return total_time / bins; }
  void validate() const;
};

/// Piecewise-constant drive amplitudes, two quadratures per channel per
/// bin, stored row-major as [bin][channel][x then y], in rad/s.
struct PulseSet {
  PulseGrid grid;
  int channels = 1;
  Eigen::VectorXd amplitudes;     // size bins * channels * 2
  double amplitude_bound = 0.0;   // rad/s, every |amplitude| <= bound

  Eigen::Index size() const { return amplitudes.size(); }
  Eigen::Index index(int bin, int channel, int quadrature) const {
    return (static_cast<Eigen::Index>(bin) * channels + channel) * 2 + quadrature;
  }
  double ox(int bin, int channel = 0) const { return amplitudes[index(bin, channel, 0)]; }
  double oy(int bin, int channel = 0) const { return amplitudes[index(bin, channel, 1)]; }

  /// Shape and amplitude-bound invariants; throws on violation.
  void validate() const;
};

/// Zero pulse on the given grid.
PulseSet zero_pulse(const PulseGrid& grid, int channels, double amplitude_bound);

/// JSON round-trip. Numbers survive save/load bit-exactly.
std::string pulse_to_json(const PulseSet& pulse);
PulseSet pulse_from_json(const std::string& text);
void save_pulse(const PulseSet& pulse, const std::filesystem::path& path);
PulseSet load_pulse(const std::filesystem::path& path);

}  // namespace starpulse
