// Copyright 2025 The jumpflight Authors
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

#include <complex>
#include <cstdint>
#include <vector>

namespace jumpflight {

using cplx = std::complex<double>;

// Unnormalized no-click amplitudes of the three-level counting model.
struct ThreeLevelAmplitudes {
  cplx c_g{1.0, 0.0};
  cplx c_b{0.0, 0.0};
  cplx c_d{0.0, 0.0};
  double t = 0.0;

  double norm2() const { return std::norm(c_g) + std::norm(c_b) + std::norm(c_d); }
};

// Bloch vector of the ground-dark manifold. n_gd is the manifold population
// when it is known, negative otherwise.
struct GdBloch {
  double z = -1.0;
  double x = 0.0;
  double y = 0.0;
  double n_gd = -1.0;

  double length2() const { return z * z + x * x + y * y; }
};

enum class Label : std::uint8_t { B, NotB };

struct RecordFrame {
  double t = 0.0;
  double i_rec = 0.0;
  double q_rec = 0.0;
  Label label = Label::B;
};

struct Thresholds {
  double i_b = 0.0;
  double i_bbar = 0.0;
  double q_b = 0.0;
};

enum class ProtocolMode : std::uint8_t { Catch, Reverse, FreeRun };

struct ProtocolConfig {
  double dt_on = 0.0;
  double dt_off = 0.0;
  double theta_i = 0.0;
  double phi_i = 0.0;
  ProtocolMode mode = ProtocolMode::Catch;
  Thresholds thresholds;
  bool thresholds_set = false;

  double dt_catch() const { return dt_on + dt_off; }
};

// Throws std::invalid_argument on negative windows or inverted thresholds.
void check_protocol(const ProtocolConfig& c);

struct ConditionalTomogram {
  std::vector<double> grid;
  std::vector<double> z;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> counts;
  std::vector<double> p_bb_sum;
};

}  // namespace jumpflight
