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

#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

namespace jumpflight {

// Internal units: time in microseconds, angular frequencies in rad/us,
// event rates in 1/us, hbar = 1.
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double mhz_to_rad_per_us(double f_over_2pi_mhz) { return kTwoPi * f_over_2pi_mhz; }
constexpr double khz_to_rad_per_us(double f_over_2pi_khz) { return kTwoPi * f_over_2pi_khz * 1e-3; }

// Pure dephasing rate from T1 and Ramsey T2 (both in us).
double dephasing_rate(double t1_us, double t2r_us);

class ParamError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SystemParams {
  // Readout cavity.
  double omega_c = 0.0;  // bookkeeping only, dynamics live in the rotating frame
  double chi_b = 0.0;
  double chi_d = 0.0;
  double kappa = 0.0;
  double kappa_filter = 0.0;
  double eta = 1.0;
  double t_int = 0.26;
  double nbar = 0.0;
  double delta_r = 0.0;

  // Atomic drives.
  double omega_b0 = 0.0;
  double omega_b1 = 0.0;
  double omega_dg = 0.0;
  double delta_b1 = 0.0;
  double delta_dg = 0.0;

  // Decoherence.
  double gamma_b = 0.0;
  double gamma_d = 0.0;
  double gamma_b_phi = 0.0;
  double gamma_d_phi = 0.0;
  double nth_b = 0.0;
  double nth_d = 0.0;
  double nth_c = 0.0;

  // Leakage to and from the catch-all level F.
  double gamma_fg = 0.0;
  double gamma_fd = 0.0;
  double gamma_gf = 0.0;
  double gamma_df = 0.0;

  // Effective rates used by the reduced models.
  double gamma_bg_click = 0.0;
  double gamma_gd = 0.0;
  double tau_b = 0.0;

  int n_fock = 20;

  // Carried along, never evolved.
  std::optional<double> alpha_b;
  std::optional<double> alpha_d;
  std::optional<double> chi_db;

  bool operator==(const SystemParams&) const = default;
};

// Throws ParamError when an invariant fails, otherwise returns the input.
SystemParams validate(const SystemParams& p);

// Smallest Fock truncation accepted for a given steady photon number.
int min_fock_for(double nbar);

// Built-in parameter sets. The first is the measured device, the other two
// are the simulation sets with the dark drive kept on (leakage set a) and
// with the dark drive shut off after 2 us (leakage set b).
SystemParams device_params();
SystemParams simulation_params();
SystemParams simulation_params_dark_off();

// Lookup by name: "device", "simulation", "simulation_dark_off".
SystemParams preset(const std::string& name);

}  // namespace jumpflight
