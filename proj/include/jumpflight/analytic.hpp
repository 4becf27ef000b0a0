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

#include <string>

#include "jumpflight/params.hpp"
#include "jumpflight/types.hpp"

namespace jumpflight {

enum class DriveFlavor { Coherent, Incoherent };

// Rates of the reduced no-click model. A coherent regime is described by the
// BG Rabi rate and the bright-level measurement rate; an incoherent one by
// the effective click rate alone.
struct CountingRegime {
  double omega_bg = 0.0;
  double gamma_bg_click = 0.0;
  double gamma_b = 0.0;
  double omega_dg = 0.0;
  double gamma_d = 0.0;
  DriveFlavor flavor = DriveFlavor::Coherent;

  static CountingRegime coherent(double omega_bg, double gamma_b, double omega_dg,
                                 double gamma_d = 0.0);
  static CountingRegime incoherent(double gamma_bg_click, double omega_dg, double gamma_d = 0.0);
  // Uses omega_b0 as the BG drive. The coherent form needs the bright-level
  // measurement rate, which is not a device parameter, so it is passed in.
  static CountingRegime coherent_from(const SystemParams& p, double gamma_b_measure);
  static CountingRegime incoherent_from(const SystemParams& p);

  // Exponential growth rate of W: omega_bg^2 / (2 gamma_b), or gamma_bg_click / 2.
  double growth_rate() const;
};

struct RegimeCheck {
  bool ok = true;
  double separation = 0.0;  // smallest ratio between neighbouring scales
  std::string note;
};

// Non-fatal check of the scale ordering the closed forms assume.
RegimeCheck check_regime(const CountingRegime& r);

double w_dg_coherent(double t, const CountingRegime& r);
double t_mid_coherent(const CountingRegime& r);

GdBloch bloch_from_w(double w);
GdBloch bloch_coherent_approx(double t, const CountingRegime& r);

struct IncoherentW {
  double value = 0.0;
  bool pole_crossed = false;
};

double v_factor(const CountingRegime& r);
double pole_time_incoherent(const CountingRegime& r);
IncoherentW w_dg_incoherent(double t, const CountingRegime& r);
double t_mid_incoherent(const CountingRegime& r);
GdBloch bloch_incoherent_steady(const CountingRegime& r);

struct RemainingTime {
  double value = 0.0;
  bool past_midpoint = false;
};

// Time for W to grow from w_on to 1 at exponential rate `rate` once the dark
// drive is off.
RemainingTime t_mid_dark_off(double w_on, double rate);

// Probability that a jump interrupted at t_on is still in flight (or done) at t.
double completion_probability(double t, double t_on, const ThreeLevelAmplitudes& amps_on,
                              double rate);

// Fixed-step RK4 on the no-click amplitudes. The incoherent flavor evolves
// (c_g, c_d) only and leaves c_b untouched.
ThreeLevelAmplitudes integrate_counting_ket(const ThreeLevelAmplitudes& amps0,
                                            const CountingRegime& r, double t, double dt);

double snr_dispersive(const SystemParams& p);
double discrimination_efficiency(double snr);
double assignment_efficiency(double t_int, double tau_b);
double click_detection_efficiency(const SystemParams& p);

}  // namespace jumpflight
