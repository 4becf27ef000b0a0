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

#include "jumpflight/params.hpp"

#include <cmath>
#include <sstream>

namespace jumpflight {

double dephasing_rate(double t1_us, double t2r_us) {
  if (!(t1_us > 0.0) || !(t2r_us > 0.0)) throw ParamError("T1 and T2R must be positive");
  const double g = 1.0 / t2r_us - 0.5 / t1_us;
  if (g < -1e-12) {
    std::ostringstream msg;
    msg << "T2R = " << t2r_us << " us exceeds 2 T1 = " << 2.0 * t1_us << " us";
    throw ParamError(msg.str());
  }
  return g < 0.0 ? 0.0 : g;
}

int min_fock_for(double nbar) {
  return static_cast<int>(std::ceil(nbar + 6.0 * std::sqrt(nbar)));
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ParamError(what);
}

void require_rate(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw ParamError(std::string(name) + " must be a finite non-negative number");
  }
}

}  // namespace

SystemParams validate(const SystemParams& p) {
  require(p.kappa > 0.0 && std::isfinite(p.kappa), "kappa must be positive");
  require(p.kappa_filter > 0.0 && std::isfinite(p.kappa_filter), "kappa_filter must be positive");
  require(p.t_int > 0.0 && std::isfinite(p.t_int), "t_int must be positive");
  require(p.eta > 0.0 && p.eta <= 1.0, "eta must lie in (0, 1]");
  require(p.nbar >= 0.0 && std::isfinite(p.nbar), "nbar must be non-negative");
  require(p.n_fock >= 1, "n_fock must be at least 1");
  if (p.n_fock < min_fock_for(p.nbar)) {
    std::ostringstream msg;
    msg << "n_fock = " << p.n_fock << " is too small for nbar = " << p.nbar << " (need >= "
        << min_fock_for(p.nbar) << ")";
    throw ParamError(msg.str());
  }
  for (double v : {p.chi_b, p.chi_d, p.delta_r, p.omega_b0, p.omega_b1, p.omega_dg, p.delta_b1,
                   p.delta_dg, p.omega_c}) {
    require(std::isfinite(v), "frequencies must be finite");
  }
  require_rate(p.gamma_b, "gamma_b");
  require_rate(p.gamma_d, "gamma_d");
  require_rate(p.gamma_b_phi, "gamma_b_phi");
  require_rate(p.gamma_d_phi, "gamma_d_phi");
  require_rate(p.nth_b, "nth_b");
  require_rate(p.nth_d, "nth_d");
  require_rate(p.nth_c, "nth_c");
  require_rate(p.gamma_fg, "gamma_fg");
  require_rate(p.gamma_fd, "gamma_fd");
  require_rate(p.gamma_gf, "gamma_gf");
  require_rate(p.gamma_df, "gamma_df");
  require_rate(p.gamma_bg_click, "gamma_bg_click");
  require_rate(p.gamma_gd, "gamma_gd");
  require_rate(p.tau_b, "tau_b");
  return p;
}

SystemParams device_params() {
  SystemParams p;
  p.omega_c = mhz_to_rad_per_us(8979.640);
  p.chi_b = mhz_to_rad_per_us(-5.08);
  p.chi_d = mhz_to_rad_per_us(-0.33);
  p.kappa = mhz_to_rad_per_us(3.62);
  p.kappa_filter = 10.0 * p.kappa;
  p.eta = 0.33;
  p.t_int = 0.26;
  p.nbar = 5.0;
  p.delta_r = p.chi_b;
  p.omega_b0 = mhz_to_rad_per_us(1.2);
  p.omega_b1 = mhz_to_rad_per_us(0.6);
  p.delta_b1 = mhz_to_rad_per_us(-30.0);
  p.omega_dg = khz_to_rad_per_us(20.0);
  p.delta_dg = khz_to_rad_per_us(-275.0);
  p.gamma_b = 1.0 / 28.0;
  p.gamma_d = 1.0 / 116.0;
  p.gamma_b_phi = dephasing_rate(28.0, 18.0);
  p.gamma_d_phi = dephasing_rate(116.0, 120.0);
  p.nth_b = 0.01;
  p.nth_d = 0.05;
  p.nth_c = 0.0017;
  p.gamma_bg_click = 1.0 / 0.99;
  p.gamma_gd = 1.0 / 30.8;
  p.tau_b = 4.2;
  p.n_fock = 20;
  p.alpha_b = mhz_to_rad_per_us(195.0);
  p.alpha_d = mhz_to_rad_per_us(152.0);
  p.chi_db = mhz_to_rad_per_us(61.0);
  return p;
}

SystemParams simulation_params() {
  SystemParams p = device_params();
  p.gamma_b = 1.0 / 15.0;
  p.gamma_d = 1.0 / 105.0;
  p.gamma_b_phi = dephasing_rate(15.0, 18.0);
  p.gamma_d_phi = dephasing_rate(105.0, 120.0);
  p.omega_dg = khz_to_rad_per_us(21.6);
  p.delta_dg = khz_to_rad_per_us(-274.5);
  p.nth_c = 0.0;
  p.gamma_fg = khz_to_rad_per_us(0.38);
  p.gamma_fd = khz_to_rad_per_us(0.38);
  p.gamma_gf = khz_to_rad_per_us(11.24);
  p.gamma_df = khz_to_rad_per_us(11.24);
  return p;
}

SystemParams simulation_params_dark_off() {
  SystemParams p = simulation_params();
  p.gamma_fg = khz_to_rad_per_us(0.217);
  p.gamma_fd = khz_to_rad_per_us(4.34);
  p.gamma_gf = khz_to_rad_per_us(11.08);
  p.gamma_df = khz_to_rad_per_us(15.88);
  return p;
}

SystemParams preset(const std::string& name) {
  if (name == "device") return device_params();
  if (name == "simulation") return simulation_params();
  if (name == "simulation_dark_off") return simulation_params_dark_off();
  throw ParamError("unknown parameter preset '" + name + "'");
}

}  // namespace jumpflight
