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

#include "jumpflight/analytic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace jumpflight {

CountingRegime CountingRegime::coherent(double omega_bg, double gamma_b, double omega_dg,
                                        double gamma_d) {
  CountingRegime r;
  r.omega_bg = omega_bg;
  r.gamma_b = gamma_b;
  r.omega_dg = omega_dg;
  r.gamma_d = gamma_d;
  r.flavor = DriveFlavor::Coherent;
  return r;
}

CountingRegime CountingRegime::incoherent(double gamma_bg_click, double omega_dg, double gamma_d) {
  CountingRegime r;
  r.gamma_bg_click = gamma_bg_click;
  r.omega_dg = omega_dg;
  r.gamma_d = gamma_d;
  r.flavor = DriveFlavor::Incoherent;
  return r;
}

CountingRegime CountingRegime::coherent_from(const SystemParams& p, double gamma_b_measure) {
  return coherent(p.omega_b0, gamma_b_measure, p.omega_dg, p.gamma_d);
}

CountingRegime CountingRegime::incoherent_from(const SystemParams& p) {
  return incoherent(p.gamma_bg_click, p.omega_dg, p.gamma_d);
}

double CountingRegime::growth_rate() const {
  if (flavor == DriveFlavor::Incoherent) return 0.5 * gamma_bg_click;
  return omega_bg * omega_bg / (2.0 * gamma_b);
}

RegimeCheck check_regime(const CountingRegime& r) {
  RegimeCheck out;
  std::ostringstream note;
  if (r.flavor == DriveFlavor::Coherent) {
    const double meas = r.omega_bg * r.omega_bg / r.gamma_b;
    const double slow = std::max(r.omega_dg, r.gamma_d);
    const double lower = slow > 0.0 ? meas / slow : INFINITY;
    const double upper = meas > 0.0 ? r.gamma_b / meas : INFINITY;
    out.separation = std::min(lower, upper);
    if (lower < 10.0) note << "dark scales within x" << lower << " of omega_bg^2/gamma_b; ";
    if (upper < 10.0) note << "omega_bg^2/gamma_b within x" << upper << " of gamma_b; ";
  } else {
    const double slow = std::max(r.omega_dg, r.gamma_d);
    out.separation = slow > 0.0 ? r.gamma_bg_click / slow : INFINITY;
    if (out.separation < 10.0) note << "dark scales within x" << out.separation << " of the click rate; ";
  }
  out.ok = out.separation >= 10.0;
  out.note = note.str();
  return out;
}

double w_dg_coherent(double t, const CountingRegime& r) {
  const double meas = r.omega_bg * r.omega_bg / r.gamma_b;
  return (r.omega_dg / meas) * std::expm1(0.5 * meas * t);
}

double t_mid_coherent(const CountingRegime& r) {
  if (!(r.omega_dg > 0.0)) throw std::domain_error("mid-flight time needs a nonzero dark drive");
  const double meas = r.omega_bg * r.omega_bg / r.gamma_b;
  if (!(meas > 0.0)) throw std::domain_error("mid-flight time needs a nonzero bright drive");
  return std::log1p(meas / r.omega_dg) / (0.5 * meas);
}

GdBloch bloch_from_w(double w) {
  GdBloch b;
  b.y = 0.0;
  if (std::isinf(w)) {
    b.z = 1.0;
    b.x = 0.0;
    return b;
  }
  const double w2 = w * w;
  if (w2 <= 1.0) {
    b.z = (w2 - 1.0) / (w2 + 1.0);
    b.x = 2.0 * w / (w2 + 1.0);
  } else {
    const double u = 1.0 / w;
    const double u2 = u * u;
    b.z = (1.0 - u2) / (1.0 + u2);
    b.x = 2.0 * u / (1.0 + u2);
  }
  return b;
}

GdBloch bloch_coherent_approx(double t, const CountingRegime& r) {
  const double arg = r.growth_rate() * (t - t_mid_coherent(r));
  GdBloch b;
  b.z = std::tanh(arg);
  b.x = 1.0 / std::cosh(arg);
  b.y = 0.0;
  return b;
}

namespace {

void require_incoherent(const CountingRegime& r) {
  if (!(r.omega_dg > 0.0) || !(r.gamma_bg_click > 2.0 * r.omega_dg)) {
    throw std::domain_error("incoherent model needs gamma_bg_click > 2 omega_dg > 0");
  }
}

}  // namespace

double v_factor(const CountingRegime& r) {
  require_incoherent(r);
  const double h = r.gamma_bg_click / (2.0 * r.omega_dg);
  return h + std::sqrt(h * h - 1.0);
}

double pole_time_incoherent(const CountingRegime& r) {
  const double v = v_factor(r);
  const double k = 0.5 * (v - 1.0 / v) * r.omega_dg;
  return 2.0 * std::log(v) / k;
}

IncoherentW w_dg_incoherent(double t, const CountingRegime& r) {
  const double v = v_factor(r);
  const double k = 0.5 * (v - 1.0 / v) * r.omega_dg;
  IncoherentW out;
  const double kt = k * t;
  if (kt <= 1.0) {
    const double e = std::exp(kt);
    out.value = std::expm1(kt) / (v - e / v);
  } else {
    // Divide through by exp(kt) so the long-time limit -V is reached smoothly.
    const double d = std::exp(-kt);
    out.value = -std::expm1(-kt) / (v * d - 1.0 / v);
  }
  out.pole_crossed = kt > 2.0 * std::log(v);
  return out;
}

double t_mid_incoherent(const CountingRegime& r) {
  const double v = v_factor(r);
  return 2.0 / ((v - 1.0 / v) * r.omega_dg) * std::log((v + 1.0) / (1.0 / v + 1.0));
}

GdBloch bloch_incoherent_steady(const CountingRegime& r) {
  if (!(r.gamma_bg_click > 0.0) || r.omega_dg < 0.0 || 2.0 * r.omega_dg > r.gamma_bg_click) {
    throw std::domain_error("steady state needs gamma_bg_click >= 2 omega_dg >= 0");
  }
  const double q = r.omega_dg / r.gamma_bg_click;
  GdBloch b;
  b.z = std::sqrt(std::max(0.0, 1.0 - 4.0 * q * q));
  b.x = -2.0 * q;
  b.y = 0.0;
  return b;
}

RemainingTime t_mid_dark_off(double w_on, double rate) {
  if (!(w_on > 0.0)) throw std::domain_error("w_on must be positive");
  if (!(rate > 0.0)) throw std::domain_error("growth rate must be positive");
  RemainingTime out;
  out.value = 0.5 * std::log(1.0 / (w_on * w_on)) / rate;
  out.past_midpoint = w_on >= 1.0;
  return out;
}

double completion_probability(double t, double t_on, const ThreeLevelAmplitudes& amps_on,
                              double rate) {
  if (t < t_on) throw std::domain_error("t must not precede t_on");
  const double pg = std::norm(amps_on.c_g);
  const double pd = std::norm(amps_on.c_d);
  const double n = pg + pd;
  if (!(n > 0.0)) throw std::domain_error("amplitudes have no ground-dark weight");
  return pd / n + (pg / n) * std::exp(-2.0 * rate * (t - t_on));
}

ThreeLevelAmplitudes integrate_counting_ket(const ThreeLevelAmplitudes& amps0,
                                            const CountingRegime& r, double t, double dt) {
  if (!(dt > 0.0) || t < 0.0) throw std::invalid_argument("need dt > 0 and t >= 0");
  const bool coh = r.flavor == DriveFlavor::Coherent;
  double limit = INFINITY;
  if (coh) {
    if (r.gamma_b > 0.0) limit = std::min(limit, 1.0 / r.gamma_b);
    if (r.omega_bg > 0.0) limit = std::min(limit, kTwoPi / r.omega_bg);
  } else if (r.gamma_bg_click > 0.0) {
    limit = 1.0 / r.gamma_bg_click;
  }
  if (r.omega_dg > 0.0) limit = std::min(limit, kTwoPi / r.omega_dg);
  if (dt > limit / 20.0 * (1.0 + 1e-12)) throw std::invalid_argument("dt too coarse for the regime");

  // Generator rows act on (c_g, c_b, c_d).
  const double og = coh ? r.omega_bg : 0.0;
  const double gb = coh ? r.gamma_b : 0.0;
  const double gg = coh ? 0.0 : r.gamma_bg_click;
  const double od = r.omega_dg;
  const double gd = r.gamma_d;
  using V3 = std::array<cplx, 3>;
  auto f = [&](const V3& c) -> V3 {
    return {0.5 * (-gg * c[0] - og * c[1] - od * c[2]), 0.5 * (og * c[0] - gb * c[1]),
            0.5 * (od * c[0] - gd * c[2])};
  };
  auto axpy = [](const V3& a, double s, const V3& b) {
    return V3{a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]};
  };

  const long n = std::max(1L, static_cast<long>(std::ceil(t / dt - 1e-9)));
  const double h = t / static_cast<double>(n);
  V3 c{amps0.c_g, coh ? amps0.c_b : cplx{}, amps0.c_d};
  const cplx frozen_b = amps0.c_b;
  auto norm2 = [](const V3& v) { return std::norm(v[0]) + std::norm(v[1]) + std::norm(v[2]); };
  if (t > 0.0) {
    for (long i = 0; i < n; ++i) {
      const double before = norm2(c);
      const V3 k1 = f(c);
      const V3 k2 = f(axpy(c, 0.5 * h, k1));
      const V3 k3 = f(axpy(c, 0.5 * h, k2));
      const V3 k4 = f(axpy(c, h, k3));
      for (int j = 0; j < 3; ++j) c[j] += (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
      if (norm2(c) > before * (1.0 + 1e-12) + 1e-300) {
        throw std::runtime_error("counting-model step increased the norm; reduce dt");
      }
    }
  }
  ThreeLevelAmplitudes out;
  out.c_g = c[0];
  out.c_b = coh ? c[1] : frozen_b;
  out.c_d = c[2];
  out.t = amps0.t + t;
  return out;
}

double snr_dispersive(const SystemParams& p) {
  const double c = std::cos(std::atan(p.kappa / (2.0 * p.chi_b)));
  return 0.5 * p.eta * p.kappa * p.t_int * c * c * p.nbar;
}

double discrimination_efficiency(double snr) {
  if (snr < 0.0) throw std::domain_error("snr must be non-negative");
  return 0.5 * std::erfc(-std::sqrt(0.5 * snr));
}

double assignment_efficiency(double t_int, double tau_b) {
  if (!(tau_b > 0.0)) throw std::domain_error("tau_b must be positive");
  return std::exp(-t_int / tau_b);
}

double click_detection_efficiency(const SystemParams& p) {
  return discrimination_efficiency(snr_dispersive(p)) * assignment_efficiency(p.t_int, p.tau_b);
}

}  // namespace jumpflight
