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


#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "jumpflight/analytic.hpp"
#include "jumpflight/params.hpp"

using namespace jumpflight;

namespace {

constexpr double kTau = 2.0 * M_PI;

CountingRegime table_regime() {
  return CountingRegime::coherent(kTau * 1.2, kTau * 9.0, kTau * 0.02);
}

// Far inside the monitoring hierarchy, so the quadratic term of the W
// equation stays small up to mid-flight.
CountingRegime deep_regime() {
  return CountingRegime::coherent(kTau * 1.2, kTau * 90.0, kTau * 0.0001);
}

CountingRegime incoherent_regime() { return CountingRegime::incoherent(1.01, kTau * 0.0216); }

double rk4_w_incoherent(const CountingRegime& r, double t, int steps) {
  auto f = [&](double w) {
    return 0.5 * r.gamma_bg_click * w + 0.5 * r.omega_dg * (1.0 + w * w);
  };
  double w = 0.0;
  const double h = t / steps;
  for (int i = 0; i < steps; ++i) {
    const double k1 = f(w);
    const double k2 = f(w + 0.5 * h * k1);
    const double k3 = f(w + 0.5 * h * k2);
    const double k4 = f(w + h * k3);
    w += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return w;
}

}  // namespace

TEST_SUITE("analytic-theory") {

TEST_CASE("mid-flight time for the bright and dark drive rates") {
  const double t = t_mid_coherent(table_regime());
  CHECK(t == doctest::Approx(4.371239407075747).epsilon(1e-12));
  CHECK(std::abs(t - 4.3) / 4.3 < 0.02);
  CHECK(w_dg_coherent(t, table_regime()) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(w_dg_coherent(0.0, table_regime()) == 0.0);
}

TEST_CASE("mid-flight time limits and errors") {
  const CountingRegime r = table_regime();
  const double meas = r.omega_bg * r.omega_bg / r.gamma_b;
  CountingRegime eq = CountingRegime::coherent(r.omega_bg, r.gamma_b, meas);
  CHECK(t_mid_coherent(eq) == doctest::Approx(std::log(2.0) / (0.5 * meas)).epsilon(1e-12));
  double prev = INFINITY;
  for (double od : {1.0, 10.0, 100.0, 1e4}) {
    const double t = t_mid_coherent(CountingRegime::coherent(r.omega_bg, r.gamma_b, od));
    CHECK(t > 0.0);
    CHECK(t < prev);
    prev = t;
  }
  CHECK(prev < 0.05);
  CHECK_THROWS_AS(t_mid_coherent(CountingRegime::coherent(r.omega_bg, r.gamma_b, 0.0)),
                  std::domain_error);
}

TEST_CASE("coherent W obeys its linear growth equation") {
  const CountingRegime r = table_regime();
  const double rate = r.growth_rate();
  for (double t : {0.1, 1.0, 2.0, 4.0, 8.0}) {
    const double h = 1e-5;
    const double fd = (w_dg_coherent(t + h, r) - w_dg_coherent(t - h, r)) / (2 * h);
    const double rhs = rate * w_dg_coherent(t, r) + 0.5 * r.omega_dg;
    CHECK(std::abs(fd - rhs) / rhs < 1e-6);
  }
}

TEST_CASE("Bloch vector from the amplitude ratio") {
  GdBloch g = bloch_from_w(0.0);
  CHECK(g.z == -1.0);
  CHECK(g.x == 0.0);
  GdBloch m = bloch_from_w(1.0);
  CHECK(m.z == doctest::Approx(0.0));
  CHECK(m.x == doctest::Approx(1.0));
  GdBloch three = bloch_from_w(3.0);
  CHECK(three.z == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(three.x == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(three.y == 0.0);
  for (double w = -50.0; w <= 50.0; w += 0.37) {
    const GdBloch b = bloch_from_w(w);
    CHECK(b.z * b.z + b.x * b.x == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(b.y == 0.0);
  }
  for (double w : {1e-200, 1e200, -1e200}) {
    const GdBloch b = bloch_from_w(w);
    CHECK(std::isfinite(b.z));
    CHECK(std::isfinite(b.x));
  }
}

TEST_CASE("tanh and sech approximation") {
  const CountingRegime r = table_regime();
  const double tm = t_mid_coherent(r);
  const GdBloch mid = bloch_coherent_approx(tm, r);
  CHECK(mid.z == doctest::Approx(0.0));
  CHECK(mid.x == doctest::Approx(1.0));
  const GdBloch late = bloch_coherent_approx(500.0, r);
  CHECK(late.z == doctest::Approx(1.0));
  CHECK(late.x == doctest::Approx(0.0).epsilon(1e-12));
  const CountingRegime d = deep_regime();
  const GdBloch start = bloch_coherent_approx(0.0, d);
  const GdBloch exact = bloch_from_w(w_dg_coherent(0.0, d));
  CHECK(std::abs(start.z - exact.z) < 1e-4);
  CHECK(std::abs(start.x - exact.x) < 0.02);
}

TEST_CASE("regime check flags a collapsed hierarchy") {
  CHECK(check_regime(deep_regime()).ok);
  const RegimeCheck bad = check_regime(CountingRegime::coherent(kTau * 5.0, kTau * 9.0, 1.0));
  CHECK_FALSE(bad.ok);
  CHECK_FALSE(bad.note.empty());
  const RegimeCheck inc = check_regime(incoherent_regime());
  CHECK_FALSE(inc.ok);
  CHECK(inc.separation == doctest::Approx(1.01 / (kTau * 0.0216)));
  CHECK(check_regime(CountingRegime::incoherent(1.0, 0.01)).ok);
}

TEST_CASE("incoherent W limits and ODE agreement") {
  const CountingRegime r = incoherent_regime();
  const double v = v_factor(r);
  CHECK(w_dg_incoherent(0.0, r).value == 0.0);
  CHECK(w_dg_incoherent(2000.0, r).value == doctest::Approx(-v).epsilon(1e-12));
  CHECK(w_dg_incoherent(2000.0, r).pole_crossed);
  const double tp = pole_time_incoherent(r);
  for (double t : {0.5, 1.0, 2.0, 3.0, 4.0, 0.9 * tp}) {
    const IncoherentW w = w_dg_incoherent(t, r);
    CHECK_FALSE(w.pole_crossed);
    CHECK(w.value == doctest::Approx(rk4_w_incoherent(r, t, 20000)).epsilon(1e-8));
  }
}

TEST_CASE("incoherent W satisfies the Riccati equation away from the pole") {
  const CountingRegime r = incoherent_regime();
  const double tp = pole_time_incoherent(r);
  for (double t : {0.3, 1.5, 3.0, 0.8 * tp, 1.5 * tp, 3.0 * tp}) {
    const double h = 1e-5;
    const double fd =
        (w_dg_incoherent(t + h, r).value - w_dg_incoherent(t - h, r).value) / (2 * h);
    const double w = w_dg_incoherent(t, r).value;
    const double rhs = 0.5 * r.gamma_bg_click * w + 0.5 * r.omega_dg * (1 + w * w);
    CHECK(std::abs(fd - rhs) <= 1e-6 * std::max(std::abs(rhs), 1e-3));
  }
}

TEST_CASE("incoherent mid-flight time is the exact root") {
  const CountingRegime r = incoherent_regime();
  const double t = t_mid_incoherent(r);
  CHECK(t == doctest::Approx(4.0881604885470795).epsilon(1e-12));
  CHECK(std::abs(w_dg_incoherent(t, r).value - 1.0) < 1e-9);
  double lo = 0.0, hi = pole_time_incoherent(r);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (w_dg_incoherent(mid, r).value < 1.0 ? lo : hi) = mid;
  }
  CHECK(t == doctest::Approx(lo).epsilon(1e-9));
}

TEST_CASE("incoherent model reverts to the coherent formula for a fast click rate") {
  for (double ratio : {50.0, 100.0, 500.0}) {
    const CountingRegime r = CountingRegime::incoherent(1.0, 1.0 / ratio);
    const double v = v_factor(r);
    const double t = t_mid_incoherent(r);
    const double simple = std::log(r.gamma_bg_click / r.omega_dg) / (0.5 * r.gamma_bg_click);
    CHECK(std::abs(t - simple) / t < 2.0 / v);
    const CountingRegime c = CountingRegime::coherent(1.0, 1.0, 1.0 / ratio);
    CHECK(c.growth_rate() == doctest::Approx(r.growth_rate()));
    CHECK(std::abs(t_mid_coherent(c) - t) / t < 0.02);
  }
  const CountingRegime far = CountingRegime::incoherent(2.0e4, 1.0);
  CHECK(v_factor(far) == doctest::Approx(2.0e4).epsilon(1e-6));
  const double simple = std::log(far.gamma_bg_click / far.omega_dg) / (0.5 * far.gamma_bg_click);
  CHECK(t_mid_incoherent(far) == doctest::Approx(simple).epsilon(1e-4));
}

TEST_CASE("incoherent steady Bloch vector") {
  const GdBloch s = bloch_incoherent_steady(CountingRegime::incoherent(1.01, 0.1257));
  CHECK(s.z == doctest::Approx(0.968).epsilon(1e-3));
  CHECK(s.x == doctest::Approx(-0.249).epsilon(2e-3));
  const GdBloch perfect = bloch_incoherent_steady(CountingRegime::incoherent(1.0, 0.0));
  CHECK(perfect.z == 1.0);
  CHECK(perfect.x == 0.0);
  const GdBloch edge = bloch_incoherent_steady(CountingRegime::incoherent(1.0, 0.5));
  CHECK(edge.z == doctest::Approx(0.0));
  CHECK(edge.x == doctest::Approx(-1.0));
  const CountingRegime r = incoherent_regime();
  const GdBloch lim = bloch_from_w(w_dg_incoherent(5000.0, r).value);
  const GdBloch st = bloch_incoherent_steady(r);
  CHECK(lim.z == doctest::Approx(st.z).epsilon(1e-12));
  CHECK(lim.x == doctest::Approx(st.x).epsilon(1e-12));
  CHECK_THROWS_AS(v_factor(CountingRegime::incoherent(0.1, 0.1)), std::domain_error);
}

TEST_CASE("remaining time after the dark drive is shut off") {
  CHECK(t_mid_dark_off(1.0, 1.0).value == 0.0);
  CHECK(t_mid_dark_off(1.0, 1.0).past_midpoint);
  CHECK(t_mid_dark_off(std::exp(-1.0), 1.0).value == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_FALSE(t_mid_dark_off(0.2, 0.5).past_midpoint);
  CHECK(t_mid_dark_off(2.0, 1.0).value < 0.0);
  CHECK_THROWS_AS(t_mid_dark_off(0.0, 1.0), std::domain_error);
}

TEST_CASE("completion probability is monotone and bounded by the dark weight") {
  ThreeLevelAmplitudes a;
  a.c_g = 0.9;
  a.c_d = 0.3;
  a.c_b = 0.1;
  const double floor = 0.09 / 0.9;
  CHECK(completion_probability(2.0, 2.0, a, 0.5) == doctest::Approx(1.0));
  double prev = 1.0;
  for (double t = 2.0; t < 40.0; t += 0.25) {
    const double c = completion_probability(t, 2.0, a, 0.5);
    CHECK(c <= prev + 1e-15);
    CHECK(c >= floor - 1e-15);
    prev = c;
  }
  CHECK(prev == doctest::Approx(floor).epsilon(1e-12));
  CHECK_THROWS_AS(completion_probability(1.0, 2.0, a, 0.5), std::domain_error);
}

TEST_CASE("mid-flight amplitudes give half completion") {
  ThreeLevelAmplitudes a;
  a.c_g = M_SQRT1_2;
  a.c_d = M_SQRT1_2;
  CHECK(completion_probability(1e3, 0.0, a, 0.5) == doctest::Approx(0.5));
}

TEST_CASE("counting ket without drives only decays") {
  const CountingRegime r = CountingRegime::coherent(0.0, 2.0, 0.0, 0.4);
  ThreeLevelAmplitudes a;
  a.c_g = 0.6;
  a.c_b = 0.48;
  a.c_d = 0.64;
  const ThreeLevelAmplitudes out = integrate_counting_ket(a, r, 1.5, 0.01);
  CHECK(std::abs(out.c_g - a.c_g) < 1e-15);
  CHECK(out.c_b.real() == doctest::Approx(0.48 * std::exp(-1.5)).epsilon(1e-9));
  CHECK(out.c_d.real() == doctest::Approx(0.64 * std::exp(-0.3)).epsilon(1e-9));
  CHECK(out.t == doctest::Approx(1.5));
}

TEST_CASE("dark subspace stays empty without a dark drive") {
  const CountingRegime r = CountingRegime::coherent(kTau * 1.2, kTau * 9.0, 0.0);
  ThreeLevelAmplitudes a;
  const ThreeLevelAmplitudes out = integrate_counting_ket(a, r, 5.0, 0.0005);
  CHECK(out.c_d == cplx{});
}

TEST_CASE("counting ket tracks the closed form deep in the monitoring regime") {
  const CountingRegime r = deep_regime();
  const double tm = t_mid_coherent(r);
  ThreeLevelAmplitudes a;
  double prev_norm = 1.0;
  double t_prev = 0.0;
  for (double frac : {0.25, 0.5, 0.75, 1.0}) {
    const double t = frac * tm;
    a = integrate_counting_ket(a, r, t - t_prev, 8e-5);
    t_prev = t;
    const double w = (a.c_d / a.c_g).real();
    CHECK(std::abs(w - w_dg_coherent(t, r)) / w_dg_coherent(t, r) < 0.02);
    CHECK(a.norm2() <= prev_norm);
    prev_norm = a.norm2();
  }
}

TEST_CASE("counting ket rejects coarse steps") {
  ThreeLevelAmplitudes a;
  CHECK_THROWS_AS(integrate_counting_ket(a, table_regime(), 1.0, 0.01), std::invalid_argument);
  CHECK_NOTHROW(integrate_counting_ket(a, table_regime(), 0.01, 0.0008));
  const ThreeLevelAmplitudes inc = integrate_counting_ket(a, incoherent_regime(), 2.0, 0.01);
  CHECK(inc.norm2() < 1.0);
}

TEST_CASE("dispersive SNR against direct evaluation") {
  const SystemParams p = device_params();
  const double c = std::cos(std::atan(p.kappa / (2.0 * p.chi_b)));
  const double hand = 0.5 * p.eta * p.kappa * p.t_int * c * c * p.nbar;
  CHECK(std::abs(snr_dispersive(p) - hand) < 1e-12);
  CHECK(std::abs(snr_dispersive(p) - 4.3) < 0.6);
  SystemParams dark = p;
  dark.eta = 0.0;
  CHECK(snr_dispersive(dark) == 0.0);
  SystemParams unresolved = p;
  unresolved.chi_b = 1e-9;
  CHECK(snr_dispersive(unresolved) < 1e-15);
}

TEST_CASE("discrimination and assignment efficiencies") {
  CHECK(discrimination_efficiency(0.0) == doctest::Approx(0.5));
  CHECK(discrimination_efficiency(4.3) == doctest::Approx(0.9809438134773931).epsilon(1e-12));
  CHECK(std::abs(discrimination_efficiency(4.3) - 0.98) < 0.005);
  CHECK(discrimination_efficiency(3.8) == doctest::Approx(0.9743737085713152).epsilon(1e-12));
  const double asg = assignment_efficiency(0.26, 4.2);
  CHECK(asg == doctest::Approx(0.9399724037096165).epsilon(1e-12));
  CHECK(std::abs((1.0 - asg) - 0.06) < 0.001);
  CHECK(assignment_efficiency(0.0, 4.2) == 1.0);
  const SystemParams p = device_params();
  CHECK(click_detection_efficiency(p) ==
        doctest::Approx(discrimination_efficiency(snr_dispersive(p)) *
                        assignment_efficiency(p.t_int, p.tau_b)));
}

}  // TEST_SUITE
