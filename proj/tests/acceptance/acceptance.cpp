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


// Acceptance checks, one per criterion. Each run prints a single
// "criterion N: PASS|FAIL ..." line and exits nonzero on failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "jumpflight/analytic.hpp"
#include "jumpflight/fit.hpp"
#include "jumpflight/io.hpp"
#include "jumpflight/lindblad.hpp"
#include "jumpflight/model.hpp"
#include "jumpflight/params.hpp"
#include "jumpflight/protocol.hpp"
#include "jumpflight/record.hpp"

using namespace jumpflight;

namespace {

constexpr double kTau = 2.0 * M_PI;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

CountingRegime table_regime() {
  return CountingRegime::coherent(kTau * 1.2, kTau * 9.0, kTau * 0.02);
}

Verdict mid_flight_time(std::uint64_t) {
  const double t = t_mid_coherent(table_regime());
  return {std::abs(t - 4.3) / 4.3 <= 0.02, "t_mid = " + fmt("%.6f", t) + " us (4.3 +- 2%)"};
}

Verdict counting_model(std::uint64_t) {
  const CountingRegime r = table_regime();
  const double tm = t_mid_coherent(r);
  const double dt = 5e-4;
  const double grid = 0.05;
  ThreeLevelAmplitudes a;
  double worst = 0.0, at = 0.0;
  bool finite = true;
  for (double t = grid; t <= 2.0 * tm + 1e-12; t += grid) {
    a = integrate_counting_ket(a, r, grid, dt);
    const double w = (a.c_d / a.c_g).real();
    const double ref = w_dg_coherent(t, r);
    const double dev = std::abs(w - ref) / std::abs(ref);
    if (!std::isfinite(dev)) finite = false;
    if (!(dev <= worst)) {
      worst = dev;
      at = t;
    }
  }
  const double root = std::abs(w_dg_coherent(tm, r) - 1.0);
  const bool ok = finite && worst < 0.01 && root < 1e-6;
  return {ok, "max |W_ode - W_closed|/W_closed = " + fmt("%.4g", worst) + " at t = " +
                  fmt("%.2f", at) + " us (< 1%); root residual " + fmt("%.2e", root)};
}

Verdict trajectory_oracle(std::uint64_t seed) {
  const SystemParams p = simulation_params();
  const AtomCavityKet k0 =
      AtomCavityKet::product(kB, coherent_state(steady_field(p, kB), p.n_fock));
  std::vector<double> checks;
  for (int i = 1; i <= 10; ++i) checks.push_back(0.5 * i);
  RunOptions o;
  o.seed = seed;
  const PopulationEnsemble ens = ensemble_populations(p, k0, checks, 10000, o);
  const auto rho =
      lindblad_solve(DensityMatrix::pure(k0), p, checks, 1.0 / (20.0 * max_rate(p)));
  double worst = 0.0;
  for (std::size_t c = 0; c < checks.size(); ++c) {
    for (int a : {kG, kB, kD}) {
      worst = std::max(worst, std::abs(ens.mean[c][a] - rho[c].population(a)));
    }
  }
  return {worst < 0.02, "max |P_traj - P_lindblad| = " + fmt("%.4f", worst) +
                            " over 10^4 trajectories (< 0.02)"};
}

Verdict noise_statistics(std::uint64_t seed) {
  RngStream rng(seed, 0);
  const double dt = 0.001;
  const long n = 1000000;
  double s1r = 0, s1i = 0, s2r = 0, s2i = 0, sa = 0;
  double v1r = 0, v1i = 0, v2r = 0, v2i = 0, va = 0;
  for (long i = 0; i < n; ++i) {
    const cplx z = rng.wiener(dt);
    const cplx z2 = z * z;
    const double a = std::norm(z);
    s1r += z.real(), s1i += z.imag(), s2r += z2.real(), s2i += z2.imag(), sa += a;
    v1r += z.real() * z.real(), v1i += z.imag() * z.imag();
    v2r += z2.real() * z2.real(), v2i += z2.imag() * z2.imag(), va += a * a;
  }
  const double nn = static_cast<double>(n);
  auto se = [&](double s, double s2) { return std::sqrt((s2 / nn - (s / nn) * (s / nn)) / nn); };
  const bool m1 = std::abs(s1r / nn) < 3 * se(s1r, v1r) && std::abs(s1i / nn) < 3 * se(s1i, v1i);
  const bool m2 = std::abs(s2r / nn) < 3 * se(s2r, v2r) && std::abs(s2i / nn) < 3 * se(s2i, v2i);
  const double rel = std::abs(sa / nn - dt) / dt;
  std::ostringstream d;
  d << "E[dZ] = (" << fmt("%.2e", s1r / nn) << ", " << fmt("%.2e", s1i / nn) << "), E[dZ^2] = ("
    << fmt("%.2e", s2r / nn) << ", " << fmt("%.2e", s2i / nn) << "), |E|dZ|^2 - dt|/dt = "
    << fmt("%.2e", rel);
  return {m1 && m2 && rel < 0.01, d.str()};
}

Verdict free_run_rates(std::uint64_t seed) {
  const SystemParams p = simulation_params();
  RunOptions o;
  o.seed = seed;
  const FreeRunResult r = run_free(p, 45000.0, o);
  BiExponentialOptions bo;
  bo.bin_width = p.t_int;
  const BiExponentialFit f = fit_bi_exponential(r.not_b_dwells, bo);
  const ExponentialFit e = fit_single_exponential(r.b_dwells, p.t_int);
  const double fast = 1.0 / 0.99, slow = 1.0 / 30.8;
  const bool ok_jumps = r.dark_jumps >= 50;
  const bool ok_fast = std::abs(f.rate_fast - fast) / fast <= 0.25;
  const bool ok_slow = std::abs(f.rate_slow - slow) / slow <= 0.30;
  const bool ok_b = std::abs(e.time_constant() - 4.2) / 4.2 <= 0.30;
  std::ostringstream d;
  d << r.dark_jumps << " dark jumps; fast 1/" << fmt("%.3f", 1.0 / f.rate_fast)
    << " us (0.99 +- 25%); slow 1/" << fmt("%.2f", 1.0 / f.rate_slow)
    << " us (30.8 +- 30%); B dwell " << fmt("%.3f", e.time_constant()) << " us (4.2 +- 30%)";
  return {ok_jumps && ok_fast && ok_slow && ok_b, d.str()};
}

ProtocolConfig catch_protocol(double on, double off) {
  ProtocolConfig c;
  c.dt_on = on;
  c.dt_off = off;
  c.mode = ProtocolMode::Catch;
  return c;
}

Verdict catch_tomogram(std::uint64_t seed) {
  RunOptions o;
  o.seed = seed;
  const CatchResult r = run_catch(simulation_params(), catch_protocol(10.4, 0.0), 10000, o);
  const TanhSechFit f = fit_tanh_sech(r.tomogram);
  const double zc = z_zero_crossing(r.tomogram);
  const bool ok = within(f.tau, 1.65, 0.3) && within(f.b, 0.95, 0.07) &&
                  within(f.a, -0.07, 0.05) && within(zc, 3.95, 0.5);
  std::ostringstream d;
  d << r.events << " events; a = " << fmt("%.3f", f.a) << " (-0.07 +- 0.05), b = "
    << fmt("%.3f", f.b) << " (0.95 +- 0.07), tau = " << fmt("%.3f", f.tau)
    << " us (1.65 +- 0.3), Z crossing " << fmt("%.3f", zc) << " us (3.95 +- 0.5)";
  return {ok, d.str()};
}

Verdict dark_off_tomogram(std::uint64_t seed) {
  RunOptions o;
  o.seed = seed;
  const CatchResult r =
      run_catch(simulation_params_dark_off(), catch_protocol(2.0, 8.4), 10000, o);
  const TanhSechFit f = fit_tanh_sech(r.tomogram, true);
  const bool ok = f.a_prime == 0.0 && within(f.b_prime, 0.60, 0.08) && within(f.tau, 2.03, 0.4);
  std::ostringstream d;
  d << r.events << " events; a' = " << f.a_prime << " (fixed), b' = " << fmt("%.3f", f.b_prime)
    << " (0.60 +- 0.08), tau = " << fmt("%.3f", f.tau) << " us (2.03 +- 0.4)";
  return {ok, d.str()};
}

Verdict snr_chain(std::uint64_t seed) {
  const SystemParams p = device_params();
  const double c = std::cos(std::atan(p.kappa / (2.0 * p.chi_b)));
  const double hand = 0.5 * p.eta * p.kappa * p.t_int * c * c * p.nbar;
  const double snr = snr_dispersive(p);
  std::vector<RecordFrame> frames = pinned_record(p, kB, 3000, RngStream(seed, 0));
  const auto dark = pinned_record(p, kG, 3000, RngStream(seed, 1));
  frames.insert(frames.end(), dark.begin(), dark.end());
  const BiGaussianFit g = fit_bi_gaussian(frames);
  const double disc = discrimination_efficiency(4.3);
  const double eff = click_detection_efficiency(p);
  const bool ok = std::abs(snr - hand) < 1e-6 && std::abs(g.snr - snr) / snr <= 0.2 &&
                  within(disc, 0.98, 0.005) && within(eff, 0.90, 0.02);
  std::ostringstream d;
  d << "SNR = " << fmt("%.6f", snr) << " (hand " << fmt("%.6f", hand) << "); fitted "
    << fmt("%.3f", g.snr) << " (within 20%); eta_disc(4.3) = " << fmt("%.4f", disc)
    << " (0.98 +- 0.005); eta_eff = " << fmt("%.4f", eff) << " (0.90 +- 0.02)";
  return {ok, d.str()};
}

Verdict truth_table(std::uint64_t) {
  const Thresholds th{2.0, 1.5, 2.1};
  struct Case {
    double i, q;
    Label prev, want;
  };
  // B region, not-B region and dead band, each from both previous labels.
  const Case cases[] = {
      {2.5, 0.0, Label::B, Label::B},       {2.5, 0.0, Label::NotB, Label::B},
      {1.0, 1.0, Label::B, Label::NotB},    {1.0, 1.0, Label::NotB, Label::NotB},
      {1.75, 0.0, Label::B, Label::B},      {1.75, 0.0, Label::NotB, Label::NotB},
  };
  int hits = 0;
  for (const auto& k : cases) {
    RecordFrame f;
    f.i_rec = k.i;
    f.q_rec = k.q;
    if (hysteretic_label(f, th, k.prev) == k.want) ++hits;
  }
  // Q excursions above q_b fold into B from either state.
  RecordFrame spike;
  spike.i_rec = 0.0;
  spike.q_rec = 3.0;
  const bool fold = hysteretic_label(spike, th, Label::NotB) == Label::B &&
                    hysteretic_label(spike, th, Label::B) == Label::B;
  return {hits == 6 && fold, std::to_string(hits) + "/6 cases match"};
}

Verdict reverse_protocol(std::uint64_t seed) {
  AtomCavityKet mid(4);
  mid.at(kG, 0) = M_SQRT1_2;
  mid.at(kD, 0) = M_SQRT1_2;
  AtomCavityKet ideal = mid;
  apply_gd_rotation(ideal, M_PI / 2, M_PI / 2);
  const double ideal_err = std::abs(ideal.population(kG) - 1.0);

  const SystemParams p = simulation_params();
  const double dt_catch = 15 * p.t_int;
  RunOptions o;
  o.seed = seed;
  const ReverseReport r = run_reverse_pulses(
      p, catch_protocol(dt_catch, 0.0),
      {Pulse{M_PI / 2, M_PI / 2}, Pulse{M_PI / 2, 3 * M_PI / 2}}, 250, o, true);
  const ReverseOutcome& g = r.conditioned[0];
  const ReverseOutcome& d = r.conditioned[1];
  const ReverseOutcome& ctl = r.control[0];
  const bool ok = ideal_err < 1e-12 && g.p_g >= 0.75 && g.p_g <= 0.90 && d.p_d >= 0.75 &&
                  d.p_d <= 0.90 && std::abs(g.p_g - ctl.p_g) >= 0.15;
  std::ostringstream s;
  s << "ideal |p_g - 1| = " << fmt("%.1e", ideal_err) << "; at dt_catch = "
    << fmt("%.2f", dt_catch) << " us p_g = " << fmt("%.3f", g.p_g) << " +- "
    << fmt("%.3f", g.p_g_stderr) << ", p_d(3pi/2) = " << fmt("%.3f", d.p_d) << " +- "
    << fmt("%.3f", d.p_d_stderr) << " ([0.75, 0.90]); control p_g = " << fmt("%.3f", ctl.p_g)
    << " over " << ctl.n_trials << " picks (separation >= 0.15)";
  return {ok, s.str()};
}

Verdict determinism(std::uint64_t seed) {
  const SystemParams p = simulation_params();
  const ProtocolConfig c = catch_protocol(5.2, 0.0);
  RunOptions o;
  o.seed = seed;
  o.units_per_chunk = 50;
  o.workers = 2;
  const std::string first = tomogram_csv(run_catch(p, c, 400, o).tomogram);
  const std::string again = tomogram_csv(run_catch(p, c, 400, o).tomogram);
  o.workers = 8;
  const ConditionalTomogram eight = run_catch(p, c, 400, o).tomogram;
  o.workers = 2;
  const ConditionalTomogram two = run_catch(p, c, 400, o).tomogram;
  double worst = 0.0;
  bool same_grid = two.grid == eight.grid;
  if (same_grid) {
    for (std::size_t i = 0; i < two.grid.size(); ++i) {
      worst = std::max({worst, std::abs(two.z[i] - eight.z[i]), std::abs(two.x[i] - eight.x[i]),
                        std::abs(two.y[i] - eight.y[i])});
    }
  }
  const bool ok = first == again && same_grid && worst <= 1e-9;
  return {ok, std::string("repeat byte-identical: ") + (first == again ? "yes" : "no") +
                  "; 2 vs 8 workers max diff " + fmt("%.2e", worst)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"jumpflight acceptance checks"};
  int criterion = 0;
  std::uint64_t seed = 20250101;
  app.add_option("--criterion", criterion, "criterion number, 1-11")->required();
  app.add_option("--seed", seed, "master seed");
  CLI11_PARSE(app, argc, argv);

  const std::map<int, std::function<Verdict(std::uint64_t)>> checks{
      {1, mid_flight_time},  {2, counting_model},    {3, trajectory_oracle},
      {4, noise_statistics}, {5, free_run_rates},    {6, catch_tomogram},
      {7, dark_off_tomogram}, {8, snr_chain},        {9, truth_table},
      {10, reverse_protocol}, {11, determinism}};
  const auto it = checks.find(criterion);
  if (it == checks.end()) {
    std::fprintf(stderr, "unknown criterion %d\n", criterion);
    return 2;
  }
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = it->second(seed);
  } catch (const std::exception& e) {
    v = {false, std::string("error: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("criterion %d: %s  %s  [%.1f s]\n", criterion, v.pass ? "PASS" : "FAIL",
              v.detail.c_str(), secs);
  return v.pass ? 0 : 1;
}
