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
#include <random>
#include <vector>

#include "doctest.h"
#include "jumpflight/analytic.hpp"
#include "jumpflight/model.hpp"
#include "jumpflight/params.hpp"
#include "jumpflight/record.hpp"

using namespace jumpflight;

namespace {

RecordFrame frame(double i, double q) {
  RecordFrame f;
  f.i_rec = i;
  f.q_rec = q;
  return f;
}

std::vector<RecordFrame> frames_from(const std::vector<Label>& labels) {
  std::vector<RecordFrame> out;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    RecordFrame f;
    f.t = 0.26 * (k + 1);
    f.label = labels[k];
    out.push_back(f);
  }
  return out;
}

const Thresholds kTh{2.0, 1.5, 2.1};

}  // namespace

TEST_SUITE("record-pipeline") {

TEST_CASE("filter relaxes at half the filter bandwidth without input") {
  const SystemParams p = simulation_params();
  FilterState s;
  s.i_rec = 1.0;
  s.q_rec = -2.0;
  const double dt = 0.001;
  for (int k = 0; k < 10; ++k) s = filter_quadratures(s, {}, p, dt);
  const double decay = std::exp(-0.5 * p.kappa_filter * 10 * dt);
  CHECK(s.i_rec == doctest::Approx(decay).epsilon(1e-12));
  CHECK(s.q_rec == doctest::Approx(-2.0 * decay).epsilon(1e-12));
}

TEST_CASE("filter fixed point for a constant field is the pointer") {
  const SystemParams p = simulation_params();
  const cplx alpha(1.3, -0.4);
  const double dt = 0.001;
  const cplx dz = std::sqrt(p.eta * p.kappa) * alpha * dt;
  FilterState s;
  for (int k = 0; k < 5000; ++k) s = filter_quadratures(s, dz, p, dt);
  CHECK(s.i_rec == doctest::Approx(pointer_mean(alpha).real()).epsilon(1e-12));
  CHECK(s.q_rec == doctest::Approx(pointer_mean(alpha).imag()).epsilon(1e-12));
  CHECK(pointer_mean(alpha).real() == doctest::Approx(std::sqrt(2.0) * 1.3));
}

TEST_CASE("white-noise input gives the Ornstein-Uhlenbeck variance") {
  const SystemParams p = simulation_params();
  const double dt = 0.001;
  RngStream rng(8, 0);
  FilterState s;
  double sum = 0, sum2 = 0;
  const int n = 1000000;
  for (int k = 0; k < 1000; ++k) s = filter_quadratures(s, rng.wiener(dt), p, dt);
  for (int k = 0; k < n; ++k) {
    s = filter_quadratures(s, rng.wiener(dt), p, dt);
    sum += s.i_rec;
    sum2 += s.i_rec * s.i_rec;
  }
  const double var = sum2 / n - (sum / n) * (sum / n);
  const double d = std::exp(-0.5 * p.kappa_filter * dt);
  const double expect = (1.0 - d) / (1.0 + d) / (p.eta * p.kappa * dt);
  CHECK(std::abs(var - expect) / expect < 0.05);
}

TEST_CASE("one frame per integration window") {
  const SystemParams p = simulation_params();
  const std::vector<cplx> zeros(2600);
  const auto frames = integrate_frames(zeros, p, 0.001);
  REQUIRE(frames.size() == 10);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    CHECK(frames[k].t == doctest::Approx(0.26 * (k + 1)));
    CHECK(frames[k].i_rec == 0.0);
  }
  CHECK(integrate_frames(std::vector<cplx>(259), p, 0.001).empty());
}

TEST_CASE("noiseless pinned records sit on the pointer means") {
  const SystemParams p = simulation_params();
  SseOptions o;
  o.noise = false;
  for (Level level : {kB, kG}) {
    const auto frames = pinned_record(p, level, 20, RngStream(1, 0), o);
    const cplx target = pointer_mean(steady_field(pinned_params(p), level));
    for (const auto& f : frames) {
      CHECK(f.i_rec == doctest::Approx(target.real()).epsilon(1e-3));
      CHECK(f.q_rec == doctest::Approx(target.imag()).scale(1.0).epsilon(1e-3));
    }
  }
  const cplx b = pointer_mean(steady_field(p, kB));
  const cplx g = pointer_mean(steady_field(p, kG));
  CHECK(b.real() > g.real() + 1.0);
  const cplx s = integrated_signal(p, steady_field(p, kB));
  CHECK(std::abs(s) == doctest::Approx(std::sqrt(p.eta * p.kappa) * p.t_int *
                                       std::abs(steady_field(p, kB))));
}

TEST_CASE("hysteresis truth table") {
  const double e = 1e-6;
  for (Label prev : {Label::B, Label::NotB}) {
    CHECK(hysteretic_label(frame(kTh.i_b + e, 0.0), kTh, prev) == Label::B);
    CHECK(hysteretic_label(frame(0.0, kTh.q_b), kTh, prev) == Label::B);
    CHECK(hysteretic_label(frame(kTh.i_bbar - e, kTh.q_b - e), kTh, prev) == Label::NotB);
    CHECK(hysteretic_label(frame(0.5 * (kTh.i_b + kTh.i_bbar), 0.0), kTh, prev) == prev);
    CHECK(hysteretic_label(frame(kTh.i_b, 0.0), kTh, prev) == prev);
    CHECK(hysteretic_label(frame(kTh.i_bbar, 0.0), kTh, prev) == prev);
  }
}

TEST_CASE("hysteresis is idempotent") {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int k = 0; k < 10000; ++k) {
    const RecordFrame f = frame(u(g), u(g));
    for (Label prev : {Label::B, Label::NotB}) {
      const Label once = hysteretic_label(f, kTh, prev);
      CHECK(hysteretic_label(f, kTh, once) == once);
    }
  }
}

TEST_CASE("clicks from label transitions") {
  CHECK(detect_clicks(frames_from({Label::B, Label::B, Label::B})).empty());
  CHECK(detect_clicks(frames_from({Label::NotB, Label::NotB}), Label::NotB).empty());
  const auto c = detect_clicks(frames_from({Label::B, Label::NotB, Label::NotB, Label::B}));
  REQUIRE(c.size() == 2);
  CHECK(c[0].kind == ClickKind::Deexcitation);
  CHECK(c[0].t == doctest::Approx(0.52));
  CHECK(c[1].kind == ClickKind::Excitation);
  CHECK(c[1].t == doctest::Approx(1.04));
}

TEST_CASE("labels and clicks reconstruct each other") {
  std::mt19937_64 g(21);
  std::bernoulli_distribution flip(0.2);
  for (int trial = 0; trial < 200; ++trial) {
    const Label initial = flip(g) ? Label::NotB : Label::B;
    std::vector<Label> labels;
    Label cur = initial;
    for (int k = 0; k < 300; ++k) {
      if (flip(g)) cur = cur == Label::B ? Label::NotB : Label::B;
      labels.push_back(cur);
    }
    const auto frames = frames_from(labels);
    std::vector<double> times;
    for (const auto& f : frames) times.push_back(f.t);
    const auto clicks = detect_clicks(frames, initial);
    for (std::size_t k = 1; k < clicks.size(); ++k) {
      CHECK(clicks[k].t > clicks[k - 1].t);
      CHECK(clicks[k].kind != clicks[k - 1].kind);
    }
    CHECK(labels_from_clicks(clicks, times, initial) == labels);
  }
}

TEST_CASE("dwell definitions") {
  const std::vector<ClickEvent> clicks{{1.0, ClickKind::Deexcitation},
                                       {3.0, ClickKind::Excitation},
                                       {7.0, ClickKind::Deexcitation},
                                       {8.0, ClickKind::Excitation},
                                       {8.5, ClickKind::Deexcitation}};
  const auto nb = dwell_times(clicks, DwellKind::NotB);
  const auto b = dwell_times(clicks, DwellKind::B);
  REQUIRE(nb.size() == 2);
  CHECK(nb[0] == doctest::Approx(2.0));
  CHECK(nb[1] == doctest::Approx(1.0));
  REQUIRE(b.size() == 2);
  CHECK(b[0] == doctest::Approx(4.0));
  CHECK(b[1] == doctest::Approx(0.5));
  // Inter-click time minus the preceding B dwell.
  CHECK(nb[1] == doctest::Approx((clicks[3].t - clicks[1].t) - b[0]));
}

TEST_CASE("fixed alternation fills a single histogram bin") {
  std::vector<ClickEvent> clicks;
  double t = 0.26;
  for (int k = 0; k < 50; ++k) {
    clicks.push_back({t, ClickKind::Deexcitation});
    t += 1.04;
    clicks.push_back({t, ClickKind::Excitation});
    t += 2.6;
  }
  const auto nb = dwell_times(clicks, DwellKind::NotB);
  const auto h = dwell_histogram(nb, 0.26, DwellKind::NotB, 5.2);
  long total = 0;
  for (long c : h.counts) total += c;
  CHECK(total == static_cast<long>(nb.size()));
  CHECK(h.counts[4] == 50);
  CHECK(h.bin_edges.size() == h.counts.size() + 1);
  const auto hb = dwell_histogram(dwell_times(clicks, DwellKind::B), 0.26, DwellKind::B);
  CHECK(hb.counts.back() == 49);
  CHECK_THROWS_AS(dwell_histogram(nb, 0.0, DwellKind::NotB), std::invalid_argument);
}

TEST_CASE("calibrated thresholds classify the pointer means with margin") {
  const SystemParams p = simulation_params();
  const Calibration c = calibrate_thresholds(p, 77);
  const Thresholds& th = c.thresholds;
  CHECK(th.i_bbar <= th.i_b);
  CHECK(c.bright.mean_i - th.i_b == doctest::Approx(1.5 * c.bright.sigma_i));
  CHECK(th.i_bbar - c.dark.mean_i == doctest::Approx(1.5 * c.dark.sigma_i));
  CHECK(th.q_b - std::max(c.bright.mean_q, c.dark.mean_q) >=
        3.0 * std::max(c.bright.sigma_q, c.dark.sigma_q) - 1e-12);
  const cplx b = pointer_mean(steady_field(pinned_params(p), kB));
  const cplx g = pointer_mean(steady_field(pinned_params(p), kG));
  CHECK(hysteretic_label(frame(b.real(), b.imag()), th, Label::NotB) == Label::B);
  CHECK(hysteretic_label(frame(g.real(), g.imag()), th, Label::B) == Label::NotB);
  CHECK(std::abs(c.bright.mean_i - b.real()) < 0.1);
  CHECK(std::abs(c.dark.mean_i - g.real()) < 0.1);
}

}  // TEST_SUITE
