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

#include "jumpflight/record.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace jumpflight {

FilterState filter_quadratures(FilterState s, cplx d_zeta, const SystemParams& p, double dt) {
  const double decay = std::exp(-0.5 * p.kappa_filter * dt);
  const double gain = std::sqrt(2.0 / (p.eta * p.kappa)) / dt;
  s.i_rec = decay * s.i_rec + (1.0 - decay) * gain * d_zeta.real();
  s.q_rec = decay * s.q_rec + (1.0 - decay) * gain * d_zeta.imag();
  return s;
}

cplx pointer_mean(cplx alpha) { return std::sqrt(2.0) * alpha; }

cplx integrated_signal(const SystemParams& p, cplx alpha) {
  return std::sqrt(p.eta * p.kappa) * p.t_int * alpha;
}

FrameIntegrator::FrameIntegrator(const SystemParams& p, double dt)
    : steps_per_frame_(static_cast<int>(std::lround(p.t_int / dt))) {
  if (steps_per_frame_ < 1) throw std::invalid_argument("t_int shorter than one step");
}

std::optional<RecordFrame> FrameIntegrator::push(double t, const FilterState& s) {
  sum_i_ += s.i_rec;
  sum_q_ += s.q_rec;
  if (++count_ < steps_per_frame_) return std::nullopt;
  RecordFrame f;
  f.t = t;
  f.i_rec = sum_i_ / steps_per_frame_;
  f.q_rec = sum_q_ / steps_per_frame_;
  count_ = 0;
  sum_i_ = sum_q_ = 0.0;
  return f;
}

std::vector<RecordFrame> integrate_frames(const std::vector<cplx>& d_zeta, const SystemParams& p,
                                          double dt) {
  FrameIntegrator integ(p, dt);
  FilterState s;
  std::vector<RecordFrame> out;
  for (std::size_t i = 0; i < d_zeta.size(); ++i) {
    s = filter_quadratures(s, d_zeta[i], p, dt);
    if (auto f = integ.push(static_cast<double>(i + 1) * dt, s)) out.push_back(*f);
  }
  return out;
}

Label hysteretic_label(const RecordFrame& f, const Thresholds& th, Label prev) {
  if (f.q_rec >= th.q_b || f.i_rec > th.i_b) return Label::B;
  if (f.i_rec < th.i_bbar) return Label::NotB;
  return prev;
}

void label_frames(std::vector<RecordFrame>& frames, const Thresholds& th, Label initial) {
  Label prev = initial;
  for (auto& f : frames) {
    f.label = hysteretic_label(f, th, prev);
    prev = f.label;
  }
}

std::vector<ClickEvent> detect_clicks(const std::vector<RecordFrame>& frames, Label initial) {
  std::vector<ClickEvent> out;
  Label prev = initial;
  for (const auto& f : frames) {
    if (f.label != prev) {
      out.push_back({f.t, f.label == Label::NotB ? ClickKind::Deexcitation : ClickKind::Excitation});
    }
    prev = f.label;
  }
  return out;
}

std::vector<Label> labels_from_clicks(const std::vector<ClickEvent>& clicks,
                                      const std::vector<double>& frame_times, Label initial) {
  std::vector<Label> out;
  out.reserve(frame_times.size());
  Label cur = initial;
  std::size_t next = 0;
  for (double t : frame_times) {
    while (next < clicks.size() && clicks[next].t <= t) {
      cur = clicks[next].kind == ClickKind::Deexcitation ? Label::NotB : Label::B;
      ++next;
    }
    out.push_back(cur);
  }
  return out;
}

std::vector<double> dwell_times(const std::vector<ClickEvent>& clicks, DwellKind which) {
  const ClickKind opens = which == DwellKind::NotB ? ClickKind::Deexcitation : ClickKind::Excitation;
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < clicks.size(); ++i) {
    if (clicks[i].kind == opens && clicks[i + 1].kind != opens) {
      out.push_back(clicks[i + 1].t - clicks[i].t);
    }
  }
  return out;
}

WaitingTimeHistogram dwell_histogram(const std::vector<double>& dwells, double bin_width,
                                     DwellKind which, double max_time) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin width must be positive");
  WaitingTimeHistogram h;
  h.which = which;
  double top = max_time;
  if (top <= 0.0) {
    top = bin_width;
    for (double d : dwells) top = std::max(top, d);
  }
  const int bins = std::max(1, static_cast<int>(std::ceil(top / bin_width + 1e-9)));
  h.counts.assign(bins, 0);
  for (int b = 0; b <= bins; ++b) h.bin_edges.push_back(b * bin_width);
  for (double d : dwells) {
    // Dwells land on multiples of the frame time; nudge them inside a bin.
    const int b = static_cast<int>(std::floor(d / bin_width + 1e-9));
    if (b >= 0 && b < bins) ++h.counts[b];
  }
  return h;
}

SystemParams pinned_params(const SystemParams& p) {
  SystemParams q = p;
  q.omega_b0 = q.omega_b1 = q.omega_dg = 0.0;
  q.gamma_b = q.gamma_d = q.gamma_b_phi = q.gamma_d_phi = 0.0;
  q.nth_b = q.nth_d = 0.0;
  q.gamma_fg = q.gamma_fd = q.gamma_gf = q.gamma_df = 0.0;
  return q;
}

std::vector<RecordFrame> pinned_record(const SystemParams& p, Level level, int frames,
                                       RngStream rng, SseOptions opts, int settle_frames) {
  const SystemParams q = pinned_params(p);
  SseEngine engine(q, opts);
  auto ket = AtomCavityKet::product(level, coherent_state(0.0, q.n_fock));
  FrameIntegrator integ(q, opts.dt);
  FilterState s;
  std::vector<RecordFrame> out;
  int seen = 0;
  long step = 0;
  while (static_cast<int>(out.size()) < frames) {
    const double t = static_cast<double>(step) * opts.dt;
    const auto st = engine.step(ket, t, rng);
    ++step;
    s = filter_quadratures(s, st.d_zeta, q, opts.dt);
    if (auto f = integ.push(static_cast<double>(step) * opts.dt, s)) {
      if (seen++ >= settle_frames) out.push_back(*f);
    }
  }
  return out;
}

namespace {

PointerStats stats(const std::vector<RecordFrame>& frames) {
  PointerStats s;
  const double n = static_cast<double>(frames.size());
  for (const auto& f : frames) {
    s.mean_i += f.i_rec;
    s.mean_q += f.q_rec;
  }
  s.mean_i /= n;
  s.mean_q /= n;
  for (const auto& f : frames) {
    s.sigma_i += (f.i_rec - s.mean_i) * (f.i_rec - s.mean_i);
    s.sigma_q += (f.q_rec - s.mean_q) * (f.q_rec - s.mean_q);
  }
  s.sigma_i = std::sqrt(s.sigma_i / (n - 1.0));
  s.sigma_q = std::sqrt(s.sigma_q / (n - 1.0));
  return s;
}

}  // namespace

Calibration calibrate_thresholds(const SystemParams& p, std::uint64_t seed, int frames,
                                 SseOptions opts) {
  if (frames < 2) throw std::invalid_argument("calibration needs at least two frames");
  Calibration c;
  c.bright = stats(pinned_record(p, kB, frames, RngStream(seed, 0), opts));
  c.dark = stats(pinned_record(p, kG, frames, RngStream(seed, 1), opts));
  c.thresholds.i_b = c.bright.mean_i - 1.5 * c.bright.sigma_i;
  c.thresholds.i_bbar = c.dark.mean_i + 1.5 * c.dark.sigma_i;
  c.thresholds.q_b =
      std::max(c.bright.mean_q, c.dark.mean_q) + 3.0 * std::max(c.bright.sigma_q, c.dark.sigma_q);
  if (c.thresholds.i_bbar > c.thresholds.i_b) {
    throw std::runtime_error("pointer distributions overlap: calibrated i_bbar exceeds i_b");
  }
  return c;
}

}  // namespace jumpflight
