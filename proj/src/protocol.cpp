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

#include "jumpflight/protocol.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace jumpflight {

MonitoredTrajectory::MonitoredTrajectory(const SystemParams& p, const Thresholds& th,
                                         RngStream rng, SseOptions opts)
    : p_(p),
      th_(th),
      rng_(rng),
      engine_(p, opts),
      dt_(opts.dt),
      ket_(p.n_fock),
      integ_(p, opts.dt) {
  prepare_bright();
}

void MonitoredTrajectory::prepare_bright() {
  const cplx alpha = steady_field(p_, kB);
  ket_ = AtomCavityKet::product(kB, coherent_state(alpha, p_.n_fock));
  const cplx ptr = pointer_mean(alpha);
  filter_.i_rec = ptr.real();
  filter_.q_rec = ptr.imag();
  filter_.last_label = Label::B;
  filter_.cnt = 0;
}

RecordFrame MonitoredTrajectory::next_frame() {
  for (;;) {
    const auto st = engine_.step(ket_, time(), rng_);
    ++step_;
    filter_ = filter_quadratures(filter_, st.d_zeta, p_, dt_);
    if (auto f = integ_.push(time(), filter_)) {
      f->label = hysteretic_label(*f, th_, filter_.last_label);
      filter_.last_label = f->label;
      filter_.cnt = f->label == Label::B ? 0 : filter_.cnt + 1;
      return *f;
    }
  }
}

TomogramAccumulator::TomogramAccumulator(int bins, double spacing)
    : spacing_(spacing), z_(bins), x_(bins), y_(bins), pbb_(bins), count_(bins) {}

void TomogramAccumulator::add(int bin, const ConditionalState& s, double weight) {
  z_[bin].add(weight * s.bloch.z);
  x_[bin].add(weight * s.bloch.x);
  y_[bin].add(weight * s.bloch.y);
  pbb_[bin].add(weight * s.p_bb);
  count_[bin].add(weight);
}

void TomogramAccumulator::merge(const TomogramAccumulator& o) {
  if (o.bins() != bins()) throw std::invalid_argument("tomogram grids differ");
  for (int b = 0; b < bins(); ++b) {
    z_[b].merge(o.z_[b]);
    x_[b].merge(o.x_[b]);
    y_[b].merge(o.y_[b]);
    pbb_[b].merge(o.pbb_[b]);
    count_[b].merge(o.count_[b]);
  }
}

ConditionalTomogram TomogramAccumulator::finalize() const {
  ConditionalTomogram t;
  for (int b = 0; b < bins(); ++b) {
    const double n = count_[b].value();
    const double denom = n - pbb_[b].value();
    if (!(n > 0.0) || !(denom > 0.0)) continue;
    t.grid.push_back(b * spacing_);
    t.z.push_back(z_[b].value() / denom);
    t.x.push_back(x_[b].value() / denom);
    t.y.push_back(y_[b].value() / denom);
    t.counts.push_back(n);
    t.p_bb_sum.push_back(pbb_[b].value());
  }
  return t;
}

Thresholds resolve_thresholds(const SystemParams& p, const ProtocolConfig& protocol,
                              const RunOptions& opts) {
  if (opts.thresholds) return *opts.thresholds;
  if (protocol.thresholds_set) return protocol.thresholds;
  return calibrate_thresholds(p, splitmix64(opts.seed ^ 0xC0FFEE5EEDULL), 400, opts.sse).thresholds;
}

namespace {

int frames_for(double span, double t_int) { return static_cast<int>(std::lround(span / t_int)); }

// Hooks of the shared catch loop. Any of them may be empty.
struct LoopHooks {
  std::function<void(double t_click)> on_click;
  std::function<void(int k, const AtomCavityKet& ket)> on_point;
  std::function<void(SampleEnd)> on_end;
  std::function<void(const AtomCavityKet& ket)> on_catch;
  std::function<void(const RecordFrame&, const AtomCavityKet& ket)> on_frame;
  std::function<bool()> done;
};

// Click-aligned feedback loop. n_on: frames with the dark drive on;
// horizon: frame index at which the realization restarts from B.
double feedback_loop(MonitoredTrajectory& m, int n_on, int horizon, double budget_us,
                     const LoopHooks& h) {
  const DriveState all_on{};
  DriveState dark_off = all_on;
  dark_off.dg = false;
  m.set_drives(all_on);
  Label prev = Label::B;
  bool in_sample = false;
  int k = 0;
  while (!h.done()) {
    if (m.time() > budget_us) break;
    const RecordFrame f = m.next_frame();
    if (h.on_frame) h.on_frame(f, m.ket());
    Label now = f.label;
    if (f.label == Label::B) {
      if (in_sample && h.on_end) h.on_end(SampleEnd::ReturnToB);
      in_sample = false;
      if (!(m.drives() == all_on)) m.set_drives(all_on);
    } else {
      if (!in_sample && prev == Label::B) {
        in_sample = true;
        k = 0;
        if (h.on_click) h.on_click(f.t);
      } else if (in_sample) {
        ++k;
      }
      if (in_sample) {
        if (h.on_point) h.on_point(k, m.ket());
        if (k == horizon && h.on_catch) h.on_catch(m.ket());
        if (k >= horizon) {
          if (h.on_end) h.on_end(SampleEnd::ReachedLimit);
          in_sample = false;
          m.prepare_bright();
          m.set_drives(all_on);
          now = Label::B;
        } else if (k >= n_on) {
          m.set_drives(dark_off);
        }
      }
    }
    prev = now;
  }
  return m.time();
}

std::vector<long> partition(long total, int per_chunk) {
  if (per_chunk < 1) throw std::invalid_argument("units_per_chunk must be positive");
  std::vector<long> q;
  for (long left = total; left > 0; left -= per_chunk) q.push_back(std::min<long>(left, per_chunk));
  return q;
}

[[noreturn]] void budget_error(const char* what, long got, long want, double budget) {
  std::ostringstream msg;
  msg << "collected " << got << " of " << want << " " << what << " within the " << budget
      << " us budget";
  throw std::runtime_error(msg.str());
}

struct Score {
  double g, d, b;
};

// Outcome sums. Success probabilities use the tomogram normalization, that
// is sums over (n - sum p_b), so trials caught while the atom is already back
// in B but not yet labeled are discounted the same way in both places.
struct Moments {
  CompensatedSum g, g2, d, d2, b, b2, gb, db;
  long n = 0;
  void add(const Score& s) {
    g.add(s.g), g2.add(s.g * s.g), d.add(s.d), d2.add(s.d * s.d);
    b.add(s.b), b2.add(s.b * s.b), gb.add(s.g * s.b), db.add(s.d * s.b);
    ++n;
  }
  void merge(const Moments& o) {
    for (auto [x, y] : {std::pair{&g, &o.g}, {&g2, &o.g2}, {&d, &o.d}, {&d2, &o.d2}, {&b, &o.b},
                        {&b2, &o.b2}, {&gb, &o.gb}, {&db, &o.db}}) {
      x->merge(*y);
    }
    n += o.n;
  }
  ReverseOutcome outcome(double dt_catch, const Pulse& pulse) const {
    ReverseOutcome r;
    r.delta_t_catch = dt_catch;
    r.theta_i = pulse.theta;
    r.phi_i = pulse.phi;
    r.n_trials = n;
    if (n == 0) return r;
    const double nn = static_cast<double>(n);
    const double w = 1.0 - b.value() / nn;  // mean not-B weight
    r.p_g_raw = g.value() / nn;
    r.p_d_raw = d.value() / nn;
    r.p_b = b.value() / nn;
    if (!(w > 0.0)) return r;
    r.p_g = r.p_g_raw / w;
    r.p_d = r.p_d_raw / w;
    if (n > 1) {
      // Ratio-estimator spread: residual x - p (1 - b).
      const double ew2 = 1.0 - 2.0 * b.value() / nn + b2.value() / nn;
      auto se = [&](double p, const CompensatedSum& x, const CompensatedSum& x2,
                    const CompensatedSum& xb) {
        const double exw = (x.value() - xb.value()) / nn;
        const double m2 = x2.value() / nn + p * p * ew2 - 2.0 * p * exw;
        return std::sqrt(std::max(0.0, m2) / (nn - 1.0)) / w;
      };
      r.p_g_stderr = se(r.p_g, g, g2, gb);
      r.p_d_stderr = se(r.p_d, d, d2, db);
    }
    return r;
  }
};

Score score(const AtomCavityKet& ket, const Pulse& pulse) {
  AtomCavityKet copy = ket;
  apply_gd_rotation(copy, pulse.theta, pulse.phi);
  const double n = copy.norm2();
  return {copy.population(kG) / n, copy.population(kD) / n, copy.population(kB) / n};
}

}  // namespace

CatchResult run_catch(const SystemParams& p, const ProtocolConfig& protocol, long n_events,
                      const RunOptions& opts) {
  check_protocol(protocol);
  if (n_events < 1) throw std::invalid_argument("n_events must be at least 1");
  const Thresholds th = resolve_thresholds(p, protocol, opts);
  const int n_on = frames_for(protocol.dt_on, p.t_int);
  const int horizon = frames_for(protocol.dt_catch(), p.t_int);
  const auto quotas = partition(n_events, opts.units_per_chunk);

  struct Chunk {
    TomogramAccumulator acc;
    long events = 0;
    double simulated = 0.0;
    std::vector<CatchSample> samples;
  };
  auto chunks = parallel_map<Chunk>(static_cast<int>(quotas.size()), opts.workers, [&](int c) {
    Chunk out;
    out.acc = TomogramAccumulator(horizon + 1, p.t_int);
    MonitoredTrajectory m(p, th, RngStream(opts.seed, static_cast<std::uint64_t>(c)), opts.sse);
    const bool keep = opts.keep_samples && c == 0;
    long ended = 0;
    LoopHooks h;
    h.on_click = [&](double t) {
      ++out.events;
      if (keep) out.samples.push_back(CatchSample{t, {}, SampleEnd::ReturnToB});
    };
    h.on_point = [&](int k, const AtomCavityKet& ket) {
      const ConditionalState s = conditional_bloch(ket);
      out.acc.add(k, s);
      if (keep) out.samples.back().series.push_back({k * p.t_int, s});
    };
    h.on_end = [&](SampleEnd e) {
      ++ended;
      if (keep) out.samples.back().terminated_by = e;
    };
    h.done = [&] { return ended >= quotas[c]; };
    out.simulated = feedback_loop(m, n_on, horizon, opts.chunk_budget_us, h);
    if (ended < quotas[c]) budget_error("catch events", ended, quotas[c], opts.chunk_budget_us);
    return out;
  });

  CatchResult r;
  TomogramAccumulator total(horizon + 1, p.t_int);
  for (auto& c : chunks) {
    total.merge(c.acc);
    r.events += c.events;
    r.simulated_us += c.simulated;
    if (!c.samples.empty()) r.samples = std::move(c.samples);
  }
  r.tomogram = total.finalize();
  return r;
}

ReverseReport run_reverse_pulses(const SystemParams& p, const ProtocolConfig& protocol,
                                 const std::vector<Pulse>& pulses, long n_trials,
                                 const RunOptions& opts, bool with_control) {
  check_protocol(protocol);
  if (n_trials < 1) throw std::invalid_argument("n_trials must be at least 1");
  if (pulses.empty()) throw std::invalid_argument("no pulses to score");
  const Thresholds th = resolve_thresholds(p, protocol, opts);
  const int n_on = frames_for(protocol.dt_on, p.t_int);
  const int horizon = frames_for(protocol.dt_catch(), p.t_int);
  const auto quotas = partition(n_trials, opts.units_per_chunk);
  const std::size_t np = pulses.size();

  struct Chunk {
    std::vector<Moments> caught, control;
    double simulated = 0.0;
  };
  auto chunks = parallel_map<Chunk>(static_cast<int>(quotas.size()), opts.workers, [&](int c) {
    Chunk out;
    out.caught.resize(np);
    out.control.resize(np);
    MonitoredTrajectory m(p, th, RngStream(opts.seed, static_cast<std::uint64_t>(c)), opts.sse);
    // Control picks come from their own stream so they never perturb the run.
    RngStream picker(splitmix64(opts.seed ^ 0x5A5A5A5AULL), static_cast<std::uint64_t>(c));
    LoopHooks h;
    h.on_catch = [&](const AtomCavityKet& ket) {
      for (std::size_t i = 0; i < np; ++i) {
        out.caught[i].add(score(ket, pulses[i]));
      }
    };
    if (with_control) {
      h.on_frame = [&](const RecordFrame&, const AtomCavityKet& ket) {
        if (picker.uniform() >= opts.control_probability) return;
        for (std::size_t i = 0; i < np; ++i) {
          out.control[i].add(score(ket, pulses[i]));
        }
      };
    }
    h.done = [&] { return out.caught[0].n >= quotas[c]; };
    out.simulated = feedback_loop(m, n_on, horizon, opts.chunk_budget_us, h);
    if (out.caught[0].n < quotas[c]) {
      budget_error("catches", out.caught[0].n, quotas[c], opts.chunk_budget_us);
    }
    return out;
  });

  std::vector<Moments> caught(np), control(np);
  ReverseReport r;
  for (const auto& c : chunks) {
    for (std::size_t i = 0; i < np; ++i) {
      caught[i].merge(c.caught[i]);
      control[i].merge(c.control[i]);
    }
    r.simulated_us += c.simulated;
  }
  const double tc = horizon * p.t_int;
  for (std::size_t i = 0; i < np; ++i) {
    r.conditioned.push_back(caught[i].outcome(tc, pulses[i]));
    if (with_control) r.control.push_back(control[i].outcome(tc, pulses[i]));
  }
  return r;
}

ReverseOutcome run_reverse(const SystemParams& p, const ProtocolConfig& protocol, long n_trials,
                           const RunOptions& opts) {
  const Pulse pulse{protocol.theta_i, protocol.phi_i};
  return run_reverse_pulses(p, protocol, {pulse}, n_trials, opts).conditioned.front();
}

ReverseOutcome run_control_random_intervention(const SystemParams& p,
                                               const ProtocolConfig& protocol, long n_trials,
                                               const RunOptions& opts) {
  check_protocol(protocol);
  if (n_trials < 1) throw std::invalid_argument("n_trials must be at least 1");
  if (!(opts.control_probability > 0.0)) throw std::invalid_argument("control probability must be positive");
  const Thresholds th = resolve_thresholds(p, protocol, opts);
  const int n_on = frames_for(protocol.dt_on, p.t_int);
  const int horizon = frames_for(protocol.dt_catch(), p.t_int);
  const auto quotas = partition(n_trials, opts.units_per_chunk);
  const Pulse pulse{protocol.theta_i, protocol.phi_i};

  struct Chunk {
    Moments m;
    double simulated = 0.0;
  };
  auto chunks = parallel_map<Chunk>(static_cast<int>(quotas.size()), opts.workers, [&](int c) {
    Chunk out;
    MonitoredTrajectory m(p, th, RngStream(opts.seed, static_cast<std::uint64_t>(c)), opts.sse);
    RngStream picker(splitmix64(opts.seed ^ 0x5A5A5A5AULL), static_cast<std::uint64_t>(c));
    LoopHooks h;
    h.on_frame = [&](const RecordFrame&, const AtomCavityKet& ket) {
      if (picker.uniform() >= opts.control_probability) return;
      out.m.add(score(ket, pulse));
    };
    h.done = [&] { return out.m.n >= quotas[c]; };
    out.simulated = feedback_loop(m, n_on, horizon, opts.chunk_budget_us, h);
    if (out.m.n < quotas[c]) budget_error("control trials", out.m.n, quotas[c], opts.chunk_budget_us);
    return out;
  });
  Moments total;
  for (const auto& c : chunks) total.merge(c.m);
  return total.outcome(horizon * p.t_int, pulse);
}

FreeRunResult run_free(const SystemParams& p, double duration, const RunOptions& opts) {
  FreeRunResult r;
  r.duration = duration;
  r.not_b_histogram.which = DwellKind::NotB;
  r.b_histogram.which = DwellKind::B;
  if (!(duration > 0.0)) return r;
  const Thresholds th = resolve_thresholds(p, ProtocolConfig{}, opts);
  MonitoredTrajectory m(p, th, RngStream(opts.seed, 0), opts.sse);
  const long n_frames = std::lround(duration / p.t_int);
  r.frames.reserve(n_frames);
  bool dark = false;
  for (long i = 0; i < n_frames; ++i) {
    r.frames.push_back(m.next_frame());
    const double pd = m.ket().population(kD);
    r.p_d_truth.push_back(pd);
    if (!dark && pd > 0.9) {
      dark = true;
      ++r.dark_jumps;
    } else if (dark && pd < 0.1) {
      dark = false;
    }
  }
  r.clicks = detect_clicks(r.frames, Label::B);
  r.not_b_dwells = dwell_times(r.clicks, DwellKind::NotB);
  r.b_dwells = dwell_times(r.clicks, DwellKind::B);
  if (!r.not_b_dwells.empty()) r.not_b_histogram = dwell_histogram(r.not_b_dwells, p.t_int, DwellKind::NotB);
  if (!r.b_dwells.empty()) r.b_histogram = dwell_histogram(r.b_dwells, p.t_int, DwellKind::B);
  return r;
}

PopulationEnsemble ensemble_populations(const SystemParams& p, const AtomCavityKet& initial,
                                        const std::vector<double>& checkpoints, long n_traj,
                                        const RunOptions& opts) {
  if (n_traj < 1) throw std::invalid_argument("n_traj must be at least 1");
  const double dt = opts.sse.dt;
  std::vector<long> marks;
  for (double t : checkpoints) {
    const long k = std::lround(t / dt);
    if (k < 0 || (!marks.empty() && k < marks.back())) throw std::invalid_argument("checkpoints must ascend from 0");
    marks.push_back(k);
  }
  const std::size_t nc = marks.size();
  const auto quotas = partition(n_traj, opts.units_per_chunk);
  std::vector<long> first(quotas.size(), 0);
  for (std::size_t c = 1; c < quotas.size(); ++c) first[c] = first[c - 1] + quotas[c - 1];

  using Sums = std::vector<std::array<CompensatedSum, kLevels>>;
  auto chunks = parallel_map<Sums>(static_cast<int>(quotas.size()), opts.workers, [&](int c) {
    Sums sums(nc);
    SseEngine engine(p, opts.sse);
    for (long j = first[c]; j < first[c] + quotas[c]; ++j) {
      AtomCavityKet ket = initial;
      ket.normalize();
      RngStream rng(opts.seed, static_cast<std::uint64_t>(j));
      long step = 0;
      for (std::size_t i = 0; i < nc; ++i) {
        for (; step < marks[i]; ++step) engine.step(ket, step * dt, rng);
        const double n = ket.norm2();
        for (int lv = 0; lv < kLevels; ++lv) sums[i][lv].add(ket.population(lv) / n);
      }
    }
    return sums;
  });

  PopulationEnsemble out;
  out.n_traj = n_traj;
  Sums total(nc);
  for (const auto& s : chunks) {
    for (std::size_t i = 0; i < nc; ++i) {
      for (int lv = 0; lv < kLevels; ++lv) total[i][lv].merge(s[i][lv]);
    }
  }
  for (std::size_t i = 0; i < nc; ++i) {
    out.t.push_back(marks[i] * dt);
    std::array<double, kLevels> m{};
    for (int lv = 0; lv < kLevels; ++lv) m[lv] = total[i][lv].value() / double(n_traj);
    out.mean.push_back(m);
  }
  return out;
}

ConditionalTomogram counting_model_tomogram(const CountingRegime& r, int bins, double spacing,
                                            double dt) {
  TomogramAccumulator acc(bins, spacing);
  ThreeLevelAmplitudes a;
  for (int k = 0; k < bins; ++k) {
    if (k > 0) a = integrate_counting_ket(a, r, spacing, dt);
    const double n = a.norm2();
    ConditionalState s;
    s.bloch.z = (std::norm(a.c_d) - std::norm(a.c_g)) / n;
    const cplx rho_dg = a.c_d * std::conj(a.c_g);
    s.bloch.x = 2.0 * rho_dg.real() / n;
    s.bloch.y = 2.0 * rho_dg.imag() / n;
    s.p_bb = std::norm(a.c_b) / n;
    acc.add(k, s, n);
  }
  return acc.finalize();
}

}  // namespace jumpflight
