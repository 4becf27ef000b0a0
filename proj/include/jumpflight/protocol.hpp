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

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "jumpflight/analytic.hpp"
#include "jumpflight/parallel.hpp"
#include "jumpflight/record.hpp"
#include "jumpflight/sse.hpp"

namespace jumpflight {

// Trajectory engine, amplifier filter, frame integrator and hysteretic
// labeller fused into one frame-by-frame stepper.
class MonitoredTrajectory {
 public:
  MonitoredTrajectory(const SystemParams& p, const Thresholds& th, RngStream rng,
                      SseOptions opts = {});

  // Advances one frame and returns it labeled.
  RecordFrame next_frame();

  // Atom to |B> with the steady bright field, filter and label reset to B.
  void prepare_bright();

  void set_drives(DriveState d) { engine_.set_drives(d); }
  const DriveState& drives() const { return engine_.drives(); }
  const AtomCavityKet& ket() const { return ket_; }
  double time() const { return static_cast<double>(step_) * dt_; }
  const FilterState& filter() const { return filter_; }
  int steps_per_frame() const { return integ_.steps_per_frame(); }

 private:
  SystemParams p_;
  Thresholds th_;
  RngStream rng_;
  SseEngine engine_;
  double dt_;
  AtomCavityKet ket_;
  FilterState filter_;
  FrameIntegrator integ_;
  long step_ = 0;
};

struct SamplePoint {
  double dt = 0.0;
  ConditionalState state;
};

enum class SampleEnd : std::uint8_t { ReturnToB, ReachedLimit };

struct CatchSample {
  double t_click = 0.0;
  std::vector<SamplePoint> series;
  SampleEnd terminated_by = SampleEnd::ReturnToB;
};

// Pooled running sums per delay bin.
class TomogramAccumulator {
 public:
  TomogramAccumulator() = default;
  TomogramAccumulator(int bins, double spacing);

  void add(int bin, const ConditionalState& s, double weight = 1.0);
  void merge(const TomogramAccumulator& o);
  int bins() const { return static_cast<int>(count_.size()); }

  // (Z, X, Y) = sums / (N - sum P_BB); bins with a non-positive
  // denominator are dropped.
  ConditionalTomogram finalize() const;

 private:
  double spacing_ = 0.0;
  std::vector<CompensatedSum> z_, x_, y_, pbb_, count_;
};

// Monitored runs allow rejected steps to be halved (see SseOptions).
inline SseOptions monitored_sse_options() {
  SseOptions o;
  o.max_splits = 3;
  return o;
}

struct RunOptions {
  SseOptions sse = monitored_sse_options();
  std::uint64_t seed = 0;
  int workers = 1;
  // Work is cut into chunks of this many units (clicks, catches or control
  // trials); each chunk is an independent trajectory on stream id = chunk index.
  int units_per_chunk = 250;
  // Simulated-time budget per chunk, us.
  double chunk_budget_us = 2.0e6;
  // Thresholds; calibrated from pinned records when absent.
  std::optional<Thresholds> thresholds;
  // Probability per frame of scoring a random-time control intervention.
  double control_probability = 0.05;
  // Keeps every catch sample of chunk 0 (tests and CSV dumps).
  bool keep_samples = false;
};

// Thresholds from opts, from the protocol, or from a calibration run on a
// reserved stream.
Thresholds resolve_thresholds(const SystemParams& p, const ProtocolConfig& protocol,
                              const RunOptions& opts);

struct CatchResult {
  ConditionalTomogram tomogram;
  long events = 0;
  double simulated_us = 0.0;
  std::vector<CatchSample> samples;  // chunk 0 only, when requested
};

// Every de-excitation click starts a sample aligned at dt = 0. The sample
// keeps the dark drive on for dt_on and off afterwards, and ends on a B label
// or when it reaches dt_on + dt_off, in which case the atom is prepared in B
// again. n_events counts samples.
CatchResult run_catch(const SystemParams& p, const ProtocolConfig& protocol, long n_events,
                      const RunOptions& opts);

// p_g and p_d are normalized like the tomogram, by the mean not-B weight
// 1 - p_b; the raw post-pulse populations are kept alongside.
struct ReverseOutcome {
  double delta_t_catch = 0.0;
  double theta_i = 0.0;
  double phi_i = 0.0;
  double p_g = 0.0;
  double p_d = 0.0;
  long n_trials = 0;
  double p_g_stderr = 0.0;
  double p_d_stderr = 0.0;
  double p_g_raw = 0.0;
  double p_d_raw = 0.0;
  double p_b = 0.0;
};

struct Pulse {
  double theta = 0.0;
  double phi = 0.0;
};

struct ReverseReport {
  std::vector<ReverseOutcome> conditioned;  // one per pulse, at the catch time
  std::vector<ReverseOutcome> control;      // one per pulse, at random frames
  double simulated_us = 0.0;
};

// Catch condition: a click followed by round(dt_catch / t_int) not-B frames.
// Each pulse is applied to a copy of the caught state and scored on the
// post-pulse populations; the realization then restarts from B. When
// `with_control` is set, every frame is also picked with probability
// opts.control_probability for the same pulses. n_trials counts catches.
ReverseReport run_reverse_pulses(const SystemParams& p, const ProtocolConfig& protocol,
                                 const std::vector<Pulse>& pulses, long n_trials,
                                 const RunOptions& opts, bool with_control = false);

ReverseOutcome run_reverse(const SystemParams& p, const ProtocolConfig& protocol, long n_trials,
                           const RunOptions& opts);

// Same feedback loop, but the pulse is scored at uniformly random frames.
// n_trials counts control interventions.
ReverseOutcome run_control_random_intervention(const SystemParams& p,
                                               const ProtocolConfig& protocol, long n_trials,
                                               const RunOptions& opts);

struct FreeRunResult {
  std::vector<RecordFrame> frames;
  std::vector<ClickEvent> clicks;
  std::vector<double> not_b_dwells;
  std::vector<double> b_dwells;
  WaitingTimeHistogram not_b_histogram;
  WaitingTimeHistogram b_histogram;
  std::vector<double> p_d_truth;  // true D population per frame
  long dark_jumps = 0;            // G -> D jumps from the true state
  double duration = 0.0;
};

// All drives on, no feedback.
FreeRunResult run_free(const SystemParams& p, double duration, const RunOptions& opts);

// Mean level populations over independent trajectories (stream id =
// trajectory index) at each checkpoint. No measurement feedback.
struct PopulationEnsemble {
  std::vector<double> t;
  std::vector<std::array<double, kLevels>> mean;
  long n_traj = 0;
};

PopulationEnsemble ensemble_populations(const SystemParams& p, const AtomCavityKet& initial,
                                        const std::vector<double>& checkpoints, long n_traj,
                                        const RunOptions& opts);

// Counting-model tomogram: every sample is the no-click evolution from a
// click reset, weighted by its survival probability. The result is
// deterministic.
ConditionalTomogram counting_model_tomogram(const CountingRegime& r, int bins, double spacing,
                                            double dt);

}  // namespace jumpflight
