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

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "jumpflight/model.hpp"

namespace jumpflight {

// Counter-style stream: a master seed and a stream index select an
// independent Mersenne Twister state. Normal deviates use the polar method
// so that only sqrt and log enter the transform.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  double uniform();  // [0, 1), 53 random bits
  double normal();
  // Complex Wiener increment with independent N(0, dt/2) parts.
  cplx wiener(double dt);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

class StepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SseOptions {
  double dt = 0.001;
  ChannelSet channels = ChannelSet::all();
  bool rk4_drift = true;
  bool noise = true;  // false forces dZ = 0
  // A step whose summed jump probability exceeds 0.1 throws StepError, unless
  // splits are allowed, in which case it is redone as two half steps (up to
  // this many halvings). The nominal time grid is unchanged.
  int max_splits = 0;
};

struct TrajectoryStep {
  double dt = 0.0;
  cplx d_zeta;
  std::vector<Channel> jumps_fired;  // at most one per (sub)step
};

// Heterodyne-unravelled stochastic Schroedinger stepper. The drift is the
// non-Hermitian generator -iH - (1/2) sum L^dag L, the diffusive kick is
// sqrt(eta kappa) conj(d_zeta) c, and the remaining channels are sampled as
// jumps from the pre-step state.
class SseEngine {
 public:
  explicit SseEngine(const SystemParams& p, SseOptions opts = {});

  TrajectoryStep step(AtomCavityKet& ket, double t, RngStream& rng);

  void set_drives(DriveState d) { drives_ = d; }
  const DriveState& drives() const { return drives_; }
  const SystemParams& params() const { return p_; }
  const SseOptions& options() const { return opts_; }

  // out = G(t) in, with G the drift generator. Exposed for tests.
  void drift(const AtomCavityKet& in, AtomCavityKet& out, double t) const;
  Eigen::MatrixXcd dense_drift(double t) const;

 private:
  void step_impl(AtomCavityKet& ket, double t, double h, RngStream& rng, int depth,
                 TrajectoryStep& out);
  void advance_drift(AtomCavityKet& ket, double t, double h);
  void update_active(const AtomCavityKet& ket);

  SystemParams p_;
  SseOptions opts_;
  DriveState drives_;
  int nf_;
  std::vector<cplx> diag_;  // per (level, n), time independent
  std::vector<double> sqrt_n_;
  double eps_;
  double sqrt_eta_kappa_;
  std::array<double, kChannels> coeff_{};
  std::array<bool, kLevels> active_{};
  AtomCavityKet k1_, k2_, k3_, k4_, tmp_, kick_;
};

// One step with a freshly built engine. Convenient, not fast.
TrajectoryStep sse_step(AtomCavityKet& ket, const SystemParams& p, double t, double dt,
                        RngStream& rng);

struct StepRecord {
  double t = 0.0;  // time at the end of the step
  TrajectoryStep step;
  ConditionalState truth;
};

// Pull-based trajectory: each next() advances one step.
class TrajectoryStream {
 public:
  TrajectoryStream(const SystemParams& p, AtomCavityKet initial, double duration, RngStream rng,
                   SseOptions opts = {}, DriveState drives = {});

  std::optional<StepRecord> next();
  const AtomCavityKet& ket() const { return ket_; }
  double time() const { return t_; }

 private:
  SseEngine engine_;
  AtomCavityKet ket_;
  RngStream rng_;
  long steps_left_;
  double t_ = 0.0;
  long index_ = 0;
};

TrajectoryStream run_trajectory(const SystemParams& p, AtomCavityKet initial, double duration,
                                RngStream rng, SseOptions opts = {}, DriveState drives = {});

}  // namespace jumpflight
