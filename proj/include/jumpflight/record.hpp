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
#include <vector>

#include "jumpflight/params.hpp"
#include "jumpflight/sse.hpp"
#include "jumpflight/types.hpp"

namespace jumpflight {

struct FilterState {
  double i_rec = 0.0;
  double q_rec = 0.0;
  Label last_label = Label::B;
  int cnt = 0;  // consecutive not-B frames
};

// One step of the amplifier-chain low-pass. The input is held constant over
// the step and the first-order filter is integrated exactly, so the state
// relaxes at kappa_filter/2 toward sqrt(2/(eta kappa)) d_zeta/dt.
FilterState filter_quadratures(FilterState s, cplx d_zeta, const SystemParams& p, double dt);

// Record units: I, Q in (photon number)^(1/2). A cavity field alpha maps to
// the pointer sqrt(2) alpha.
cplx pointer_mean(cplx alpha);
// Integrated signal s = int d_zeta over one frame for a steady field alpha.
cplx integrated_signal(const SystemParams& p, cplx alpha);

// Boxcar of the filtered quadratures over each t_int window.
class FrameIntegrator {
 public:
  FrameIntegrator(const SystemParams& p, double dt);

  // Feeds the filter state after one step ending at time t. Returns a frame
  // (label left at B) when the window closes.
  std::optional<RecordFrame> push(double t, const FilterState& s);
  int steps_per_frame() const { return steps_per_frame_; }

 private:
  int steps_per_frame_;
  int count_ = 0;
  double sum_i_ = 0.0;
  double sum_q_ = 0.0;
};

// Runs a raw increment stream through filter and integrator.
std::vector<RecordFrame> integrate_frames(const std::vector<cplx>& d_zeta, const SystemParams& p,
                                          double dt);

// Two-threshold classifier with memory:
//   Q >= q_b or I > i_b       -> B
//   Q <  q_b and I < i_bbar   -> NotB
//   otherwise                 -> previous label
Label hysteretic_label(const RecordFrame& f, const Thresholds& th, Label prev);

// Applies the classifier along a frame sequence, starting from `initial`.
void label_frames(std::vector<RecordFrame>& frames, const Thresholds& th, Label initial);

enum class ClickKind : std::uint8_t { Deexcitation, Excitation };

struct ClickEvent {
  double t = 0.0;
  ClickKind kind = ClickKind::Deexcitation;
};

std::vector<ClickEvent> detect_clicks(const std::vector<RecordFrame>& frames,
                                      Label initial = Label::B);

// Inverse of detect_clicks on a known frame grid.
std::vector<Label> labels_from_clicks(const std::vector<ClickEvent>& clicks,
                                      const std::vector<double>& frame_times, Label initial);

enum class DwellKind : std::uint8_t { NotB, B };

// Completed dwell intervals in us. A not-B dwell runs from a de-excitation
// to the next excitation, which equals the inter-click time minus the
// preceding B dwell.
std::vector<double> dwell_times(const std::vector<ClickEvent>& clicks, DwellKind which);

struct WaitingTimeHistogram {
  std::vector<double> bin_edges;
  std::vector<long> counts;
  DwellKind which = DwellKind::NotB;
};

WaitingTimeHistogram dwell_histogram(const std::vector<double>& dwells, double bin_width,
                                     DwellKind which, double max_time = -1.0);

// Pinned-state calibration: the atom is frozen in B, then in G, and the
// thresholds sit 1.5 sigma inside the I pointers and 3 sigma above the
// highest Q pointer.
struct PointerStats {
  double mean_i = 0.0;
  double mean_q = 0.0;
  double sigma_i = 0.0;
  double sigma_q = 0.0;
};

struct Calibration {
  Thresholds thresholds;
  PointerStats bright;
  PointerStats dark;
};

// Copy of p with every atomic drive and atomic rate set to zero.
SystemParams pinned_params(const SystemParams& p);

// Frames of a pinned record, after discarding `settle_frames`.
std::vector<RecordFrame> pinned_record(const SystemParams& p, Level level, int frames,
                                       RngStream rng, SseOptions opts = {}, int settle_frames = 8);

Calibration calibrate_thresholds(const SystemParams& p, std::uint64_t seed, int frames = 400,
                                 SseOptions opts = {});

}  // namespace jumpflight
