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

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "jumpflight/params.hpp"
#include "jumpflight/types.hpp"

namespace jumpflight {

enum Level : int { kG = 0, kB = 1, kD = 2, kF = 3 };
inline constexpr int kLevels = 4;

// Ket over {G, B, D, F} x Fock(n_fock), atom-major.
class AtomCavityKet {
 public:
  AtomCavityKet() = default;
  explicit AtomCavityKet(int n_fock) : n_fock_(n_fock), amp_(kLevels * n_fock) {}

  // |level> (x) cavity, cavity vector of length n_fock.
  static AtomCavityKet product(Level level, const std::vector<cplx>& cavity);
  static AtomCavityKet basis(Level level, int n, int n_fock);

  int n_fock() const { return n_fock_; }
  int size() const { return static_cast<int>(amp_.size()); }
  cplx& at(int level, int n) { return amp_[level * n_fock_ + n]; }
  const cplx& at(int level, int n) const { return amp_[level * n_fock_ + n]; }
  cplx* block(int level) { return amp_.data() + level * n_fock_; }
  const cplx* block(int level) const { return amp_.data() + level * n_fock_; }
  std::vector<cplx>& amplitudes() { return amp_; }
  const std::vector<cplx>& amplitudes() const { return amp_; }

  double norm2() const;
  void normalize();
  double population(int level) const;
  double top_fock_population(int level) const;
  double mean_photons() const;
  cplx mean_field() const;

  bool norm_is_tracked = true;

 private:
  int n_fock_ = 0;
  std::vector<cplx> amp_;
};

// Truncated coherent state, renormalized on the kept levels.
std::vector<cplx> coherent_state(cplx alpha, int n_fock);

// Steady cavity field with the atom frozen in `level` (F acts like G).
cplx steady_field(const SystemParams& p, int level);

// Which coherent terms are switched on.
struct DriveState {
  bool bg = true;
  bool dg = true;
  bool readout = true;
  bool operator==(const DriveState&) const = default;
};

// Complex BG Rabi amplitude at time t.
cplx bg_rabi(const SystemParams& p, double t);

// H_drive(t) + H_R in the rotating frame. The dark drive frame puts
// -delta_dg on |D>.
class Hamiltonian {
 public:
  Hamiltonian(const SystemParams& p, double t, DriveState drives = {});

  void apply(const AtomCavityKet& in, AtomCavityKet& out) const;
  Eigen::MatrixXcd dense(int n_fock) const;

  cplx omega_bg;
  double omega_dg;
  double drive_eps;  // cavity drive strength (kappa/2) sqrt(nbar)
  std::array<double, kLevels> atom_energy;  // constant per-level shift
  std::array<double, kLevels> cavity_shift;  // c^dag c coefficient per level
};

Hamiltonian build_hamiltonian(const SystemParams& p, double t, DriveState drives = {});

// Jump channels of the trajectory engine.
enum class Channel : std::uint8_t {
  PhotonLoss,
  RelaxB,
  RelaxD,
  ExciteB,
  ExciteD,
  DephaseB,
  DephaseD,
  LeakFromG,
  LeakFromD,
  ReturnFtoG,
  ReturnFtoD,
};
inline constexpr int kChannels = 11;

const char* channel_name(Channel c);
Channel channel_from_name(const std::string& name);

class ChannelSet {
 public:
  static ChannelSet all() { return ChannelSet((1u << kChannels) - 1u); }
  static ChannelSet none() { return ChannelSet(0u); }
  bool has(Channel c) const { return (bits_ >> static_cast<int>(c)) & 1u; }
  ChannelSet with(Channel c) const { return ChannelSet(bits_ | (1u << static_cast<int>(c))); }
  ChannelSet without(Channel c) const { return ChannelSet(bits_ & ~(1u << static_cast<int>(c))); }
  std::uint32_t bits() const { return bits_; }

 private:
  explicit ChannelSet(std::uint32_t b) : bits_(b) {}
  std::uint32_t bits_;
};

// Per-channel rate constant (multiplies the population of the source level,
// or the photon number for PhotonLoss).
double channel_coefficient(const SystemParams& p, Channel c);

// Source level of an atomic channel, destination level (same for dephasing).
int channel_source(Channel c);
int channel_target(Channel c);

// Applies the (unnormalized) collapse operator in place.
void apply_jump(AtomCavityKet& ket, Channel c);

// Per-level non-Hermitian decay: half the summed outgoing rates of `level`.
std::array<double, kLevels> level_decay(const SystemParams& p, ChannelSet channels);

// Ground-dark Bloch vector and bright population, traced over the cavity.
struct ConditionalState {
  GdBloch bloch;
  double p_bb = 0.0;
};
ConditionalState conditional_bloch(const AtomCavityKet& ket);

// GD-subspace rotation exp[-i theta/2 (cos phi sx + sin phi sy)] with
// sx = |D><G| + |G><D| and sy = -i|D><G| + i|G><D|, applied for every
// cavity index. B, F and the cavity are untouched.
void apply_gd_rotation(AtomCavityKet& ket, double theta, double phi);

}  // namespace jumpflight
