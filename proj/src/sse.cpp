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

#include "jumpflight/sse.hpp"

#include <cmath>
#include <sstream>

namespace jumpflight {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed),
      stream_id_(stream_id),
      engine_(splitmix64(seed ^ splitmix64(stream_id ^ 0x632BE59BD9B4E019ULL))) {}

double RngStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  has_spare_ = true;
  return u * m;
}

cplx RngStream::wiener(double dt) {
  const double s = std::sqrt(0.5 * dt);
  const double re = normal();
  const double im = normal();
  return {s * re, s * im};
}

SseEngine::SseEngine(const SystemParams& p, SseOptions opts)
    : p_(p),
      opts_(opts),
      nf_(p.n_fock),
      diag_(kLevels * p.n_fock),
      sqrt_n_(p.n_fock + 1),
      eps_(0.5 * p.kappa * std::sqrt(p.nbar)),
      sqrt_eta_kappa_(std::sqrt(p.eta * p.kappa)),
      k1_(p.n_fock), k2_(p.n_fock), k3_(p.n_fock), k4_(p.n_fock), tmp_(p.n_fock), kick_(p.n_fock) {
  if (!(opts_.dt > 0.0)) throw std::invalid_argument("dt must be positive");
  for (int n = 0; n <= nf_; ++n) sqrt_n_[n] = std::sqrt(double(n));
  for (int c = 0; c < kChannels; ++c) coeff_[c] = channel_coefficient(p_, static_cast<Channel>(c));
  const auto decay = level_decay(p_, opts_.channels);
  const Hamiltonian h(p_, 0.0, DriveState{});
  for (int a = 0; a < kLevels; ++a) {
    for (int n = 0; n < nf_; ++n) {
      const double energy = h.atom_energy[a] + h.cavity_shift[a] * n;
      diag_[a * nf_ + n] = cplx(-decay[a] - 0.5 * p_.kappa * n, -energy);
    }
  }
}

void SseEngine::update_active(const AtomCavityKet& ket) {
  for (int a = 0; a < kLevels; ++a) {
    const cplx* b = ket.block(a);
    bool nz = false;
    for (int n = 0; n < nf_ && !nz; ++n) nz = b[n] != cplx{};
    active_[a] = nz;
  }
  const bool bg = drives_.bg && (p_.omega_b0 != 0.0 || p_.omega_b1 != 0.0);
  const bool dg = drives_.dg && p_.omega_dg != 0.0;
  // Closure over the coherent couplings B-G-D.
  for (int pass = 0; pass < 2; ++pass) {
    if (bg && (active_[kG] || active_[kB])) active_[kG] = active_[kB] = true;
    if (dg && (active_[kG] || active_[kD])) active_[kG] = active_[kD] = true;
  }
}

void SseEngine::drift(const AtomCavityKet& in, AtomCavityKet& out, double t) const {
  const double eps = drives_.readout ? eps_ : 0.0;
  for (int a = 0; a < kLevels; ++a) {
    cplx* y = out.block(a);
    if (!active_[a]) {
      for (int n = 0; n < nf_; ++n) y[n] = 0.0;
      continue;
    }
    const cplx* x = in.block(a);
    const cplx* d = diag_.data() + a * nf_;
    for (int n = 0; n < nf_; ++n) {
      cplx v = d[n] * x[n];
      double re = v.real(), im = v.imag();
      if (n > 0) {
        re += eps * sqrt_n_[n] * x[n - 1].real();
        im += eps * sqrt_n_[n] * x[n - 1].imag();
      }
      if (n + 1 < nf_) {
        re -= eps * sqrt_n_[n + 1] * x[n + 1].real();
        im -= eps * sqrt_n_[n + 1] * x[n + 1].imag();
      }
      y[n] = cplx(re, im);
    }
  }
  const cplx half_bg = drives_.bg ? 0.5 * bg_rabi(p_, t) : cplx{};
  const double half_dg = drives_.dg ? 0.5 * p_.omega_dg : 0.0;
  if (half_bg != cplx{} && active_[kG]) {
    const cplx* g = in.block(kG);
    const cplx* b = in.block(kB);
    cplx* yg = out.block(kG);
    cplx* yb = out.block(kB);
    const cplx cb = std::conj(half_bg);
    for (int n = 0; n < nf_; ++n) {
      yb[n] += half_bg * g[n];
      yg[n] -= cb * b[n];
    }
  }
  if (half_dg != 0.0 && active_[kG]) {
    const cplx* g = in.block(kG);
    const cplx* d = in.block(kD);
    cplx* yg = out.block(kG);
    cplx* yd = out.block(kD);
    for (int n = 0; n < nf_; ++n) {
      yd[n] += half_dg * g[n];
      yg[n] -= half_dg * d[n];
    }
  }
}

Eigen::MatrixXcd SseEngine::dense_drift(double t) const {
  const int dim = kLevels * nf_;
  Eigen::MatrixXcd m(dim, dim);
  AtomCavityKet e(nf_), col(nf_);
  auto* self = const_cast<SseEngine*>(this);
  const auto saved = active_;
  self->active_.fill(true);
  for (int j = 0; j < dim; ++j) {
    std::fill(e.amplitudes().begin(), e.amplitudes().end(), cplx{});
    e.amplitudes()[j] = 1.0;
    drift(e, col, t);
    for (int i = 0; i < dim; ++i) m(i, j) = col.amplitudes()[i];
  }
  self->active_ = saved;
  return m;
}

void SseEngine::advance_drift(AtomCavityKet& ket, double t, double h) {
  auto& x = ket.amplitudes();
  const int dim = static_cast<int>(x.size());
  if (!opts_.rk4_drift) {
    drift(ket, k1_, t);
    for (int i = 0; i < dim; ++i) x[i] += h * k1_.amplitudes()[i];
    return;
  }
  auto& a1 = k1_.amplitudes();
  auto& a2 = k2_.amplitudes();
  auto& a3 = k3_.amplitudes();
  auto& a4 = k4_.amplitudes();
  auto& w = tmp_.amplitudes();
  drift(ket, k1_, t);
  for (int i = 0; i < dim; ++i) w[i] = x[i] + (0.5 * h) * a1[i];
  drift(tmp_, k2_, t + 0.5 * h);
  for (int i = 0; i < dim; ++i) w[i] = x[i] + (0.5 * h) * a2[i];
  drift(tmp_, k3_, t + 0.5 * h);
  for (int i = 0; i < dim; ++i) w[i] = x[i] + h * a3[i];
  drift(tmp_, k4_, t + h);
  const double s = h / 6.0;
  for (int i = 0; i < dim; ++i) x[i] += s * (a1[i] + 2.0 * (a2[i] + a3[i]) + a4[i]);
}

TrajectoryStep SseEngine::step(AtomCavityKet& ket, double t, RngStream& rng) {
  if (ket.n_fock() != nf_) throw std::invalid_argument("ket truncation does not match params");
  TrajectoryStep out;
  out.dt = opts_.dt;
  step_impl(ket, t, opts_.dt, rng, 0, out);
  return out;
}

void SseEngine::step_impl(AtomCavityKet& ket, double t, double h, RngStream& rng, int depth,
                          TrajectoryStep& out) {
  // Pre-step expectations from the normalized ket.
  double pop[kLevels];
  for (int a = 0; a < kLevels; ++a) pop[a] = ket.population(a);
  const double n_mean = ket.mean_photons();

  double rates[kChannels];
  double total = 0.0;
  for (int c = 0; c < kChannels; ++c) {
    const Channel ch = static_cast<Channel>(c);
    double r = 0.0;
    if (opts_.channels.has(ch)) {
      r = ch == Channel::PhotonLoss ? coeff_[c] * n_mean : coeff_[c] * pop[channel_source(ch)];
    }
    rates[c] = r;
    total += r;
  }
  if (total * h > 0.1) {
    if (depth < opts_.max_splits) {
      step_impl(ket, t, 0.5 * h, rng, depth + 1, out);
      step_impl(ket, t + 0.5 * h, 0.5 * h, rng, depth + 1, out);
      return;
    }
    std::ostringstream msg;
    msg << "summed jump probability " << total * h << " exceeds 0.1 at t = " << t
        << " us; reduce dt";
    throw StepError(msg.str());
  }

  const cplx c_mean = ket.mean_field();
  const cplx dz = opts_.noise ? rng.wiener(h) : cplx{};
  const cplx d_zeta = sqrt_eta_kappa_ * c_mean * h + dz;
  out.d_zeta += d_zeta;

  // Diffusive kick uses c acting on the pre-step ket.
  const cplx kick = sqrt_eta_kappa_ * std::conj(d_zeta);
  for (int a = 0; a < kLevels; ++a) {
    const cplx* x = ket.block(a);
    cplx* y = kick_.block(a);
    for (int n = 0; n + 1 < nf_; ++n) y[n] = kick * sqrt_n_[n + 1] * x[n + 1];
    y[nf_ - 1] = 0.0;
  }

  update_active(ket);
  advance_drift(ket, t, h);
  auto& x = ket.amplitudes();
  const auto& kk = kick_.amplitudes();
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += kk[i];

  // Jump lottery: one uniform against stacked channel intervals.
  const double u = rng.uniform();
  if (u < total * h) {
    double acc = 0.0;
    for (int c = 0; c < kChannels; ++c) {
      acc += rates[c] * h;
      if (u < acc && rates[c] > 0.0) {
        out.jumps_fired.push_back(static_cast<Channel>(c));
        apply_jump(ket, static_cast<Channel>(c));
        break;
      }
    }
  }

  ket.normalize();
  for (int a = 0; a < kLevels; ++a) {
    if (ket.top_fock_population(a) >= 1e-4) {
      std::ostringstream msg;
      msg << "Fock truncation exceeded at t = " << t << " us (top level population "
          << ket.top_fock_population(a) << ")";
      throw StepError(msg.str());
    }
  }
}

TrajectoryStep sse_step(AtomCavityKet& ket, const SystemParams& p, double t, double dt,
                        RngStream& rng) {
  SseOptions o;
  o.dt = dt;
  SseEngine e(p, o);
  return e.step(ket, t, rng);
}

TrajectoryStream::TrajectoryStream(const SystemParams& p, AtomCavityKet initial, double duration,
                                   RngStream rng, SseOptions opts, DriveState drives)
    : engine_(p, opts),
      ket_(std::move(initial)),
      rng_(rng),
      steps_left_(duration > 0.0 ? std::lround(duration / opts.dt) : 0) {
  engine_.set_drives(drives);
}

std::optional<StepRecord> TrajectoryStream::next() {
  if (steps_left_ <= 0) return std::nullopt;
  --steps_left_;
  StepRecord r;
  r.step = engine_.step(ket_, t_, rng_);
  ++index_;
  t_ = static_cast<double>(index_) * engine_.options().dt;
  r.t = t_;
  r.truth = conditional_bloch(ket_);
  return r;
}

TrajectoryStream run_trajectory(const SystemParams& p, AtomCavityKet initial, double duration,
                                RngStream rng, SseOptions opts, DriveState drives) {
  return TrajectoryStream(p, std::move(initial), duration, rng, opts, drives);
}

}  // namespace jumpflight
