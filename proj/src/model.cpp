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

#include "jumpflight/model.hpp"

#include <cmath>
#include <stdexcept>

namespace jumpflight {

AtomCavityKet AtomCavityKet::product(Level level, const std::vector<cplx>& cavity) {
  AtomCavityKet k(static_cast<int>(cavity.size()));
  for (int n = 0; n < k.n_fock(); ++n) k.at(level, n) = cavity[n];
  return k;
}

AtomCavityKet AtomCavityKet::basis(Level level, int n, int n_fock) {
  if (n < 0 || n >= n_fock) throw std::out_of_range("Fock index outside truncation");
  AtomCavityKet k(n_fock);
  k.at(level, n) = 1.0;
  return k;
}

double AtomCavityKet::norm2() const {
  double s = 0.0;
  for (const cplx& a : amp_) s += std::norm(a);
  return s;
}

void AtomCavityKet::normalize() {
  const double n2 = norm2();
  if (!(n2 > 0.0) || !std::isfinite(n2)) throw std::runtime_error("cannot normalize a null ket");
  const double s = 1.0 / std::sqrt(n2);
  for (cplx& a : amp_) a *= s;
}

double AtomCavityKet::population(int level) const {
  double s = 0.0;
  const cplx* b = block(level);
  for (int n = 0; n < n_fock_; ++n) s += std::norm(b[n]);
  return s;
}

double AtomCavityKet::top_fock_population(int level) const {
  return std::norm(at(level, n_fock_ - 1));
}

double AtomCavityKet::mean_photons() const {
  double s = 0.0;
  for (int a = 0; a < kLevels; ++a) {
    const cplx* b = block(a);
    for (int n = 1; n < n_fock_; ++n) s += n * std::norm(b[n]);
  }
  return s;
}

cplx AtomCavityKet::mean_field() const {
  cplx s = 0.0;
  for (int a = 0; a < kLevels; ++a) {
    const cplx* b = block(a);
    for (int n = 1; n < n_fock_; ++n) s += std::conj(b[n - 1]) * std::sqrt(double(n)) * b[n];
  }
  return s;
}

std::vector<cplx> coherent_state(cplx alpha, int n_fock) {
  std::vector<cplx> v(n_fock);
  cplx term = 1.0;
  for (int n = 0; n < n_fock; ++n) {
    if (n > 0) term *= alpha / std::sqrt(double(n));
    v[n] = term;
  }
  double s = 0.0;
  for (const cplx& a : v) s += std::norm(a);
  for (cplx& a : v) a /= std::sqrt(s);
  return v;
}

cplx steady_field(const SystemParams& p, int level) {
  const double chi = level == kB ? p.chi_b : level == kD ? p.chi_d : 0.0;
  const double eps = 0.5 * p.kappa * std::sqrt(p.nbar);
  return eps / cplx(0.5 * p.kappa, chi - p.delta_r);
}

cplx bg_rabi(const SystemParams& p, double t) {
  return p.omega_b0 + p.omega_b1 * std::polar(1.0, -p.delta_b1 * t);
}

Hamiltonian::Hamiltonian(const SystemParams& p, double t, DriveState drives)
    : omega_bg(drives.bg ? bg_rabi(p, t) : cplx{}),
      omega_dg(drives.dg ? p.omega_dg : 0.0),
      drive_eps(drives.readout ? 0.5 * p.kappa * std::sqrt(p.nbar) : 0.0),
      atom_energy{0.0, 0.0, -p.delta_dg, 0.0},
      cavity_shift{-p.delta_r, p.chi_b - p.delta_r, p.chi_d - p.delta_r, -p.delta_r} {}

void Hamiltonian::apply(const AtomCavityKet& in, AtomCavityKet& out) const {
  const int nf = in.n_fock();
  const cplx I(0.0, 1.0);
  for (int a = 0; a < kLevels; ++a) {
    const cplx* x = in.block(a);
    cplx* y = out.block(a);
    for (int n = 0; n < nf; ++n) {
      cplx v = (atom_energy[a] + cavity_shift[a] * n) * x[n];
      cplx hop = 0.0;
      if (n > 0) hop += std::sqrt(double(n)) * x[n - 1];
      if (n + 1 < nf) hop -= std::sqrt(double(n + 1)) * x[n + 1];
      y[n] = v + I * drive_eps * hop;
    }
  }
  for (int n = 0; n < nf; ++n) {
    const cplx g = in.at(kG, n);
    out.at(kB, n) += I * 0.5 * omega_bg * g;
    out.at(kD, n) += I * 0.5 * omega_dg * g;
    out.at(kG, n) += -I * 0.5 * std::conj(omega_bg) * in.at(kB, n) - I * 0.5 * omega_dg * in.at(kD, n);
  }
}

Eigen::MatrixXcd Hamiltonian::dense(int n_fock) const {
  const int dim = kLevels * n_fock;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  AtomCavityKet e(n_fock), col(n_fock);
  for (int j = 0; j < dim; ++j) {
    std::fill(e.amplitudes().begin(), e.amplitudes().end(), cplx{});
    e.amplitudes()[j] = 1.0;
    apply(e, col);
    for (int i = 0; i < dim; ++i) h(i, j) = col.amplitudes()[i];
  }
  return h;
}

Hamiltonian build_hamiltonian(const SystemParams& p, double t, DriveState drives) {
  return Hamiltonian(p, t, drives);
}

namespace {

struct ChannelInfo {
  Channel c;
  const char* name;
  int source;
  int target;
};

constexpr ChannelInfo kInfo[kChannels] = {
    {Channel::PhotonLoss, "photon_loss", -1, -1}, {Channel::RelaxB, "relax_b", kB, kG},
    {Channel::RelaxD, "relax_d", kD, kG},         {Channel::ExciteB, "excite_b", kG, kB},
    {Channel::ExciteD, "excite_d", kG, kD},       {Channel::DephaseB, "dephase_b", kB, kB},
    {Channel::DephaseD, "dephase_d", kD, kD},     {Channel::LeakFromG, "leak_from_g", kG, kF},
    {Channel::LeakFromD, "leak_from_d", kD, kF},  {Channel::ReturnFtoG, "return_f_to_g", kF, kG},
    {Channel::ReturnFtoD, "return_f_to_d", kF, kD},
};

}  // namespace

const char* channel_name(Channel c) { return kInfo[static_cast<int>(c)].name; }

Channel channel_from_name(const std::string& name) {
  for (const auto& i : kInfo) {
    if (name == i.name) return i.c;
  }
  throw std::invalid_argument("unknown channel '" + name + "'");
}

int channel_source(Channel c) { return kInfo[static_cast<int>(c)].source; }
int channel_target(Channel c) { return kInfo[static_cast<int>(c)].target; }

double channel_coefficient(const SystemParams& p, Channel c) {
  switch (c) {
    case Channel::PhotonLoss: return (1.0 - p.eta) * p.kappa;
    case Channel::RelaxB: return p.gamma_b * (p.nth_b + 1.0);
    case Channel::RelaxD: return p.gamma_d * (p.nth_d + 1.0);
    case Channel::ExciteB: return p.gamma_b * p.nth_b;
    case Channel::ExciteD: return p.gamma_d * p.nth_d;
    case Channel::DephaseB: return 2.0 * p.gamma_b_phi;
    case Channel::DephaseD: return 2.0 * p.gamma_d_phi;
    case Channel::LeakFromG: return p.gamma_fg;
    case Channel::LeakFromD: return p.gamma_fd;
    case Channel::ReturnFtoG: return p.gamma_gf;
    case Channel::ReturnFtoD: return p.gamma_df;
  }
  return 0.0;
}

std::array<double, kLevels> level_decay(const SystemParams& p, ChannelSet channels) {
  std::array<double, kLevels> d{};
  for (const auto& i : kInfo) {
    if (i.source < 0 || !channels.has(i.c)) continue;
    d[i.source] += 0.5 * channel_coefficient(p, i.c);
  }
  return d;
}

void apply_jump(AtomCavityKet& ket, Channel c) {
  const int nf = ket.n_fock();
  if (c == Channel::PhotonLoss) {
    for (int a = 0; a < kLevels; ++a) {
      cplx* b = ket.block(a);
      for (int n = 0; n + 1 < nf; ++n) b[n] = std::sqrt(double(n + 1)) * b[n + 1];
      b[nf - 1] = 0.0;
    }
    return;
  }
  const int src = channel_source(c);
  const int dst = channel_target(c);
  for (int a = 0; a < kLevels; ++a) {
    if (a == src) continue;
    cplx* b = ket.block(a);
    if (a == dst) continue;
    for (int n = 0; n < nf; ++n) b[n] = 0.0;
  }
  if (dst != src) {
    cplx* s = ket.block(src);
    cplx* d = ket.block(dst);
    for (int n = 0; n < nf; ++n) {
      d[n] = s[n];
      s[n] = 0.0;
    }
  }
}

ConditionalState conditional_bloch(const AtomCavityKet& ket) {
  const double total = ket.norm2();
  const double pg = ket.population(kG);
  const double pd = ket.population(kD);
  cplx rho_dg = 0.0;
  const cplx* g = ket.block(kG);
  const cplx* d = ket.block(kD);
  for (int n = 0; n < ket.n_fock(); ++n) rho_dg += d[n] * std::conj(g[n]);
  ConditionalState s;
  s.bloch.z = (pd - pg) / total;
  s.bloch.x = 2.0 * rho_dg.real() / total;
  s.bloch.y = 2.0 * rho_dg.imag() / total;
  s.bloch.n_gd = (pg + pd) / total;
  s.p_bb = ket.population(kB) / total;
  return s;
}

void apply_gd_rotation(AtomCavityKet& ket, double theta, double phi) {
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  const cplx mi(0.0, -1.0);
  const cplx to_g = mi * s * std::polar(1.0, phi);   // coefficient of D in the new G
  const cplx to_d = mi * s * std::polar(1.0, -phi);  // coefficient of G in the new D
  cplx* g = ket.block(kG);
  cplx* d = ket.block(kD);
  for (int n = 0; n < ket.n_fock(); ++n) {
    const cplx gn = g[n];
    const cplx dn = d[n];
    g[n] = c * gn + to_g * dn;
    d[n] = to_d * gn + c * dn;
  }
}

}  // namespace jumpflight
