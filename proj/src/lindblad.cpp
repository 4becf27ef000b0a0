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


#include "jumpflight/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace jumpflight {

namespace {

using Mat = Eigen::MatrixXcd;

// Annihilation operator on the truncated Fock space.
Mat lowering(int nf) {
  Mat a = Mat::Zero(nf, nf);
  for (int n = 0; n + 1 < nf; ++n) a(n, n + 1) = std::sqrt(double(n + 1));
  return a;
}

// Applies blockdiag(op, op, op, op) from the left.
Mat left_blockwise(const Mat& op, const Mat& m, int nf) {
  Mat out(m.rows(), m.cols());
  for (int a = 0; a < kLevels; ++a) out.middleRows(a * nf, nf).noalias() = op * m.middleRows(a * nf, nf);
  return out;
}

Mat apply_hamiltonian(const Hamiltonian& h, const Mat& rho, int nf) {
  const cplx I(0.0, 1.0);
  const Mat a = lowering(nf);
  const Mat hop = I * h.drive_eps * (a.adjoint() - a);
  Mat out(rho.rows(), rho.cols());
  for (int lv = 0; lv < kLevels; ++lv) {
    Mat k = hop;
    for (int n = 0; n < nf; ++n) k(n, n) += h.atom_energy[lv] + h.cavity_shift[lv] * n;
    out.middleRows(lv * nf, nf).noalias() = k * rho.middleRows(lv * nf, nf);
  }
  auto rows = [&](const Mat& m, int lv) { return m.middleRows(lv * nf, nf); };
  out.middleRows(kB * nf, nf) += I * 0.5 * h.omega_bg * rows(rho, kG);
  out.middleRows(kD * nf, nf) += I * 0.5 * h.omega_dg * rows(rho, kG);
  out.middleRows(kG * nf, nf) -= I * 0.5 * std::conj(h.omega_bg) * rows(rho, kB) +
                                 I * 0.5 * h.omega_dg * rows(rho, kD);
  return out;
}

}  // namespace

DensityMatrix DensityMatrix::pure(const AtomCavityKet& ket, double t) {
  Eigen::Map<const Eigen::VectorXcd> v(ket.amplitudes().data(), ket.size());
  DensityMatrix r;
  r.entries = v * v.adjoint() / v.squaredNorm();
  r.t = t;
  r.n_fock = ket.n_fock();
  return r;
}

double DensityMatrix::trace() const { return entries.trace().real(); }

double DensityMatrix::population(int level) const {
  return entries.diagonal().segment(level * n_fock, n_fock).real().sum();
}

std::array<double, kLevels> DensityMatrix::populations() const {
  std::array<double, kLevels> out{};
  for (int lv = 0; lv < kLevels; ++lv) out[lv] = population(lv);
  return out;
}

double DensityMatrix::mean_photons() const {
  double s = 0.0;
  for (int i = 0; i < entries.rows(); ++i) s += (i % n_fock) * entries(i, i).real();
  return s;
}

double DensityMatrix::top_fock_population() const {
  double s = 0.0;
  for (int lv = 0; lv < kLevels; ++lv) {
    const int i = lv * n_fock + n_fock - 1;
    s += entries(i, i).real();
  }
  return s;
}

InvariantReport check_invariants(const DensityMatrix& rho) {
  InvariantReport r;
  const Mat& m = rho.entries;
  r.hermiticity = (m - m.adjoint()).cwiseAbs().maxCoeff();
  r.trace_error = std::abs(m.trace() - cplx(1.0, 0.0));
  const Mat herm = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(herm, Eigen::EigenvaluesOnly);
  r.min_eigenvalue = es.eigenvalues().minCoeff();
  return r;
}

double max_rate(const SystemParams& p, const LindbladOptions& opts) {
  double r = p.kappa;
  for (int c = 1; c < kChannels; ++c) {
    const auto ch = static_cast<Channel>(c);
    if (opts.channels.has(ch)) r = std::max(r, channel_coefficient(p, ch));
  }
  return r;
}

Mat lindblad_rhs(const Mat& rho, const SystemParams& p, double t, const LindbladOptions& opts) {
  const int nf = p.n_fock;
  const cplx I(0.0, 1.0);
  const Hamiltonian h(p, t, opts.drives);

  const Mat hr = apply_hamiltonian(h, rho, nf);
  Mat out = -I * (hr - hr.adjoint());

  // Cavity loss, kappa D[c].
  const Mat a = lowering(nf);
  const Mat ar = left_blockwise(a, rho, nf);
  const Mat arad = left_blockwise(a, ar.adjoint(), nf).adjoint();
  Eigen::VectorXd nvec(rho.rows());
  for (int i = 0; i < rho.rows(); ++i) nvec(i) = i % nf;
  out += p.kappa * (arad - 0.5 * (nvec.asDiagonal() * rho + rho * nvec.asDiagonal()));

  // Atomic channels: |t><s| (x) 1, or |s><s| (x) 1 for dephasing.
  for (int c = 1; c < kChannels; ++c) {
    const auto ch = static_cast<Channel>(c);
    if (!opts.channels.has(ch)) continue;
    const double g = channel_coefficient(p, ch);
    if (g == 0.0) continue;
    const int s = channel_source(ch);
    const int tg = channel_target(ch);
    out.block(tg * nf, tg * nf, nf, nf) += g * rho.block(s * nf, s * nf, nf, nf);
    out.middleRows(s * nf, nf) -= 0.5 * g * rho.middleRows(s * nf, nf);
    out.middleCols(s * nf, nf) -= 0.5 * g * rho.middleCols(s * nf, nf);
  }
  return out;
}

std::vector<DensityMatrix> lindblad_solve(const DensityMatrix& rho0, const SystemParams& p,
                                          const std::vector<double>& t_grid, double dt,
                                          const LindbladOptions& opts) {
  if (!(dt > 0.0) || dt > 1.0 / (20.0 * max_rate(p, opts)) * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "dt = " << dt << " us exceeds 1/(20 max rate) = " << 1.0 / (20.0 * max_rate(p, opts));
    throw std::invalid_argument(msg.str());
  }
  if (rho0.n_fock != p.n_fock || rho0.entries.rows() != kLevels * p.n_fock) {
    throw std::invalid_argument("density matrix dimension does not match n_fock");
  }

  std::vector<DensityMatrix> out;
  out.reserve(t_grid.size());
  Mat rho = rho0.entries;
  double t = rho0.t;

  auto guard = [&](const DensityMatrix& d) {
    if (d.top_fock_population() >= 1e-4) {
      std::ostringstream msg;
      msg << "top Fock population " << d.top_fock_population() << " at t = " << d.t
          << " us; raise n_fock";
      throw InvariantError(msg.str());
    }
    if (opts.check_every_point) {
      const InvariantReport r = check_invariants(d);
      if (!r.ok()) {
        std::ostringstream msg;
        msg << "density matrix invariant broken at t = " << d.t << " us (hermiticity "
            << r.hermiticity << ", trace error " << r.trace_error << ", min eigenvalue "
            << r.min_eigenvalue << ")";
        throw InvariantError(msg.str());
      }
    }
  };

  for (double target : t_grid) {
    if (target < t - 1e-12) throw std::invalid_argument("time grid must be ascending");
    while (target - t > 1e-12) {
      const double h = std::min(dt, target - t);
      const Mat k1 = lindblad_rhs(rho, p, t, opts);
      const Mat k2 = lindblad_rhs(rho + 0.5 * h * k1, p, t + 0.5 * h, opts);
      const Mat k3 = lindblad_rhs(rho + 0.5 * h * k2, p, t + 0.5 * h, opts);
      const Mat k4 = lindblad_rhs(rho + h * k3, p, t + h, opts);
      rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      rho = 0.5 * (rho + rho.adjoint()).eval();
      t += h;
    }
    DensityMatrix d{rho, target, p.n_fock};
    guard(d);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace jumpflight
