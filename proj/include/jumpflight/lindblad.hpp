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
#include <stdexcept>
#include <vector>

#include "jumpflight/model.hpp"
#include "jumpflight/params.hpp"

namespace jumpflight {

// Atom-cavity density matrix in the same atom-major layout as AtomCavityKet.
struct DensityMatrix {
  Eigen::MatrixXcd entries;
  double t = 0.0;
  int n_fock = 0;

  static DensityMatrix pure(const AtomCavityKet& ket, double t = 0.0);
  double trace() const;
  double population(int level) const;
  std::array<double, kLevels> populations() const;
  double mean_photons() const;
  double top_fock_population() const;
};

class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InvariantReport {
  double hermiticity = 0.0;  // max |rho - rho^dag|
  double trace_error = 0.0;
  double min_eigenvalue = 0.0;
  bool ok(double herm_tol = 1e-9, double trace_tol = 1e-7, double eig_tol = 1e-7) const {
    return hermiticity <= herm_tol && trace_error <= trace_tol && min_eigenvalue >= -eig_tol;
  }
};
InvariantReport check_invariants(const DensityMatrix& rho);

struct LindbladOptions {
  DriveState drives{};
  // Atomic channels kept in the generator. Cavity loss always enters as the
  // full kappa D[c], measured or not.
  ChannelSet channels = ChannelSet::all();
  bool check_every_point = true;
};

// d rho / dt. Assumes rho is Hermitian.
Eigen::MatrixXcd lindblad_rhs(const Eigen::MatrixXcd& rho, const SystemParams& p, double t,
                              const LindbladOptions& opts = {});

// Largest rate constant in the generator, used for the step-size rule.
double max_rate(const SystemParams& p, const LindbladOptions& opts = {});

// Fixed-step RK4 from rho0.t through every point of t_grid (ascending,
// >= rho0.t). Throws InvariantError on a truncation or invariant failure
// and std::invalid_argument on a bad step or grid.
std::vector<DensityMatrix> lindblad_solve(const DensityMatrix& rho0, const SystemParams& p,
                                          const std::vector<double>& t_grid, double dt,
                                          const LindbladOptions& opts = {});

}  // namespace jumpflight
