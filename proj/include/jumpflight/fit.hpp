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
#include <stdexcept>
#include <vector>

#include "jumpflight/types.hpp"

namespace jumpflight {

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Z = a + b tanh(t/tau + c) and X = a' + b' sech(t/tau' + c'), fitted
// independently by damped least squares.
struct TanhSechFit {
  double a = 0.0, b = 0.0, c = 0.0, tau = 1.0;
  double a_prime = 0.0, b_prime = 0.0, c_prime = 0.0, tau_prime = 1.0;
  double a_err = 0.0, b_err = 0.0, c_err = 0.0, tau_err = 0.0;
  double a_prime_err = 0.0, b_prime_err = 0.0, c_prime_err = 0.0, tau_prime_err = 0.0;
  double rss_z = 0.0, rss_x = 0.0;
  int iterations_z = 0, iterations_x = 0;
  bool a_prime_fixed = false;
  // Amplitude not resolved from zero, or a singular Jacobian.
  bool degenerate_z = false, degenerate_x = false;
};

struct TanhSechOptions {
  bool constrain_a_prime_zero = false;
  // Bins with fewer samples are left out (0 keeps every reported bin).
  double min_count = 0.0;
  int max_iterations = 200;
  double xtol = 1e-8;
};

double tanh_model(double t, double a, double b, double c, double tau);
double sech_model(double t, double a, double b, double c, double tau);
// d model / d(a, b, c, tau).
Eigen::Vector4d tanh_gradient(double t, double a, double b, double c, double tau);
Eigen::Vector4d sech_gradient(double t, double a, double b, double c, double tau);

TanhSechFit fit_tanh_sech(const ConditionalTomogram& tomo, const TanhSechOptions& opts = {});
TanhSechFit fit_tanh_sech(const ConditionalTomogram& tomo, bool constrain_a_prime_zero);

// Zero crossing of the tomogram Z by linear interpolation, or NaN.
double z_zero_crossing(const ConditionalTomogram& tomo, double min_count = 0.0);

// Two-component exponential mixture on raw dwell samples.
struct BiExponentialFit {
  double rate_fast = 0.0;
  double rate_slow = 0.0;
  double weight_fast = 0.0;
  double rate_fast_err = 0.0;
  double rate_slow_err = 0.0;
  double weight_fast_err = 0.0;
  double log_likelihood = 0.0;
  int iterations = 0;
  long n = 0;
  bool degenerate = false;
};

struct BiExponentialOptions {
  // When positive, samples sit on a grid of this spacing and each one stands
  // for the interval [t - w/2, t + w/2] (clipped at 0).
  double bin_width = 0.0;
  int max_iterations = 20000;
  double tolerance = 1e-12;
  long min_samples = 100;
};

BiExponentialFit fit_bi_exponential(const std::vector<double>& dwells,
                                    const BiExponentialOptions& opts = {});

struct ExponentialFit {
  double rate = 0.0;
  double rate_err = 0.0;
  double time_constant() const { return 1.0 / rate; }
  long n = 0;
};

ExponentialFit fit_single_exponential(const std::vector<double>& dwells, double bin_width = 0.0);

// Equal-sigma two-Gaussian mixture on the I quadrature.
struct BiGaussianFit {
  double mean_b_i = 0.0, mean_b_q = 0.0;
  double mean_notb_i = 0.0, mean_notb_q = 0.0;
  double sigma = 0.0;
  double weight_b = 0.0;
  double snr = 0.0;  // |(mu_b - mu_notb) / (2 sigma)|^2
  double bic_gain = 0.0;  // single-Gaussian BIC minus mixture BIC
  int iterations = 0;
};

BiGaussianFit fit_bi_gaussian(const std::vector<RecordFrame>& frames);
BiGaussianFit fit_bi_gaussian(const std::vector<double>& i_values,
                              const std::vector<double>& q_values);

// |sim - ref| / max(|ref|, 0.01).
double relative_deviation(double sim, double ref);

}  // namespace jumpflight
