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


#include "jumpflight/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <unsupported/Eigen/LevenbergMarquardt>

namespace jumpflight {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sech(double u) { return 1.0 / std::cosh(u); }

struct Series {
  std::vector<double> t, v;
};

Series select(const ConditionalTomogram& tomo, const std::vector<double>& values, double min_count) {
  Series s;
  for (size_t i = 0; i < tomo.grid.size(); ++i) {
    if (tomo.counts[i] < min_count || !std::isfinite(values[i])) continue;
    s.t.push_back(tomo.grid[i]);
    s.v.push_back(values[i]);
  }
  return s;
}

double tail_mean(const std::vector<double>& v, size_t k) {
  k = std::min(k, v.size());
  return std::accumulate(v.end() - k, v.end(), 0.0) / double(k);
}

// First time the series crosses `level`, linearly interpolated; NaN if never.
double crossing(const Series& s, double level) {
  for (size_t i = 1; i < s.t.size(); ++i) {
    const double d0 = s.v[i - 1] - level, d1 = s.v[i] - level;
    if (d0 == 0.0) return s.t[i - 1];
    if ((d0 < 0.0) != (d1 < 0.0)) return s.t[i - 1] + (s.t[i] - s.t[i - 1]) * d0 / (d0 - d1);
  }
  return kNaN;
}

enum class Shape { Tanh, Sech };

// Residual functor over (a, b, c, tau), or (b, c, tau) with a held fixed.
struct CurveFunctor : Eigen::DenseFunctor<double> {
  CurveFunctor(const Series& s, Shape shape, bool fix_a, double a_fixed)
      : Eigen::DenseFunctor<double>(fix_a ? 3 : 4, static_cast<int>(s.t.size())),
        s(s), shape(shape), fix_a(fix_a), a_fixed(a_fixed) {}

  Eigen::Vector4d full(const InputType& x) const {
    return fix_a ? Eigen::Vector4d(a_fixed, x[0], x[1], x[2]) : Eigen::Vector4d(x[0], x[1], x[2], x[3]);
  }
  double model(double t, const Eigen::Vector4d& q) const {
    return shape == Shape::Tanh ? tanh_model(t, q[0], q[1], q[2], q[3]) : sech_model(t, q[0], q[1], q[2], q[3]);
  }
  int operator()(const InputType& x, ValueType& f) const {
    const Eigen::Vector4d q = full(x);
    for (size_t i = 0; i < s.t.size(); ++i) f[i] = model(s.t[i], q) - s.v[i];
    return 0;
  }
  int df(const InputType& x, JacobianType& j) const {
    const Eigen::Vector4d q = full(x);
    for (size_t i = 0; i < s.t.size(); ++i) {
      const Eigen::Vector4d g = shape == Shape::Tanh ? tanh_gradient(s.t[i], q[0], q[1], q[2], q[3])
                                                     : sech_gradient(s.t[i], q[0], q[1], q[2], q[3]);
      if (fix_a) {
        j.row(i) = g.tail<3>().transpose();
      } else {
        j.row(i) = g.transpose();
      }
    }
    return 0;
  }

  const Series& s;
  Shape shape;
  bool fix_a;
  double a_fixed;
};

struct CurveResult {
  Eigen::Vector4d q, err;
  double rss = 0.0;
  int iterations = 0;
  bool degenerate = false;
};

CurveResult fit_curve(const Series& s, Shape shape, Eigen::Vector4d seed, bool fix_a,
                      const TanhSechOptions& opts) {
  CurveFunctor fn(s, shape, fix_a, seed[0]);
  Eigen::VectorXd x = fix_a ? Eigen::VectorXd(seed.tail<3>()) : Eigen::VectorXd(seed);
  Eigen::LevenbergMarquardt<CurveFunctor> lm(fn);
  lm.setXtol(opts.xtol);
  lm.setFtol(1e-14);
  lm.setMaxfev(100 * opts.max_iterations);

  namespace S = Eigen::LevenbergMarquardtSpace;
  S::Status st = lm.minimizeInit(x);
  if (st == S::ImproperInputParameters) throw FitError("least-squares setup rejected the input");
  int it = 0;
  do {
    st = lm.minimizeOneStep(x);
    ++it;
  } while (st == S::Running && it < opts.max_iterations);
  if (st == S::Running || st == S::TooManyFunctionEvaluation || st == S::ImproperInputParameters) {
    std::ostringstream msg;
    msg << (shape == Shape::Tanh ? "tanh" : "sech") << " fit did not converge in " << it
        << " iterations";
    throw FitError(msg.str());
  }

  CurveResult r;
  r.q = fn.full(x);
  r.iterations = it;
  // Fold the sign of tau into (b, c) so that tau > 0.
  if (r.q[3] < 0.0) {
    r.q[3] = -r.q[3];
    r.q[2] = -r.q[2];
    if (shape == Shape::Tanh) r.q[1] = -r.q[1];
  }
  Eigen::VectorXd xf = fix_a ? Eigen::VectorXd(r.q.tail<3>()) : Eigen::VectorXd(r.q);
  Eigen::VectorXd f(fn.values());
  fn(xf, f);
  r.rss = f.squaredNorm();
  Eigen::MatrixXd jac(fn.values(), fn.inputs());
  fn.df(xf, jac);
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jtj);
  const double emax = es.eigenvalues().maxCoeff(), emin = es.eigenvalues().minCoeff();
  r.err.setZero();
  if (!(emin > emax * 1e-14)) {
    r.degenerate = true;
    r.err.setConstant(kNaN);
    return r;
  }
  const int dof = fn.values() - fn.inputs();
  const double s2 = dof > 0 ? r.rss / dof : 0.0;
  const Eigen::VectorXd var = (s2 * jtj.inverse()).diagonal();
  const int off = fix_a ? 1 : 0;
  for (int k = 0; k < fn.inputs(); ++k) r.err[k + off] = std::sqrt(std::max(var[k], 0.0));
  if (std::abs(r.q[1]) <= 2.0 * r.err[1]) r.degenerate = true;
  return r;
}

}  // namespace

double tanh_model(double t, double a, double b, double c, double tau) {
  return a + b * std::tanh(t / tau + c);
}

double sech_model(double t, double a, double b, double c, double tau) {
  return a + b * sech(t / tau + c);
}

Eigen::Vector4d tanh_gradient(double t, double, double b, double c, double tau) {
  const double u = t / tau + c;
  const double s2 = sech(u) * sech(u);
  return {1.0, std::tanh(u), b * s2, -b * s2 * t / (tau * tau)};
}

Eigen::Vector4d sech_gradient(double t, double, double b, double c, double tau) {
  const double u = t / tau + c;
  const double ds = -sech(u) * std::tanh(u);
  return {1.0, sech(u), b * ds, -b * ds * t / (tau * tau)};
}

double z_zero_crossing(const ConditionalTomogram& tomo, double min_count) {
  return crossing(select(tomo, tomo.z, min_count), 0.0);
}

TanhSechFit fit_tanh_sech(const ConditionalTomogram& tomo, bool constrain_a_prime_zero) {
  TanhSechOptions o;
  o.constrain_a_prime_zero = constrain_a_prime_zero;
  return fit_tanh_sech(tomo, o);
}

TanhSechFit fit_tanh_sech(const ConditionalTomogram& tomo, const TanhSechOptions& opts) {
  const Series z = select(tomo, tomo.z, opts.min_count);
  const Series x = select(tomo, tomo.x, opts.min_count);
  if (z.t.size() < 8 || x.t.size() < 8) throw FitError("tomogram fit needs at least 8 grid points");

  const auto [zlo, zhi] = std::minmax_element(z.v.begin(), z.v.end());
  if (*zhi - *zlo < 1e-9) throw FitError("degenerate tomogram: Z is flat");

  // Z seeds: asymptotes, midpoint crossing and the 25-75% rise.
  const double z0 = z.v.front(), z1 = tail_mean(z.v, 3);
  const double a0 = 0.5 * (z0 + z1), b0 = 0.5 * (z1 - z0);
  const double t_mid = crossing(z, a0);
  if (!std::isfinite(t_mid)) throw FitError("tomogram grid does not span the Z transition");
  double tau0 = (crossing(z, a0 + 0.5 * b0) - crossing(z, a0 - 0.5 * b0)) / (2.0 * std::atanh(0.5));
  if (!std::isfinite(tau0) || tau0 <= 0.0) tau0 = 0.25 * (z.t.back() - z.t.front());
  const CurveResult rz = fit_curve(z, Shape::Tanh, {a0, b0, -t_mid / tau0, tau0}, false, opts);

  // X seeds: tail level, peak height and position, half width.
  const double ap0 = opts.constrain_a_prime_zero ? 0.0 : tail_mean(x.v, 3);
  size_t ip = 0;
  for (size_t i = 1; i < x.v.size(); ++i) {
    if (std::abs(x.v[i] - ap0) > std::abs(x.v[ip] - ap0)) ip = i;
  }
  const double bp0 = x.v[ip] - ap0;
  double hw = kNaN;
  for (size_t i = ip + 1; i < x.v.size(); ++i) {
    if (std::abs(x.v[i] - ap0) < 0.5 * std::abs(bp0)) {
      hw = x.t[i] - x.t[ip];
      break;
    }
  }
  double taup0 = hw / std::acosh(2.0);
  if (!std::isfinite(taup0) || taup0 <= 0.0) taup0 = rz.q[3];
  const CurveResult rx = fit_curve(x, Shape::Sech, {ap0, bp0, -x.t[ip] / taup0, taup0},
                                   opts.constrain_a_prime_zero, opts);

  TanhSechFit f;
  f.a = rz.q[0], f.b = rz.q[1], f.c = rz.q[2], f.tau = rz.q[3];
  f.a_err = rz.err[0], f.b_err = rz.err[1], f.c_err = rz.err[2], f.tau_err = rz.err[3];
  f.a_prime = rx.q[0], f.b_prime = rx.q[1], f.c_prime = rx.q[2], f.tau_prime = rx.q[3];
  f.a_prime_err = rx.err[0], f.b_prime_err = rx.err[1], f.c_prime_err = rx.err[2];
  f.tau_prime_err = rx.err[3];
  f.rss_z = rz.rss, f.rss_x = rx.rss;
  f.iterations_z = rz.iterations, f.iterations_x = rx.iterations;
  f.a_prime_fixed = opts.constrain_a_prime_zero;
  f.degenerate_z = rz.degenerate, f.degenerate_x = rx.degenerate;
  return f;
}

// ---------------------------------------------------------------------------
// Exponential mixtures.

namespace {

struct Interval {
  double lo, width;
};

std::vector<Interval> intervals(const std::vector<double>& dwells, double w) {
  std::vector<Interval> out;
  out.reserve(dwells.size());
  for (double t : dwells) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw FitError("dwell times must be finite and >= 0");
    if (w > 0.0) {
      const double lo = std::max(0.0, t - 0.5 * w);
      out.push_back({lo, t + 0.5 * w - lo});
    } else {
      out.push_back({t, 0.0});
    }
  }
  return out;
}

// log of the density (width 0) or interval probability of one exponential.
double log_component(const Interval& s, double rate) {
  if (s.width == 0.0) return std::log(rate) - rate * s.lo;
  return -rate * s.lo + std::log(-std::expm1(-rate * s.width));
}

// Mean of the exponential restricted to the interval.
double conditional_mean(const Interval& s, double rate) {
  if (s.width == 0.0) return s.lo;
  const double x = rate * s.width;
  return s.lo + 1.0 / rate - s.width / std::expm1(x);
}

double mixture_loglik(const std::vector<Interval>& data, double lf, double ls, double w) {
  double ll = 0.0;
  for (const auto& s : data) {
    const double u = std::log(w) + log_component(s, lf);
    const double v = std::log1p(-w) + log_component(s, ls);
    const double m = std::max(u, v);
    ll += m + std::log(std::exp(u - m) + std::exp(v - m));
  }
  return ll;
}

// Seeds from a two-piece line through the log empirical survival curve.
void seed_rates(std::vector<double> t, double& lf, double& ls, double& w) {
  std::sort(t.begin(), t.end());
  const size_t n = t.size();
  const double mean = std::accumulate(t.begin(), t.end(), 0.0) / n;
  lf = 2.0 / mean, ls = 0.5 / mean, w = 0.5;

  std::vector<double> xs, ys;
  const size_t stop = n > 20 ? n - 10 : n;
  const size_t stride = std::max<size_t>(1, stop / 200);
  for (size_t k = 0; k < stop; k += stride) {
    xs.push_back(t[k]);
    ys.push_back(std::log(double(n - k) / n));
  }
  auto line = [&](size_t i0, size_t i1, double& slope, double& icpt) {
    const double m = double(i1 - i0);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = i0; i < i1; ++i) sx += xs[i], sy += ys[i], sxx += xs[i] * xs[i], sxy += xs[i] * ys[i];
    const double den = m * sxx - sx * sx;
    slope = den != 0.0 ? (m * sxy - sx * sy) / den : 0.0;
    icpt = (sy - slope * sx) / m;
    double sse = 0;
    for (size_t i = i0; i < i1; ++i) sse += std::pow(ys[i] - icpt - slope * xs[i], 2);
    return sse;
  };
  if (xs.size() < 8) return;
  double best = std::numeric_limits<double>::infinity(), bs1 = 0, bs2 = 0, bi2 = 0;
  for (size_t k = 3; k + 3 <= xs.size(); ++k) {
    double s1, i1, s2, i2;
    const double sse = line(0, k, s1, i1) + line(k, xs.size(), s2, i2);
    if (sse < best) best = sse, bs1 = s1, bs2 = s2, bi2 = i2;
  }
  if (bs2 < 0.0 && bs1 < bs2) {
    ls = -bs2;
    w = std::clamp(1.0 - std::exp(bi2), 0.05, 0.95);
    lf = std::max((-bs1 - (1.0 - w) * ls) / w, 1.5 * ls);
  }
}

}  // namespace

BiExponentialFit fit_bi_exponential(const std::vector<double>& dwells, const BiExponentialOptions& opts) {
  if (static_cast<long>(dwells.size()) < opts.min_samples) {
    std::ostringstream msg;
    msg << "bi-exponential fit needs at least " << opts.min_samples << " dwells, got " << dwells.size();
    throw FitError(msg.str());
  }
  const auto data = intervals(dwells, opts.bin_width);
  const double n = double(data.size());
  double lf, ls, w;
  seed_rates(dwells, lf, ls, w);

  BiExponentialFit f;
  double ll = mixture_loglik(data, lf, ls, w);
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    double rsum = 0, tf = 0, ts = 0;
    for (const auto& s : data) {
      const double u = std::log(w) + log_component(s, lf);
      const double v = std::log1p(-w) + log_component(s, ls);
      const double r = 1.0 / (1.0 + std::exp(v - u));
      rsum += r;
      tf += r * conditional_mean(s, lf);
      ts += (1.0 - r) * conditional_mean(s, ls);
    }
    w = std::clamp(rsum / n, 1e-12, 1.0 - 1e-12);
    lf = rsum / tf;
    ls = (n - rsum) / ts;
    const double ll_new = mixture_loglik(data, lf, ls, w);
    const bool done = std::abs(ll_new - ll) <= opts.tolerance * std::abs(ll_new);
    ll = ll_new;
    if (done) break;
  }
  if (lf < ls) std::swap(lf, ls), w = 1.0 - w;
  f.rate_fast = lf, f.rate_slow = ls, f.weight_fast = w;
  f.log_likelihood = ll, f.iterations = it, f.n = static_cast<long>(n);

  // Observed information from a central-difference Hessian.
  Eigen::Vector3d p(lf, ls, w), h = 1e-4 * p.cwiseAbs();
  h[2] = std::min(h[2], 0.25 * std::min(w, 1.0 - w));
  auto L = [&](const Eigen::Vector3d& q) { return mixture_loglik(data, q[0], q[1], q[2]); };
  Eigen::Matrix3d hess;
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      Eigen::Vector3d pp = p, pm = p, mp = p, mm = p;
      pp[i] += h[i], pp[j] += h[j];
      pm[i] += h[i], pm[j] -= h[j];
      mp[i] -= h[i], mp[j] += h[j];
      mm[i] -= h[i], mm[j] -= h[j];
      hess(i, j) = hess(j, i) = (L(pp) - L(pm) - L(mp) + L(mm)) / (4.0 * h[i] * h[j]);
    }
  }
  Eigen::LLT<Eigen::Matrix3d> llt(-hess);
  if (llt.info() == Eigen::Success) {
    const Eigen::Matrix3d cov = llt.solve(Eigen::Matrix3d::Identity());
    f.rate_fast_err = std::sqrt(cov(0, 0));
    f.rate_slow_err = std::sqrt(cov(1, 1));
    f.weight_fast_err = std::sqrt(cov(2, 2));
  } else {
    f.rate_fast_err = f.rate_slow_err = f.weight_fast_err = kNaN;
  }

  const double sep = std::hypot(f.rate_fast_err, f.rate_slow_err);
  f.degenerate = !(w > 1e-3 && w < 1.0 - 1e-3) || !std::isfinite(sep) || lf - ls <= 2.0 * sep;
  return f;
}

ExponentialFit fit_single_exponential(const std::vector<double>& dwells, double bin_width) {
  if (dwells.empty()) throw FitError("exponential fit needs at least one dwell");
  const auto data = intervals(dwells, bin_width);
  const double n = double(data.size());
  double rate = n / std::accumulate(dwells.begin(), dwells.end(), 0.0);
  if (!std::isfinite(rate) || rate <= 0.0) throw FitError("dwell times sum to zero");
  for (int it = 0; it < 10000 && bin_width > 0.0; ++it) {
    double tsum = 0;
    for (const auto& s : data) tsum += conditional_mean(s, rate);
    const double next = n / tsum;
    const bool done = std::abs(next - rate) <= 1e-14 * rate;
    rate = next;
    if (done) break;
  }
  ExponentialFit f;
  f.rate = rate;
  f.rate_err = rate / std::sqrt(n);
  f.n = static_cast<long>(n);
  return f;
}

// ---------------------------------------------------------------------------
// Gaussian mixture.

BiGaussianFit fit_bi_gaussian(const std::vector<RecordFrame>& frames) {
  std::vector<double> i, q;
  i.reserve(frames.size());
  q.reserve(frames.size());
  for (const auto& f : frames) i.push_back(f.i_rec), q.push_back(f.q_rec);
  return fit_bi_gaussian(i, q);
}

BiGaussianFit fit_bi_gaussian(const std::vector<double>& iv, const std::vector<double>& qv) {
  const size_t n = iv.size();
  if (n < 10 || qv.size() != n) throw FitError("bi-Gaussian fit needs at least 10 paired samples");
  const double mean = std::accumulate(iv.begin(), iv.end(), 0.0) / n;
  double var = 0.0;
  for (double x : iv) var += (x - mean) * (x - mean);
  var /= n;
  if (!(var > 0.0)) throw FitError("bi-Gaussian fit: data has zero spread");

  std::vector<double> sorted = iv;
  std::sort(sorted.begin(), sorted.end());
  double m1 = sorted[n / 4], m2 = sorted[3 * n / 4], s2 = 0.25 * var, w = 0.5;

  const double log2pi = std::log(2.0 * std::numbers::pi);
  auto loglik = [&](double a, double b, double v, double wt) {
    double ll = 0.0;
    for (double x : iv) {
      const double u = std::log(wt) - 0.5 * (x - a) * (x - a) / v;
      const double z = std::log1p(-wt) - 0.5 * (x - b) * (x - b) / v;
      const double m = std::max(u, z);
      ll += m + std::log(std::exp(u - m) + std::exp(z - m));
    }
    return ll - 0.5 * n * (log2pi + std::log(v));
  };

  double ll = loglik(m1, m2, s2, w);
  std::vector<double> r(n);
  int it = 0;
  for (; it < 10000; ++it) {
    double rs = 0, s1x = 0, s2x = 0;
    for (size_t k = 0; k < n; ++k) {
      const double x = iv[k];
      const double u = std::log(w) - 0.5 * (x - m1) * (x - m1) / s2;
      const double z = std::log1p(-w) - 0.5 * (x - m2) * (x - m2) / s2;
      r[k] = 1.0 / (1.0 + std::exp(z - u));
      rs += r[k], s1x += r[k] * x, s2x += (1.0 - r[k]) * x;
    }
    if (rs <= 0.0 || rs >= n) break;
    m1 = s1x / rs, m2 = s2x / (n - rs);
    double ss = 0;
    for (size_t k = 0; k < n; ++k) {
      ss += r[k] * (iv[k] - m1) * (iv[k] - m1) + (1.0 - r[k]) * (iv[k] - m2) * (iv[k] - m2);
    }
    s2 = std::max(ss / n, 1e-300);
    w = std::clamp(rs / n, 1e-12, 1.0 - 1e-12);
    const double ll_new = loglik(m1, m2, s2, w);
    const bool done = std::abs(ll_new - ll) <= 1e-12 * std::abs(ll_new);
    ll = ll_new;
    if (done) break;
  }

  const double ll1 = -0.5 * n * (log2pi + std::log(var) + 1.0);
  const double gain = (-2.0 * ll1 + 2.0 * std::log(double(n))) - (-2.0 * ll + 4.0 * std::log(double(n)));
  if (gain < 10.0 || std::min(w, 1.0 - w) < 0.005) {
    std::ostringstream msg;
    msg << "record histogram looks unimodal (BIC gain " << gain << ", minor weight "
        << std::min(w, 1.0 - w) << ")";
    throw FitError(msg.str());
  }

  BiGaussianFit f;
  const bool first_is_b = m1 >= m2;
  double qb = 0, qn = 0, wb = 0;
  for (size_t k = 0; k < n; ++k) {
    const double rb = first_is_b ? r[k] : 1.0 - r[k];
    qb += rb * qv[k], qn += (1.0 - rb) * qv[k], wb += rb;
  }
  f.mean_b_i = first_is_b ? m1 : m2;
  f.mean_notb_i = first_is_b ? m2 : m1;
  f.mean_b_q = wb > 0 ? qb / wb : kNaN;
  f.mean_notb_q = wb < n ? qn / (n - wb) : kNaN;
  f.sigma = std::sqrt(s2);
  f.weight_b = wb / n;
  f.snr = std::pow((f.mean_b_i - f.mean_notb_i) / (2.0 * f.sigma), 2);
  f.bic_gain = gain;
  f.iterations = it;
  return f;
}

double relative_deviation(double sim, double ref) {
  return std::abs(sim - ref) / std::max(std::abs(ref), 0.01);
}

}  // namespace jumpflight
