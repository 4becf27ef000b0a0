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


// Command-line entry point. Every run writes its artifacts plus a
// manifest.json into the output directory.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "jumpflight/analytic.hpp"
#include "jumpflight/config.hpp"
#include "jumpflight/fit.hpp"
#include "jumpflight/io.hpp"
#include "jumpflight/lindblad.hpp"
#include "jumpflight/model.hpp"
#include "jumpflight/params.hpp"
#include "jumpflight/protocol.hpp"
#include "jumpflight/record.hpp"

using namespace jumpflight;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kToolVersion = "0.1.0";
constexpr std::uint64_t kDefaultSeed = 20250101;
constexpr double kTau = 2.0 * M_PI;

// Exit codes.
constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flags shared by every subcommand.
struct CommonFlags {
  std::string config = "simulation";
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::string out = "out";
  std::vector<std::string> channels;
};

// Flags of the simulation-style subcommands; only some apply to each.
struct RunFlags {
  std::optional<double> dt_on_us, dt_off_us, theta_i, phi_i;
  std::optional<long> events;
  std::optional<long> trajectories;
  std::optional<double> duration_us;
  std::optional<double> dt_ns;
  std::optional<double> t_max_us;
  double t_step_us = 0.05;
  std::string flavor = "coherent";
  double gamma_b_measure = kTau * 9.0;
  std::string input;
  std::string kind = "tomogram";
  std::string column = "dwell_us";
  std::string reference;
  bool constrain_a_prime = false;
  bool control = true;
  std::string target;
};

struct Session {
  CommonFlags common;
  RunFlags run;
  std::string subcommand;
  std::vector<std::string> argv;
  Config config;
  std::uint64_t seed = kDefaultSeed;
  fs::path out_dir;
  std::vector<std::string> outputs;
  std::string started;

  // Opens out_dir/name for writing and records it in the manifest.
  std::ofstream open(const std::string& name) {
    std::ofstream f(out_dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (out_dir / name).string());
    outputs.push_back(name);
    return f;
  }

  void write_json(const std::string& name, const ordered_json& j) {
    auto f = open(name);
    f << j.dump(2) << '\n';
  }

  RunOptions run_options() const {
    RunOptions o;
    o.seed = seed;
    o.workers = common.workers;
    o.sse.channels = channels();
    if (run.dt_ns) o.sse.dt = *run.dt_ns * 1e-3;
    return o;
  }

  ChannelSet channels() const {
    ChannelSet s = ChannelSet::all();
    for (const auto& item : common.channels) {
      if (item == "all") s = ChannelSet::all();
      else if (item == "none") s = ChannelSet::none();
      else if (!item.empty() && item[0] == '-') s = s.without(channel_from_name(item.substr(1)));
      else s = s.with(channel_from_name(item));
    }
    return s;
  }

  // Protocol from the config with command-line overrides.
  ProtocolConfig protocol(ProtocolMode mode) const {
    ProtocolConfig c = config.protocol;
    c.mode = mode;
    if (run.dt_on_us) c.dt_on = *run.dt_on_us;
    if (run.dt_off_us) c.dt_off = *run.dt_off_us;
    if (run.theta_i) c.theta_i = *run.theta_i;
    if (run.phi_i) c.phi_i = *run.phi_i;
    check_protocol(c);
    return c;
  }
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Config resolve_config(const std::string& source) {
  if (fs::exists(source)) return load_config(source);
  try {
    Config c;
    c.params = preset(source);
    return c;
  } catch (const ParamError&) {
    throw UsageError("--config: '" + source + "' is neither a file nor a preset");
  }
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("JUMPFLIGHT_SEED")) {
    try {
      std::size_t used = 0;
      const std::uint64_t v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError("JUMPFLIGHT_SEED is not an unsigned 64-bit integer");
  }
  return kDefaultSeed;
}

void write_manifest(Session& s) {
  ordered_json m;
  m["tool"] = "jumpflight";
  m["version"] = kToolVersion;
  m["subcommand"] = s.subcommand;
  m["argv"] = s.argv;
  m["config_hash"] = config_hash(s.config);
  m["seed"] = s.seed;
  m["workers"] = s.common.workers;
  m["started_utc"] = s.started;
  m["finished_utc"] = utc_now();
  m["outputs"] = s.outputs;
  std::ofstream f(s.out_dir / "manifest.json", std::ios::binary);
  f << m.dump(2) << '\n';
}

AtomCavityKet bright_start(const SystemParams& p) {
  return AtomCavityKet::product(kB, coherent_state(steady_field(p, kB), p.n_fock));
}

ordered_json thresholds_json(const Thresholds& th) {
  return {{"i_b", th.i_b}, {"i_bbar", th.i_bbar}, {"q_b", th.q_b}};
}

// Reference fit parameters: simulated and measured columns.
struct TableColumn {
  std::map<std::string, double> simulation;
  std::map<std::string, double> experiment;
};

const TableColumn& table_reference(const std::string& name) {
  static const std::map<std::string, TableColumn> tables{
      {"tableS3a",
       {{{"a", -0.07}, {"a_prime", -0.22}, {"b", 0.95}, {"b_prime", 0.91},
         {"c", -2.27}, {"c_prime", -2.05}, {"tau", 1.65}, {"tau_prime", 1.76}},
        {{"a", -0.07}, {"a_prime", -0.21}, {"b", 0.94}, {"b_prime", 0.93},
         {"c", -2.32}, {"c_prime", -2.04}, {"tau", 1.64}, {"tau_prime", 1.74}}}},
      {"tableS3b",
       {{{"a", -0.10}, {"a_prime", 0.0}, {"b", 0.91}, {"b_prime", 0.60},
         {"c", -2.10}, {"c_prime", -2.05}, {"tau", 2.03}, {"tau_prime", 1.92}},
        {{"a", -0.11}, {"a_prime", 0.0}, {"b", 0.92}, {"b_prime", 0.61},
         {"c", -1.96}, {"c_prime", -1.97}, {"tau", 2.17}, {"tau_prime", 1.98}}}}};
  const auto it = tables.find(name);
  if (it == tables.end()) throw UsageError("unknown reference table '" + name + "'");
  return it->second;
}

std::map<std::string, double> fit_fields(const TanhSechFit& f) {
  return {{"a", f.a},           {"a_prime", f.a_prime}, {"b", f.b},     {"b_prime", f.b_prime},
          {"c", f.c},           {"c_prime", f.c_prime}, {"tau", f.tau}, {"tau_prime", f.tau_prime}};
}

ordered_json tanh_sech_json(const TanhSechFit& f, const std::string& reference) {
  const std::map<std::string, double> err{
      {"a", f.a_err}, {"a_prime", f.a_prime_err}, {"b", f.b_err}, {"b_prime", f.b_prime_err},
      {"c", f.c_err}, {"c_prime", f.c_prime_err}, {"tau", f.tau_err}, {"tau_prime", f.tau_prime_err}};
  ordered_json params = ordered_json::array();
  const auto values = fit_fields(f);
  for (const char* name : {"a", "a_prime", "b", "b_prime", "c", "c_prime", "tau", "tau_prime"}) {
    ordered_json row{{"parameter", name}, {"value", values.at(name)}, {"stderr", err.at(name)}};
    if (!reference.empty()) {
      const TableColumn& t = table_reference(reference);
      row["reference_simulation"] = t.simulation.at(name);
      row["reference_experiment"] = t.experiment.at(name);
      row["error_vs_experiment"] = relative_deviation(values.at(name), t.experiment.at(name));
    }
    params.push_back(row);
  }
  ordered_json j;
  j["model"] = "Z = a + b tanh(t/tau + c), X = a' + b' sech(t/tau' + c')";
  j["parameters"] = params;
  if (!reference.empty()) {
    j["reference"] = reference;
    j["error_convention"] = "|sim - exp| / max(|exp|, 0.01), this tool's own convention";
  }
  j["a_prime_fixed"] = f.a_prime_fixed;
  j["rss_z"] = f.rss_z;
  j["rss_x"] = f.rss_x;
  j["degenerate_z"] = f.degenerate_z;
  j["degenerate_x"] = f.degenerate_x;
  return j;
}

ordered_json bi_exponential_json(const BiExponentialFit& f) {
  return {{"n", f.n},
          {"rate_fast_per_us", f.rate_fast},
          {"rate_fast_stderr", f.rate_fast_err},
          {"rate_slow_per_us", f.rate_slow},
          {"rate_slow_stderr", f.rate_slow_err},
          {"weight_fast", f.weight_fast},
          {"weight_fast_stderr", f.weight_fast_err},
          {"time_fast_us", f.rate_fast > 0 ? 1.0 / f.rate_fast : 0.0},
          {"time_slow_us", f.rate_slow > 0 ? 1.0 / f.rate_slow : 0.0},
          {"log_likelihood", f.log_likelihood},
          {"degenerate", f.degenerate}};
}

ordered_json exponential_json(const ExponentialFit& f) {
  return {{"n", f.n},
          {"rate_per_us", f.rate},
          {"rate_stderr", f.rate_err},
          {"time_constant_us", f.rate > 0 ? f.time_constant() : 0.0}};
}

ordered_json outcome_json(const ReverseOutcome& o) {
  return {{"delta_t_catch", o.delta_t_catch},
          {"theta_i", o.theta_i},
          {"phi_i", o.phi_i},
          {"p_g", o.p_g},
          {"p_d", o.p_d},
          {"n_trials", o.n_trials},
          {"p_g_stderr", o.p_g_stderr},
          {"p_d_stderr", o.p_d_stderr},
          {"p_g_raw", o.p_g_raw},
          {"p_d_raw", o.p_d_raw},
          {"p_b", o.p_b}};
}

void write_dwells(Session& s, const std::string& name, const std::vector<double>& dwells) {
  auto f = s.open(name);
  f << "dwell_us\n";
  for (double d : dwells) f << format_double(d) << '\n';
}

// theory: closed-form counting-model quantities on a time grid.
int cmd_theory(Session& s) {
  const SystemParams& p = s.config.params;
  const bool coherent = s.run.flavor == "coherent";
  if (!coherent && s.run.flavor != "incoherent") throw UsageError("--flavor: coherent or incoherent");
  const CountingRegime r = coherent ? CountingRegime::coherent_from(p, s.run.gamma_b_measure)
                                    : CountingRegime::incoherent_from(p);
  const double t_mid = coherent ? t_mid_coherent(r) : t_mid_incoherent(r);
  const double snr = snr_dispersive(p);
  const double eta_disc = discrimination_efficiency(snr);
  const double eta_eff = click_detection_efficiency(p);
  const double t_max = s.run.t_max_us.value_or(2.0 * t_mid);
  if (!(s.run.t_step_us > 0.0) || !(t_max > 0.0)) throw UsageError("time grid must be positive");
  auto f = s.open("theory.csv");
  f << "t_us,w_dg,pole_crossed,z,x,y,dt_mid_us,snr,eta_disc,eta_eff_clk\n";
  const long n = static_cast<long>(std::floor(t_max / s.run.t_step_us + 1e-9));
  for (long k = 0; k <= n; ++k) {
    const double t = k * s.run.t_step_us;
    double w = 0.0;
    bool pole = false;
    if (coherent) {
      w = w_dg_coherent(t, r);
    } else {
      const IncoherentW iw = w_dg_incoherent(t, r);
      w = iw.value;
      pole = iw.pole_crossed;
    }
    const GdBloch b = bloch_from_w(w);
    f << format_double(t) << ',' << format_double(w) << ',' << (pole ? 1 : 0) << ','
      << format_double(b.z) << ',' << format_double(b.x) << ',' << format_double(b.y) << ','
      << format_double(t_mid) << ',' << format_double(snr) << ',' << format_double(eta_disc)
      << ',' << format_double(eta_eff) << '\n';
  }
  const RegimeCheck rc = check_regime(r);
  if (!rc.ok) std::cerr << "warning: regime separation " << rc.separation << ": " << rc.note << '\n';
  return kExitOk;
}

// lindblad: ensemble populations from the master equation.
int cmd_lindblad(Session& s) {
  const SystemParams& p = s.config.params;
  const double duration = s.run.duration_us.value_or(5.0);
  const double step = s.run.t_step_us;
  if (!(duration > 0.0) || !(step > 0.0)) throw UsageError("duration and grid step must be positive");
  std::vector<double> grid;
  const long n = static_cast<long>(std::floor(duration / step + 1e-9));
  for (long k = 0; k <= n; ++k) grid.push_back(k * step);
  LindbladOptions lo;
  lo.channels = s.channels();
  const double dt = s.run.dt_ns ? *s.run.dt_ns * 1e-3 : 1.0 / (20.0 * max_rate(p, lo));
  const auto rho = lindblad_solve(DensityMatrix::pure(bright_start(p)), p, grid, dt, lo);
  auto f = s.open("populations.csv");
  write_populations_csv(f, rho);
  return kExitOk;
}

// simulate: raw trajectories with their increments, frames and true state.
int cmd_simulate(Session& s) {
  const SystemParams& p = s.config.params;
  const long n_traj = s.run.trajectories.value_or(1);
  const double duration = s.run.duration_us.value_or(50.0);
  if (n_traj < 1 || !(duration > 0.0)) throw UsageError("need trajectories >= 1 and duration > 0");
  RunOptions o = s.run_options();
  SseOptions sse = o.sse;
  sse.max_splits = monitored_sse_options().max_splits;
  const Thresholds th = resolve_thresholds(p, s.config.protocol, o);
  ordered_json summary;
  summary["thresholds"] = thresholds_json(th);
  summary["dt_us"] = sse.dt;
  ordered_json runs = ordered_json::array();
  for (long k = 0; k < n_traj; ++k) {
    const std::string tag = std::to_string(k);
    TrajectoryStream stream =
        run_trajectory(p, bright_start(p), duration, RngStream(s.seed, k), sse);
    FilterState fs;
    FrameIntegrator integ(p, sse.dt);
    std::vector<RecordFrame> frames;
    std::ostringstream truth;
    truth << "t_us,p_g,p_b,p_d,p_f,z,x,y,n_photons\n";
    auto inc = s.open("increments_" + tag + ".csv");
    inc << "t_us,dzeta_re,dzeta_im,jump\n";
    long jumps = 0;
    while (auto rec = stream.next()) {
      const TrajectoryStep& st = rec->step;
      inc << format_double(rec->t) << ',' << format_double(st.d_zeta.real()) << ','
          << format_double(st.d_zeta.imag()) << ','
          << (st.jumps_fired.empty() ? "" : channel_name(st.jumps_fired.front())) << '\n';
      jumps += static_cast<long>(st.jumps_fired.size());
      fs = filter_quadratures(fs, st.d_zeta, p, st.dt);
      if (auto fr = integ.push(rec->t, fs)) {
        frames.push_back(*fr);
        const AtomCavityKet& k = stream.ket();
        const double norm = k.norm2();
        truth << format_double(fr->t);
        for (int l = 0; l < kLevels; ++l) truth << ',' << format_double(k.population(l) / norm);
        truth << ',' << format_double(rec->truth.bloch.z) << ','
              << format_double(rec->truth.bloch.x) << ',' << format_double(rec->truth.bloch.y)
              << ',' << format_double(k.mean_photons() / norm) << '\n';
      }
    }
    label_frames(frames, th, Label::B);
    {
      auto f = s.open("frames_" + tag + ".csv");
      write_frames_csv(f, frames);
    }
    {
      auto f = s.open("truth_" + tag + ".csv");
      f << truth.str();
    }
    runs.push_back({{"trajectory", k}, {"frames", frames.size()}, {"jumps", jumps}});
  }
  summary["trajectories"] = runs;
  s.write_json("simulate.json", summary);
  return kExitOk;
}

// record: replays a stored increment stream through filter, frames, labels.
int cmd_record(Session& s) {
  const SystemParams& p = s.config.params;
  if (s.run.input.empty()) throw UsageError("record needs --input increments.csv");
  std::ifstream in(s.run.input);
  if (!in) throw UsageError("cannot read " + s.run.input);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::istringstream a(text), b(text), c(text);
  const auto t = read_column_csv(a, "t_us");
  const auto re = read_column_csv(b, "dzeta_re");
  const auto im = read_column_csv(c, "dzeta_im");
  if (t.size() < 2) throw UsageError("increment stream needs at least two rows");
  const double dt = s.run.dt_ns ? *s.run.dt_ns * 1e-3 : (t.back() - t.front()) / (t.size() - 1);
  std::vector<cplx> dz(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) dz[i] = {re[i], im[i]};
  std::vector<RecordFrame> frames = integrate_frames(dz, p, dt);
  const Thresholds th = resolve_thresholds(p, s.config.protocol, s.run_options());
  label_frames(frames, th, Label::B);
  const auto clicks = detect_clicks(frames, Label::B);
  const auto not_b = dwell_times(clicks, DwellKind::NotB);
  const auto bright = dwell_times(clicks, DwellKind::B);
  {
    auto f = s.open("frames.csv");
    write_frames_csv(f, frames);
  }
  {
    auto f = s.open("clicks.csv");
    write_clicks_csv(f, clicks);
  }
  {
    auto f = s.open("histogram_not_b.csv");
    write_histogram_csv(f, dwell_histogram(not_b, p.t_int, DwellKind::NotB));
  }
  {
    auto f = s.open("histogram_b.csv");
    write_histogram_csv(f, dwell_histogram(bright, p.t_int, DwellKind::B));
  }
  s.write_json("record.json", {{"dt_us", dt},
                               {"frames", frames.size()},
                               {"clicks", clicks.size()},
                               {"thresholds", thresholds_json(th)}});
  return kExitOk;
}

// catch: conditional tomogram plus its tanh/sech fit.
int cmd_catch(Session& s) {
  const SystemParams& p = s.config.params;
  const ProtocolConfig c = s.protocol(ProtocolMode::Catch);
  const long events = s.run.events.value_or(1000);
  const CatchResult r = run_catch(p, c, events, s.run_options());
  {
    auto f = s.open("tomogram.csv");
    write_tomogram_csv(f, r.tomogram);
  }
  ordered_json j;
  j["events"] = r.events;
  j["simulated_us"] = r.simulated_us;
  j["dt_on_us"] = c.dt_on;
  j["dt_off_us"] = c.dt_off;
  try {
    TanhSechOptions fo;
    fo.constrain_a_prime_zero = s.run.constrain_a_prime;
    j["fit"] = tanh_sech_json(fit_tanh_sech(r.tomogram, fo), s.run.reference);
    j["z_zero_crossing_us"] = z_zero_crossing(r.tomogram);
  } catch (const FitError& e) {
    j["fit_error"] = e.what();
  }
  s.write_json("fit.json", j);
  return kExitOk;
}

// reverse: pulse at the catch time, with the random-time control.
int cmd_reverse(Session& s) {
  const SystemParams& p = s.config.params;
  const ProtocolConfig c = s.protocol(ProtocolMode::Reverse);
  const long trials = s.run.events.value_or(250);
  const ReverseReport r = run_reverse_pulses(p, c, {Pulse{c.theta_i, c.phi_i}}, trials,
                                             s.run_options(), s.run.control);
  ordered_json j = outcome_json(r.conditioned.front());
  if (s.run.control) j["control"] = outcome_json(r.control.front());
  j["simulated_us"] = r.simulated_us;
  s.write_json("outcome.json", j);
  return kExitOk;
}

// free: unconditioned monitoring with dwell statistics.
int cmd_free(Session& s) {
  const SystemParams& p = s.config.params;
  const double duration = s.run.duration_us.value_or(2000.0);
  const FreeRunResult r = run_free(p, duration, s.run_options());
  {
    auto f = s.open("frames.csv");
    write_frames_csv(f, r.frames);
  }
  {
    auto f = s.open("clicks.csv");
    write_clicks_csv(f, r.clicks);
  }
  {
    auto f = s.open("histogram_not_b.csv");
    write_histogram_csv(f, r.not_b_histogram);
  }
  {
    auto f = s.open("histogram_b.csv");
    write_histogram_csv(f, r.b_histogram);
  }
  write_dwells(s, "dwells_not_b.csv", r.not_b_dwells);
  write_dwells(s, "dwells_b.csv", r.b_dwells);
  ordered_json j{{"duration_us", r.duration},
                 {"frames", r.frames.size()},
                 {"clicks", r.clicks.size()},
                 {"dark_jumps", r.dark_jumps}};
  try {
    BiExponentialOptions bo;
    bo.bin_width = p.t_int;
    j["not_b_dwells"] = bi_exponential_json(fit_bi_exponential(r.not_b_dwells, bo));
  } catch (const FitError& e) {
    j["not_b_fit_error"] = e.what();
  }
  try {
    j["b_dwells"] = exponential_json(fit_single_exponential(r.b_dwells, p.t_int));
  } catch (const FitError& e) {
    j["b_fit_error"] = e.what();
  }
  s.write_json("summary.json", j);
  return kExitOk;
}

// fit: reads a stored artifact and writes a JSON fit report.
int cmd_fit(Session& s) {
  if (s.run.input.empty()) throw UsageError("fit needs --input PATH");
  std::ifstream in(s.run.input);
  if (!in) throw UsageError("cannot read " + s.run.input);
  ordered_json j;
  j["input"] = s.run.input;
  j["kind"] = s.run.kind;
  if (s.run.kind == "tomogram") {
    TanhSechOptions fo;
    fo.constrain_a_prime_zero = s.run.constrain_a_prime;
    const ConditionalTomogram t = read_tomogram_csv(in);
    j["fit"] = tanh_sech_json(fit_tanh_sech(t, fo), s.run.reference);
    j["z_zero_crossing_us"] = z_zero_crossing(t);
  } else if (s.run.kind == "dwells" || s.run.kind == "bright-dwells") {
    const auto d = read_column_csv(in, s.run.column);
    const double bin = s.config.params.t_int;
    j["fit"] = s.run.kind == "dwells" ? bi_exponential_json(fit_bi_exponential(d, {bin}))
                                      : exponential_json(fit_single_exponential(d, bin));
  } else if (s.run.kind == "frames") {
    const BiGaussianFit g = fit_bi_gaussian(read_frames_csv(in));
    j["fit"] = {{"mean_b_i", g.mean_b_i},       {"mean_b_q", g.mean_b_q},
                {"mean_notb_i", g.mean_notb_i}, {"mean_notb_q", g.mean_notb_q},
                {"sigma", g.sigma},             {"weight_b", g.weight_b},
                {"snr", g.snr},                 {"bic_gain", g.bic_gain}};
  } else {
    throw UsageError("--kind: tomogram, dwells, bright-dwells or frames");
  }
  s.write_json("fit.json", j);
  return kExitOk;
}

// repro: desk-scale pipelines scored against the acceptance tolerances.
struct Check {
  std::string name;
  double value = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  bool relative = false;
  bool pass() const {
    const double d = std::abs(value - target);
    return relative ? d <= tolerance * std::abs(target) : d <= tolerance;
  }
};

ordered_json checks_json(const std::vector<Check>& cs, bool& all) {
  ordered_json arr = ordered_json::array();
  for (const Check& c : cs) {
    all = all && c.pass();
    arr.push_back({{"check", c.name},
                   {"value", c.value},
                   {"target", c.target},
                   {"tolerance", c.tolerance},
                   {"relative", c.relative},
                   {"diff", c.value - c.target},
                   {"pass", c.pass()}});
    std::cout << (c.pass() ? "PASS " : "FAIL ") << c.name << " = " << c.value << " (target "
              << c.target << " +- " << c.tolerance << (c.relative ? " rel" : "") << ")\n";
  }
  return arr;
}

ProtocolConfig plain_catch(double on, double off) {
  ProtocolConfig c;
  c.dt_on = on;
  c.dt_off = off;
  return c;
}

std::vector<Check> repro_snr(Session& s) {
  const SystemParams p = preset("device");
  const double snr = snr_dispersive(p);
  std::vector<RecordFrame> frames = pinned_record(p, kB, 3000, RngStream(s.seed, 0));
  const auto dark = pinned_record(p, kG, 3000, RngStream(s.seed, 1));
  frames.insert(frames.end(), dark.begin(), dark.end());
  {
    auto f = s.open("pinned_frames.csv");
    write_frames_csv(f, frames);
  }
  const BiGaussianFit g = fit_bi_gaussian(frames);
  return {{"snr_analytic", snr, 4.3, 0.6, false},
          {"snr_fitted_vs_analytic", g.snr, snr, 0.2, true},
          {"eta_disc_at_4.3", discrimination_efficiency(4.3), 0.98, 0.005, false},
          {"eta_eff_clk", click_detection_efficiency(p), 0.90, 0.02, false}};
}

std::vector<Check> repro_fig2b(Session& s) {
  const SystemParams& p = s.config.params;
  const FreeRunResult r = run_free(p, s.run.duration_us.value_or(45000.0), s.run_options());
  {
    auto f = s.open("histogram_not_b.csv");
    write_histogram_csv(f, r.not_b_histogram);
  }
  {
    auto f = s.open("histogram_b.csv");
    write_histogram_csv(f, r.b_histogram);
  }
  BiExponentialOptions bo;
  bo.bin_width = p.t_int;
  const BiExponentialFit f = fit_bi_exponential(r.not_b_dwells, bo);
  const ExponentialFit e = fit_single_exponential(r.b_dwells, p.t_int);
  return {{"dark_jumps_at_least_50", r.dark_jumps >= 50 ? 1.0 : 0.0, 1.0, 0.0, false},
          {"gamma_bg_click_per_us", f.rate_fast, 1.0 / 0.99, 0.25, true},
          {"gamma_gd_per_us", f.rate_slow, 1.0 / 30.8, 0.30, true},
          {"tau_b_us", e.time_constant(), 4.2, 0.30, true}};
}

std::vector<Check> tomogram_checks(Session& s, const SystemParams& p, const ProtocolConfig& c,
                                   long default_events, bool constrained,
                                   const std::string& table) {
  const CatchResult r = run_catch(p, c, s.run.events.value_or(default_events), s.run_options());
  {
    auto f = s.open("tomogram.csv");
    write_tomogram_csv(f, r.tomogram);
  }
  TanhSechOptions fo;
  fo.constrain_a_prime_zero = constrained;
  const TanhSechFit fit = fit_tanh_sech(r.tomogram, fo);
  s.write_json("fit.json", tanh_sech_json(fit, table));
  const auto v = fit_fields(fit);
  const auto& ref = table_reference(table).simulation;
  // Widened desk-scale tolerances.
  const std::map<std::string, double> tol{{"a", 0.05},  {"a_prime", 0.10}, {"b", 0.07},
                                          {"b_prime", 0.08}, {"c", 0.5},   {"c_prime", 0.5},
                                          {"tau", 0.4},  {"tau_prime", 0.5}};
  std::vector<Check> out;
  for (const char* n : {"a", "a_prime", "b", "b_prime", "c", "c_prime", "tau", "tau_prime"}) {
    if (constrained && std::string(n) == "a_prime") continue;
    out.push_back({n, v.at(n), ref.at(n), tol.at(n), false});
  }
  return out;
}

std::vector<Check> repro_fig3b(Session& s) {
  std::vector<Check> cs = tomogram_checks(s, simulation_params(), plain_catch(10.4, 0.0), 10000,
                                          false, "tableS3a");
  std::ifstream in(s.out_dir / "tomogram.csv");
  cs.push_back({"z_zero_crossing_us", z_zero_crossing(read_tomogram_csv(in)), 3.95, 0.5, false});
  return cs;
}

std::vector<Check> repro_fig4c(Session& s) {
  const SystemParams p = simulation_params();
  const long trials = s.run.events.value_or(250);
  auto f = s.open("reverse_sweep.csv");
  f << "delta_t_catch_us,p_g,p_g_stderr,p_d,p_d_stderr,n_trials\n";
  std::vector<Check> cs;
  for (int frames : {5, 10, 15, 20}) {
    const double dt_catch = frames * p.t_int;
    const ReverseReport r = run_reverse_pulses(p, plain_catch(dt_catch, 0.0),
                                               {Pulse{M_PI / 2, M_PI / 2}}, trials,
                                               s.run_options(), frames == 15);
    const ReverseOutcome& o = r.conditioned.front();
    f << format_double(dt_catch) << ',' << format_double(o.p_g) << ','
      << format_double(o.p_g_stderr) << ',' << format_double(o.p_d) << ','
      << format_double(o.p_d_stderr) << ',' << o.n_trials << '\n';
    if (frames == 15) {
      cs.push_back({"p_g_at_15_frames", o.p_g, 0.825, 0.075, false});
      cs.push_back({"control_separation_at_least_0.15",
                    std::abs(o.p_g - r.control.front().p_g) >= 0.15 ? 1.0 : 0.0, 1.0, 0.0,
                    false});
    }
  }
  return cs;
}

int cmd_repro(Session& s) {
  const std::map<std::string, std::function<std::vector<Check>(Session&)>> targets{
      {"fig2b", repro_fig2b},
      {"fig3b", repro_fig3b},
      {"fig3c",
       [](Session& x) {
         return tomogram_checks(x, simulation_params_dark_off(), plain_catch(2.0, 8.4), 10000,
                                true, "tableS3b");
       }},
      {"fig4c", repro_fig4c},
      {"tableS3a",
       [](Session& x) {
         return tomogram_checks(x, simulation_params(), plain_catch(10.4, 0.0), 1000, false,
                                "tableS3a");
       }},
      {"tableS3b",
       [](Session& x) {
         return tomogram_checks(x, simulation_params_dark_off(), plain_catch(2.0, 8.4), 1000,
                                true, "tableS3b");
       }},
      {"snr", repro_snr}};
  const auto it = targets.find(s.run.target);
  if (it == targets.end()) {
    throw UsageError("unknown repro target '" + s.run.target +
                     "'; expected fig2b, fig3b, fig3c, fig4c, tableS3a, tableS3b or snr");
  }
  const std::vector<Check> cs = it->second(s);
  bool all = true;
  ordered_json j;
  j["target"] = s.run.target;
  j["checks"] = checks_json(cs, all);
  j["pass"] = all;
  s.write_json("report.json", j);
  std::cout << "repro " << s.run.target << ": " << (all ? "PASS" : "FAIL") << '\n';
  return all ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"jumpflight: monitored three-level atom trajectories, catch and reverse"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  Session s;
  for (int i = 0; i < argc; ++i) s.argv.emplace_back(argv[i]);

  auto common = [&](CLI::App* c) {
    c->add_option("--config", s.common.config, "config file or preset name")
        ->capture_default_str();
    c->add_option("--seed", s.common.seed, "master seed; falls back to JUMPFLIGHT_SEED");
    c->add_option("--workers", s.common.workers, "worker threads")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c->add_option("--out", s.common.out, "output directory")->capture_default_str();
    c->add_option("--channels", s.common.channels,
                  "imperfection channels, applied in order: all, none, NAME, -NAME")
        ->delimiter(',');
  };
  auto protocol_flags = [&](CLI::App* c) {
    c->add_option("--dt-on-us", s.run.dt_on_us, "dark drive on-window after the click");
    c->add_option("--dt-off-us", s.run.dt_off_us, "dark drive off-window");
    c->add_option("--theta-i", s.run.theta_i, "intervention rotation angle, rad");
    c->add_option("--phi-i", s.run.phi_i, "intervention rotation axis, rad");
    c->add_option("--events", s.run.events, "catch samples or reverse trials");
    c->add_option("--dt-ns", s.run.dt_ns, "integration step, ns");
  };

  std::map<std::string, std::function<int(Session&)>> handlers;
  auto add = [&](const char* name, const char* help, std::function<int(Session&)> fn) {
    CLI::App* c = app.add_subcommand(name, help);
    common(c);
    handlers[name] = std::move(fn);
    return c;
  };

  CLI::App* theory = add("theory", "closed-form counting-model table", cmd_theory);
  theory->add_option("--flavor", s.run.flavor, "coherent or incoherent BG drive")
      ->capture_default_str();
  theory->add_option("--gamma-b-measure", s.run.gamma_b_measure,
                     "bright-level measurement rate for the coherent form, rad/us")
      ->capture_default_str();
  theory->add_option("--t-max-us", s.run.t_max_us, "grid end (default twice the mid-flight time)");
  theory->add_option("--t-step-us", s.run.t_step_us, "grid step")->capture_default_str();

  CLI::App* lind = add("lindblad", "master-equation populations", cmd_lindblad);
  lind->add_option("--duration-us", s.run.duration_us, "end time (default 5)");
  lind->add_option("--t-step-us", s.run.t_step_us, "output grid step")->capture_default_str();
  lind->add_option("--dt-ns", s.run.dt_ns, "integration step, ns");

  CLI::App* sim = add("simulate", "raw monitored trajectories", cmd_simulate);
  sim->add_option("--trajectories", s.run.trajectories, "number of trajectories (default 1)");
  sim->add_option("--duration-us", s.run.duration_us, "duration per trajectory (default 50)");
  sim->add_option("--dt-ns", s.run.dt_ns, "integration step, ns");

  CLI::App* rec = add("record", "replay an increment stream through the pipeline", cmd_record);
  rec->add_option("--input", s.run.input, "increments CSV (t_us,dzeta_re,dzeta_im)")->required();
  rec->add_option("--dt-ns", s.run.dt_ns, "step of the stream, ns (default from t_us)");

  CLI::App* cat = add("catch", "conditional tomogram of the flight", cmd_catch);
  protocol_flags(cat);
  cat->add_flag("--constrain-a-prime", s.run.constrain_a_prime, "fix the X offset at zero");
  cat->add_option("--reference", s.run.reference, "reference table: tableS3a or tableS3b");

  CLI::App* rev = add("reverse", "reverse the flight at the catch time", cmd_reverse);
  protocol_flags(rev);
  rev->add_flag("!--no-control", s.run.control, "skip the random-time control");

  CLI::App* fr = add("free", "unconditioned monitoring", cmd_free);
  protocol_flags(fr);
  fr->add_option("--duration-us", s.run.duration_us, "record length (default 2000)");

  CLI::App* fit = add("fit", "fit a stored tomogram, dwell list or frame record", cmd_fit);
  fit->add_option("--input", s.run.input, "input CSV")->required();
  fit->add_option("--kind", s.run.kind, "tomogram, dwells, bright-dwells or frames")
      ->capture_default_str();
  fit->add_option("--column", s.run.column, "dwell column name")->capture_default_str();
  fit->add_flag("--constrain-a-prime", s.run.constrain_a_prime, "fix the X offset at zero");
  fit->add_option("--reference", s.run.reference, "reference table: tableS3a or tableS3b");

  CLI::App* rep = add("repro", "desk-scale reproduction with pass/fail report", cmd_repro);
  rep->add_option("target", s.run.target, "fig2b, fig3b, fig3c, fig4c, tableS3a, tableS3b, snr")
      ->required();
  rep->add_option("--events", s.run.events, "events or trials (target default)");
  rep->add_option("--duration-us", s.run.duration_us, "free-run length for fig2b");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  for (CLI::App* sub : app.get_subcommands()) s.subcommand = sub->get_name();
  try {
    s.started = utc_now();
    s.config = resolve_config(s.common.config);
    s.seed = resolve_seed(s.common.seed);
    (void)s.channels();
    s.out_dir = s.common.out;
    fs::create_directories(s.out_dir);
    const int code = handlers.at(s.subcommand)(s);
    write_manifest(s);
    return code;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
