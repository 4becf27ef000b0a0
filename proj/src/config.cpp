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

#include "jumpflight/config.hpp"

#include <array>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

namespace jumpflight {
namespace {

enum class Kind { Freq, Rate, LeakRate, Time, Dimless };

struct Field {
  const char* section;
  const char* name;
  Kind kind;
  double SystemParams::*member;
};

// gamma_b/gamma_d/dephasing rates are listed here for their canonical keys;
// the T1/T2R spellings are handled after the table pass.
constexpr std::array kFields = {
    Field{"cavity", "omega_c", Kind::Freq, &SystemParams::omega_c},
    Field{"cavity", "chi_b", Kind::Freq, &SystemParams::chi_b},
    Field{"cavity", "chi_d", Kind::Freq, &SystemParams::chi_d},
    Field{"cavity", "kappa", Kind::Freq, &SystemParams::kappa},
    Field{"cavity", "kappa_filter", Kind::Freq, &SystemParams::kappa_filter},
    Field{"cavity", "eta", Kind::Dimless, &SystemParams::eta},
    Field{"cavity", "t_int", Kind::Time, &SystemParams::t_int},
    Field{"cavity", "nbar", Kind::Dimless, &SystemParams::nbar},
    Field{"cavity", "delta_r", Kind::Freq, &SystemParams::delta_r},
    Field{"cavity", "nth_c", Kind::Dimless, &SystemParams::nth_c},
    Field{"bg", "omega_b0", Kind::Freq, &SystemParams::omega_b0},
    Field{"bg", "omega_b1", Kind::Freq, &SystemParams::omega_b1},
    Field{"bg", "delta_b1", Kind::Freq, &SystemParams::delta_b1},
    Field{"bg", "gamma_b", Kind::Rate, &SystemParams::gamma_b},
    Field{"bg", "gamma_b_phi", Kind::Rate, &SystemParams::gamma_b_phi},
    Field{"bg", "nth_b", Kind::Dimless, &SystemParams::nth_b},
    Field{"bg", "gamma_bg_click", Kind::Rate, &SystemParams::gamma_bg_click},
    Field{"bg", "tau_b", Kind::Time, &SystemParams::tau_b},
    Field{"dg", "omega_dg", Kind::Freq, &SystemParams::omega_dg},
    Field{"dg", "delta_dg", Kind::Freq, &SystemParams::delta_dg},
    Field{"dg", "gamma_d", Kind::Rate, &SystemParams::gamma_d},
    Field{"dg", "gamma_d_phi", Kind::Rate, &SystemParams::gamma_d_phi},
    Field{"dg", "nth_d", Kind::Dimless, &SystemParams::nth_d},
    Field{"dg", "gamma_gd", Kind::Rate, &SystemParams::gamma_gd},
    Field{"leakage", "gamma_fg", Kind::LeakRate, &SystemParams::gamma_fg},
    Field{"leakage", "gamma_fd", Kind::LeakRate, &SystemParams::gamma_fd},
    Field{"leakage", "gamma_gf", Kind::LeakRate, &SystemParams::gamma_gf},
    Field{"leakage", "gamma_df", Kind::LeakRate, &SystemParams::gamma_df},
};

struct OptionalField {
  const char* section;
  const char* name;
  std::optional<double> SystemParams::*member;
};

constexpr std::array kMetadata = {
    OptionalField{"bg", "alpha_b", &SystemParams::alpha_b},
    OptionalField{"dg", "alpha_d", &SystemParams::alpha_d},
    OptionalField{"bg", "chi_db", &SystemParams::chi_db},
};

struct Suffix {
  const char* text;
  double scale;
  bool invert;
};

std::vector<Suffix> suffixes_for(Kind k) {
  switch (k) {
    case Kind::Freq:
      return {{"_rad_per_us", 1.0, false},
              {"_over_2pi_mhz", kTwoPi, false},
              {"_over_2pi_khz", kTwoPi * 1e-3, false}};
    case Kind::Rate:
      return {{"_per_us", 1.0, false}, {"_time_us", 1.0, true}};
    case Kind::LeakRate:
      return {{"_per_us", 1.0, false}, {"_over_2pi_khz", kTwoPi * 1e-3, false}};
    case Kind::Time:
      return {{"_us", 1.0, false}, {"_ns", 1e-3, false}};
    case Kind::Dimless:
      return {{"", 1.0, false}};
  }
  return {};
}

[[noreturn]] void fail(int line, const std::string& what) {
  std::ostringstream msg;
  if (line > 0) msg << "config line " << line << ": ";
  msg << what;
  throw ParamError(msg.str());
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& v, int line) {
  errno = 0;
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0' || errno == ERANGE) fail(line, "not a number: '" + v + "'");
  return d;
}

struct Entry {
  std::string value;
  int line;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void check_protocol(const ProtocolConfig& c) {
  if (!(c.dt_on >= 0.0) || !(c.dt_off >= 0.0)) {
    throw std::invalid_argument("dt_on and dt_off must be non-negative");
  }
  if (c.thresholds_set && c.thresholds.i_bbar > c.thresholds.i_b) {
    throw std::invalid_argument("threshold i_bbar must not exceed i_b");
  }
}

Config parse_config(std::string_view text) {
  std::map<std::string, Entry> entries;  // "section.key" -> value
  std::string section;
  bool schema_seen = false;
  std::string base;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const auto hash = raw.find('#');
    std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (!schema_seen) fail(line_no, "schema line must come first");
      if (line.back() != ']') fail(line_no, "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section != "cavity" && section != "bg" && section != "dg" && section != "leakage" &&
          section != "protocol") {
        fail(line_no, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (!schema_seen) {
      if (key != "schema" || value != kConfigSchema) {
        fail(line_no, "first entry must be 'schema = " + std::string(kConfigSchema) + "'");
      }
      schema_seen = true;
      continue;
    }
    if (section.empty()) {
      if (key == "base") {
        base = value;
        continue;
      }
      fail(line_no, "key '" + key + "' outside of a section");
    }
    const std::string full = section + "." + key;
    if (!entries.emplace(full, Entry{value, line_no}).second) fail(line_no, "duplicate key " + full);
  }
  if (!schema_seen) fail(0, "missing schema line");

  Config cfg;
  if (!base.empty()) cfg.params = preset(base);

  auto take = [&](const std::string& full) -> std::optional<Entry> {
    auto it = entries.find(full);
    if (it == entries.end()) return std::nullopt;
    Entry e = it->second;
    entries.erase(it);
    return e;
  };

  for (const Field& f : kFields) {
    int hits = 0;
    for (const Suffix& s : suffixes_for(f.kind)) {
      auto e = take(std::string(f.section) + "." + f.name + s.text);
      if (!e) continue;
      ++hits;
      if (std::string(f.name) == "delta_r" && e->value == "chi_b") {
        cfg.params.delta_r = std::numeric_limits<double>::quiet_NaN();  // resolved below
        continue;
      }
      const double v = parse_number(e->value, e->line);
      cfg.params.*f.member = s.invert ? 1.0 / v : v * s.scale;
    }
    if (hits > 1) fail(0, std::string("field ") + f.name + " given more than once");
  }
  for (const OptionalField& f : kMetadata) {
    for (const Suffix& s : suffixes_for(Kind::Freq)) {
      auto e = take(std::string(f.section) + "." + f.name + s.text);
      if (e) cfg.params.*f.member = parse_number(e->value, e->line) * s.scale;
    }
  }
  if (auto e = take("cavity.n_fock")) {
    const double v = parse_number(e->value, e->line);
    if (v != static_cast<int>(v)) fail(e->line, "n_fock must be an integer");
    cfg.params.n_fock = static_cast<int>(v);
  }

  // Coherence-time spellings. T2R needs the final T1.
  struct Coherence {
    const char* t1_key;
    const char* t2_key;
    double SystemParams::*rate;
    double SystemParams::*phi;
  };
  for (const Coherence& c : {Coherence{"bg.t1_b_us", "bg.t2r_b_us", &SystemParams::gamma_b,
                                       &SystemParams::gamma_b_phi},
                             Coherence{"dg.t1_d_us", "dg.t2r_d_us", &SystemParams::gamma_d,
                                       &SystemParams::gamma_d_phi}}) {
    if (auto e = take(c.t1_key)) cfg.params.*c.rate = 1.0 / parse_number(e->value, e->line);
    if (auto e = take(c.t2_key)) {
      const double t1 = 1.0 / (cfg.params.*c.rate);
      cfg.params.*c.phi = dephasing_rate(t1, parse_number(e->value, e->line));
    }
  }
  if (std::isnan(cfg.params.delta_r)) cfg.params.delta_r = cfg.params.chi_b;

  // Protocol section.
  ProtocolConfig& pc = cfg.protocol;
  if (auto e = take("protocol.dt_on_us")) pc.dt_on = parse_number(e->value, e->line);
  if (auto e = take("protocol.dt_off_us")) pc.dt_off = parse_number(e->value, e->line);
  if (auto e = take("protocol.theta_i_rad")) pc.theta_i = parse_number(e->value, e->line);
  if (auto e = take("protocol.phi_i_rad")) pc.phi_i = parse_number(e->value, e->line);
  if (auto e = take("protocol.mode")) {
    if (e->value == "catch") pc.mode = ProtocolMode::Catch;
    else if (e->value == "reverse") pc.mode = ProtocolMode::Reverse;
    else if (e->value == "free") pc.mode = ProtocolMode::FreeRun;
    else fail(e->line, "mode must be catch, reverse or free");
  }
  {
    auto ib = take("protocol.i_b");
    auto ibb = take("protocol.i_bbar");
    auto qb = take("protocol.q_b");
    if (ib || ibb || qb) {
      if (!(ib && ibb && qb)) fail(0, "thresholds need all of i_b, i_bbar and q_b");
      pc.thresholds = {parse_number(ib->value, ib->line), parse_number(ibb->value, ibb->line),
                       parse_number(qb->value, qb->line)};
      pc.thresholds_set = true;
    }
  }

  if (!entries.empty()) {
    const auto& [k, e] = *entries.begin();
    fail(e.line, "unknown key " + k);
  }
  try {
    check_protocol(pc);
  } catch (const std::invalid_argument& ex) {
    throw ParamError(ex.what());
  }
  cfg.params = validate(cfg.params);
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ParamError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const Config& c) {
  std::ostringstream out;
  out << "schema = " << kConfigSchema << "\n";
  for (const char* section : {"cavity", "bg", "dg", "leakage"}) {
    out << "\n[" << section << "]\n";
    for (const Field& f : kFields) {
      if (std::string(f.section) != section) continue;
      out << f.name << suffixes_for(f.kind).front().text << " = " << fmt(c.params.*f.member) << "\n";
    }
    for (const OptionalField& f : kMetadata) {
      if (std::string(f.section) != section || !(c.params.*f.member)) continue;
      out << f.name << "_rad_per_us = " << fmt(*(c.params.*f.member)) << "\n";
    }
    if (std::string(section) == "cavity") out << "n_fock = " << c.params.n_fock << "\n";
  }
  const ProtocolConfig& p = c.protocol;
  out << "\n[protocol]\n";
  out << "dt_on_us = " << fmt(p.dt_on) << "\n";
  out << "dt_off_us = " << fmt(p.dt_off) << "\n";
  out << "theta_i_rad = " << fmt(p.theta_i) << "\n";
  out << "phi_i_rad = " << fmt(p.phi_i) << "\n";
  out << "mode = "
      << (p.mode == ProtocolMode::Catch ? "catch" : p.mode == ProtocolMode::Reverse ? "reverse" : "free")
      << "\n";
  if (p.thresholds_set) {
    out << "i_b = " << fmt(p.thresholds.i_b) << "\n";
    out << "i_bbar = " << fmt(p.thresholds.i_bbar) << "\n";
    out << "q_b = " << fmt(p.thresholds.q_b) << "\n";
  }
  return out.str();
}

std::string config_hash(const Config& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize_config(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace jumpflight
