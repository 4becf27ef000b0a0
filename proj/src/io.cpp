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


#include "jumpflight/io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace jumpflight {

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace {

const char* label_name(Label l) { return l == Label::B ? "B" : "notB"; }

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw std::runtime_error("not a number in CSV: '" + s + "'");
  }
  return v;
}

// Reads the header and checks it against the expected columns.
void expect_header(std::istream& is, const std::string& header) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty CSV input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw std::runtime_error("unexpected CSV header '" + line + "'");
}

}  // namespace

void write_tomogram_csv(std::ostream& os, const ConditionalTomogram& t) {
  os << "dt_us,z,x,y,n,p_bb\n";
  for (std::size_t i = 0; i < t.grid.size(); ++i) {
    os << format_double(t.grid[i]) << ',' << format_double(t.z[i]) << ','
       << format_double(t.x[i]) << ',' << format_double(t.y[i]) << ','
       << format_double(t.counts[i]) << ',' << format_double(t.p_bb_sum[i]) << '\n';
  }
}

std::string tomogram_csv(const ConditionalTomogram& t) {
  std::ostringstream os;
  write_tomogram_csv(os, t);
  return os.str();
}

void write_frames_csv(std::ostream& os, const std::vector<RecordFrame>& frames) {
  os << "t_us,i_rec,q_rec,label\n";
  for (const auto& f : frames) {
    os << format_double(f.t) << ',' << format_double(f.i_rec) << ',' << format_double(f.q_rec)
       << ',' << label_name(f.label) << '\n';
  }
}

void write_clicks_csv(std::ostream& os, const std::vector<ClickEvent>& clicks) {
  os << "t_us,kind\n";
  for (const auto& c : clicks) {
    os << format_double(c.t) << ','
       << (c.kind == ClickKind::Deexcitation ? "deexcitation" : "excitation") << '\n';
  }
}

void write_histogram_csv(std::ostream& os, const WaitingTimeHistogram& h) {
  os << "bin_lo_us,bin_hi_us,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    os << format_double(h.bin_edges[i]) << ',' << format_double(h.bin_edges[i + 1]) << ','
       << h.counts[i] << '\n';
  }
}

void write_populations_csv(std::ostream& os, const std::vector<DensityMatrix>& rho) {
  os << "t_us,p_g,p_b,p_d,p_f,n_photons\n";
  for (const auto& r : rho) {
    const auto pop = r.populations();
    os << format_double(r.t);
    for (double v : pop) os << ',' << format_double(v);
    os << ',' << format_double(r.mean_photons()) << '\n';
  }
}

ConditionalTomogram read_tomogram_csv(std::istream& is) {
  expect_header(is, "dt_us,z,x,y,n,p_bb");
  ConditionalTomogram t;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 6) throw std::runtime_error("tomogram row needs 6 columns");
    t.grid.push_back(parse_double(c[0]));
    t.z.push_back(parse_double(c[1]));
    t.x.push_back(parse_double(c[2]));
    t.y.push_back(parse_double(c[3]));
    t.counts.push_back(parse_double(c[4]));
    t.p_bb_sum.push_back(parse_double(c[5]));
  }
  return t;
}

std::vector<RecordFrame> read_frames_csv(std::istream& is) {
  expect_header(is, "t_us,i_rec,q_rec,label");
  std::vector<RecordFrame> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() < 3) throw std::runtime_error("frame row needs at least 3 columns");
    RecordFrame f;
    f.t = parse_double(c[0]);
    f.i_rec = parse_double(c[1]);
    f.q_rec = parse_double(c[2]);
    if (c.size() > 3) f.label = c[3] == "notB" ? Label::NotB : Label::B;
    out.push_back(f);
  }
  return out;
}

std::vector<double> read_column_csv(std::istream& is, const std::string& column) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty CSV input");
  const auto head = split(line);
  std::size_t idx = head.size();
  for (std::size_t i = 0; i < head.size(); ++i) {
    if (head[i] == column) idx = i;
  }
  if (idx == head.size()) throw std::runtime_error("CSV has no column '" + column + "'");
  std::vector<double> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c = split(line);
    if (idx >= c.size()) throw std::runtime_error("short CSV row");
    out.push_back(parse_double(c[idx]));
  }
  return out;
}

}  // namespace jumpflight
