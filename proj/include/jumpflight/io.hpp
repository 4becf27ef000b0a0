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

#include <iosfwd>
#include <string>
#include <vector>

#include "jumpflight/lindblad.hpp"
#include "jumpflight/record.hpp"
#include "jumpflight/types.hpp"

namespace jumpflight {

// Shortest text that reads back to the same double.
std::string format_double(double v);

// CSV writers. Headers:
//   tomogram   dt_us,z,x,y,n,p_bb
//   frames     t_us,i_rec,q_rec,label
//   clicks     t_us,kind
//   histogram  bin_lo_us,bin_hi_us,count
//   populations t_us,p_g,p_b,p_d,p_f,n_photons
void write_tomogram_csv(std::ostream& os, const ConditionalTomogram& t);
void write_frames_csv(std::ostream& os, const std::vector<RecordFrame>& frames);
void write_clicks_csv(std::ostream& os, const std::vector<ClickEvent>& clicks);
void write_histogram_csv(std::ostream& os, const WaitingTimeHistogram& h);
void write_populations_csv(std::ostream& os, const std::vector<DensityMatrix>& rho);

// Readers for the same layouts; the header row is required.
ConditionalTomogram read_tomogram_csv(std::istream& is);
std::vector<RecordFrame> read_frames_csv(std::istream& is);
// One dwell time per line after a header; extra columns are ignored.
std::vector<double> read_column_csv(std::istream& is, const std::string& column);

std::string tomogram_csv(const ConditionalTomogram& t);

}  // namespace jumpflight
