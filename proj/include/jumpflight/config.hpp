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

#include <filesystem>
#include <string>
#include <string_view>

#include "jumpflight/params.hpp"
#include "jumpflight/types.hpp"

namespace jumpflight {

inline constexpr std::string_view kConfigSchema = "jumpflight-config-v1";

struct Config {
  SystemParams params;
  ProtocolConfig protocol;
};

// Text format:
//
//   schema = jumpflight-config-v1
//   base = simulation            (optional preset to start from)
//   [cavity]
//   kappa_over_2pi_mhz = 3.62
//   ...
//
// Every physical key carries its unit as a suffix. Frequencies accept
// _over_2pi_mhz, _over_2pi_khz or _rad_per_us; rates accept _per_us (and
// _over_2pi_khz for leakage); coherence times accept t1_x_us and t2r_x_us.
// Parsed values go through validate().
Config parse_config(std::string_view text);
Config load_config(const std::filesystem::path& path);

// Canonical-unit text that parses back to the identical bit pattern.
std::string serialize_config(const Config& c);

// FNV-1a over the canonical serialization, as 16 hex digits.
std::string config_hash(const Config& c);

}  // namespace jumpflight
