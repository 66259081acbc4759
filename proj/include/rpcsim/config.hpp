/*
 * Copyright 2026 The rpcsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/**
 * @file config.hpp
 * @brief INI-style configuration with dotted keys.
 *
 * Keys may be written either inside a section (`[timing]` then `t_rcd = 6`)
 * or fully qualified at top level (`timing.t_rcd = 6`). Unknown keys are
 * rejected; missing keys keep their defaults. Manager periods not given
 * explicitly are derived from the timing section after it is applied.
 */

#pragma once

#include "rpcsim/harness.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace rpcsim {

struct OutputConfig {
    std::string csv;        ///< empty: stdout
    std::string bus_trace;  ///< empty: disabled
};

struct Config {
    SystemConfig system;
    OutputConfig output;
};

/// Every accepted key, in documentation order.
const std::vector<std::string>& config_keys();

/// Throws ConfigError naming the offending key (or the parse position).
Config parse_config(std::istream& in);
Config load_config(const std::string& path);

/// Applies `key = value` pairs on top of `base`, in the order given.
Config apply_overrides(Config base, const std::vector<std::pair<std::string, std::string>>& kv);

/// Writes every key with its current value; the output parses back to `c`.
void write_config(std::ostream& os, const Config& c);

}  // namespace rpcsim
