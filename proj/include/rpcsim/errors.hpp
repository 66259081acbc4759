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

#pragma once

#include <stdexcept>
#include <string>

namespace rpcsim {

/// Inconsistent or unknown configuration. The message names the offending key.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Trace file could not be parsed; carries the 1-based line number.
class TraceParseError : public std::runtime_error {
public:
    TraceParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// The simulation made no progress for the configured number of cycles.
class DeadlockDetected : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scratchpad access beyond the currently configured aperture.
class SpmOutOfRange : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Energy per byte requested for a window with no transferred bytes.
class ZeroBytes : public std::domain_error {
public:
    ZeroBytes() : std::domain_error("no bytes transferred") {}
};

}  // namespace rpcsim
