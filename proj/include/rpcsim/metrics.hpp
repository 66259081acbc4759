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
 * @file metrics.hpp
 * @brief DB bus cycle accounting, utilization/throughput and the event-count
 *        energy model.
 */

#pragma once

#include "rpcsim/protocol.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace rpcsim {

/// Per-category DB cycle counters over a measurement window.
struct BusStats {
    std::uint64_t total_cycles = 0;
    std::uint64_t data_cycles = 0;
    std::uint64_t command_cycles = 0;
    std::uint64_t mask_cycles = 0;
    std::uint64_t preamble_postamble_cycles = 0;
    std::uint64_t idle_cycles = 0;
    std::uint64_t bytes_transferred = 0;

    void record(BeatKind kind);

    /// Category counters sum to total_cycles.
    bool conserved() const {
        return data_cycles + command_cycles + mask_cycles + preamble_postamble_cycles + idle_cycles ==
               total_cycles;
    }

    friend BusStats operator-(const BusStats& a, const BusStats& b);
    friend bool operator==(const BusStats&, const BusStats&) = default;
};

/// Command events issued by the controller.
struct EventCounts {
    std::uint64_t activates = 0;
    std::uint64_t reads = 0;
    std::uint64_t writes = 0;
    std::uint64_t precharges = 0;
    std::uint64_t refreshes = 0;
    std::uint64_t zq_cals = 0;
    std::uint64_t init_steps = 0;

    std::uint64_t commands() const {
        return activates + reads + writes + precharges + refreshes + zq_cals + init_steps;
    }
    void count(CommandKind k);

    friend EventCounts operator-(const EventCounts& a, const EventCounts& b);
    friend bool operator==(const EventCounts&, const EventCounts&) = default;
};

/// Per-event energy coefficients. Defaults are the calibrated profile.
struct EnergyParams {
    double e_data_per_byte = 45.0;   ///< pJ per byte on DB (IO + array)
    double e_command = 30.0;         ///< pJ per command packet
    double e_activate = 1800.0;      ///< pJ
    double e_precharge = 900.0;      ///< pJ
    double e_refresh = 4500.0;       ///< pJ per refreshed bank
    double e_idle_per_cycle = 40.0;  ///< pJ per idle DB cycle
    double p_background = 152.27;    ///< mW, rails not covered by events

    void validate() const;
};

/// α: fraction of DB cycles carrying data. 0 for an empty window.
double utilization(const BusStats& stats);

/// Θ in bytes per second: α × peak bandwidth.
double throughput(const BusStats& stats, double freq_mhz);

/// Γ in pJ per transferred byte. Throws ZeroBytes if nothing moved.
double energy_per_byte(const BusStats& stats, const EventCounts& events, const EnergyParams& params,
                       double freq_mhz);

/// Event energy without the background term, in pJ.
double event_energy_pj(const BusStats& stats, const EventCounts& events, const EnergyParams& params);

/// Background energy of a window, in pJ.
double background_energy_pj(const BusStats& stats, const EnergyParams& params, double freq_mhz);

/// Background power in mW that makes Γ equal `target_pj_per_byte` for the
/// given window. Throws ZeroBytes if nothing moved and std::domain_error if
/// the event energy alone already exceeds the target.
double solve_background_power(const BusStats& stats, const EventCounts& events, const EnergyParams& params,
                              double freq_mhz, double target_pj_per_byte);

/// One row of the sweep CSV.
struct SweepPoint {
    std::uint64_t burst_bytes = 0;
    Direction direction = Direction::Read;
    double alpha = 0.0;
    double throughput_mbps = 0.0;
    double energy_pj_per_byte = 0.0;
};

void write_csv(std::ostream& os, const std::vector<SweepPoint>& points);
void write_summary(std::ostream& os, const std::vector<SweepPoint>& points);

}  // namespace rpcsim
