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

#include "rpcsim/metrics.hpp"

#include "rpcsim/errors.hpp"

#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace rpcsim {

void BusStats::record(BeatKind kind) {
    ++total_cycles;
    switch (kind) {
        case BeatKind::Idle: ++idle_cycles; break;
        case BeatKind::Command: ++command_cycles; break;
        case BeatKind::Mask: ++mask_cycles; break;
        case BeatKind::Preamble:
        case BeatKind::Postamble: ++preamble_postamble_cycles; break;
        case BeatKind::Data:
            ++data_cycles;
            bytes_transferred += WordGeometry::bytes_per_bus_cycle;
            break;
    }
}

BusStats operator-(const BusStats& a, const BusStats& b) {
    BusStats d;
    d.total_cycles = a.total_cycles - b.total_cycles;
    d.data_cycles = a.data_cycles - b.data_cycles;
    d.command_cycles = a.command_cycles - b.command_cycles;
    d.mask_cycles = a.mask_cycles - b.mask_cycles;
    d.preamble_postamble_cycles = a.preamble_postamble_cycles - b.preamble_postamble_cycles;
    d.idle_cycles = a.idle_cycles - b.idle_cycles;
    d.bytes_transferred = a.bytes_transferred - b.bytes_transferred;
    return d;
}

void EventCounts::count(CommandKind k) {
    switch (k) {
        case CommandKind::Activate: ++activates; break;
        case CommandKind::Read: ++reads; break;
        case CommandKind::Write: ++writes; break;
        case CommandKind::Precharge: ++precharges; break;
        case CommandKind::Refresh: ++refreshes; break;
        case CommandKind::ZqCal: ++zq_cals; break;
        case CommandKind::InitStep: ++init_steps; break;
    }
}

EventCounts operator-(const EventCounts& a, const EventCounts& b) {
    EventCounts d;
    d.activates = a.activates - b.activates;
    d.reads = a.reads - b.reads;
    d.writes = a.writes - b.writes;
    d.precharges = a.precharges - b.precharges;
    d.refreshes = a.refreshes - b.refreshes;
    d.zq_cals = a.zq_cals - b.zq_cals;
    d.init_steps = a.init_steps - b.init_steps;
    return d;
}

void EnergyParams::validate() const {
    const auto nonneg = [](double v, const char* key) {
        if (!(v >= 0.0)) throw ConfigError(std::string(key) + ": must be >= 0");
    };
    nonneg(e_data_per_byte, "energy.e_data_per_byte");
    nonneg(e_command, "energy.e_command");
    nonneg(e_activate, "energy.e_activate");
    nonneg(e_precharge, "energy.e_precharge");
    nonneg(e_refresh, "energy.e_refresh");
    nonneg(e_idle_per_cycle, "energy.e_idle_per_cycle");
    nonneg(p_background, "energy.p_background");
}

double utilization(const BusStats& s) {
    if (s.total_cycles == 0) return 0.0;
    return static_cast<double>(s.data_cycles) / static_cast<double>(s.total_cycles);
}

double throughput(const BusStats& s, double freq_mhz) { return utilization(s) * peak_bandwidth(freq_mhz); }

double event_energy_pj(const BusStats& s, const EventCounts& e, const EnergyParams& p) {
    return p.e_data_per_byte * static_cast<double>(s.bytes_transferred) +
           p.e_command * static_cast<double>(e.commands()) + p.e_activate * static_cast<double>(e.activates) +
           p.e_precharge * static_cast<double>(e.precharges) + p.e_refresh * static_cast<double>(e.refreshes) +
           p.e_idle_per_cycle * static_cast<double>(s.idle_cycles);
}

double background_energy_pj(const BusStats& s, const EnergyParams& p, double freq_mhz) {
    // mW × (cycles / MHz) µs = nJ; × 1e3 → pJ.
    return p.p_background * static_cast<double>(s.total_cycles) / freq_mhz * 1e3;
}

double energy_per_byte(const BusStats& s, const EventCounts& e, const EnergyParams& p, double freq_mhz) {
    if (s.bytes_transferred == 0) throw ZeroBytes();
    return (event_energy_pj(s, e, p) + background_energy_pj(s, p, freq_mhz)) /
           static_cast<double>(s.bytes_transferred);
}

double solve_background_power(const BusStats& s, const EventCounts& e, const EnergyParams& p, double freq_mhz,
                              double target) {
    if (s.bytes_transferred == 0) throw ZeroBytes();
    const double budget = target * static_cast<double>(s.bytes_transferred) - event_energy_pj(s, e, p);
    if (budget < 0.0) throw std::domain_error("event energy alone exceeds the target");
    EnergyParams unit = p;
    unit.p_background = 1.0;
    return budget / background_energy_pj(s, unit, freq_mhz);
}

void write_csv(std::ostream& os, const std::vector<SweepPoint>& points) {
    os << "burst_bytes,direction,alpha,throughput_MBps,energy_pJ_per_B\n";
    for (const auto& p : points) {
        os << p.burst_bytes << ',' << to_string(p.direction) << ',' << std::fixed << std::setprecision(6) << p.alpha
           << ',' << std::setprecision(3) << p.throughput_mbps << ',' << p.energy_pj_per_byte << '\n';
        os.unsetf(std::ios::floatfield);
    }
}

void write_summary(std::ostream& os, const std::vector<SweepPoint>& points) {
    os << std::left << std::setw(10) << "burst" << std::setw(7) << "dir" << std::right << std::setw(9) << "alpha"
       << std::setw(12) << "MB/s" << std::setw(12) << "pJ/B" << '\n';
    for (const auto& p : points) {
        os << std::left << std::setw(10) << p.burst_bytes << std::setw(7) << to_string(p.direction) << std::right
           << std::fixed << std::setprecision(4) << std::setw(9) << p.alpha << std::setprecision(1) << std::setw(12)
           << p.throughput_mbps << std::setw(12) << p.energy_pj_per_byte << '\n';
    }
    os.unsetf(std::ios::floatfield);
}

}  // namespace rpcsim
