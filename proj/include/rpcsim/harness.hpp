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
 * @file harness.hpp
 * @brief Simulation driver: wires frontend, controller and device, generates
 *        or replays traffic and checks every read against a flat memory.
 *
 * Per global cycle the order is fixed: arrivals are offered, the controller
 * advances, the frontend consumes the controller's output and then advances.
 */

#pragma once

#include "rpcsim/controller.hpp"
#include "rpcsim/device.hpp"
#include "rpcsim/frontend.hpp"
#include "rpcsim/llc.hpp"
#include "rpcsim/metrics.hpp"

#include <array>
#include <iosfwd>
#include <memory>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace rpcsim {

struct HarnessConfig {
    std::uint64_t seed = 1;
    Cycle deadlock_bound = 1'000'000;  ///< cycles without datapath progress
    std::uint32_t warmup_bursts = 10;
    Cycle warmup_align = Cycle{1} << 18;  ///< sweep windows open on a multiple of this after init
    Cycle measure_cycles = 0;          ///< sweep window; 0 derives it from the refresh period
    Cycle refresh_check_period = 64;
};

/// Everything one simulation needs.
struct SystemConfig {
    Profile profile;
    ControllerConfig controller;
    ManagerConfig manager = ManagerConfig::defaults_for(TimingParams{});
    FrontendConfig frontend;
    LlcConfig llc;
    EnergyParams energy;
    HarnessConfig harness;

    void validate() const;
};

/// Byte-addressed reference memory; untouched bytes read as the device fill.
class FlatMemory {
public:
    explicit FlatMemory(std::uint8_t fill = DramDevice::kDefaultFill) : fill_(fill) {}

    std::uint8_t get(Addr a) const;
    void set(Addr a, std::uint8_t v);
    std::vector<std::uint8_t> read(Addr addr, std::uint64_t len) const;
    void write(Addr addr, std::span<const std::uint8_t> data);
    /// Applies only strobe-enabled bytes.
    void apply(const BusTransaction& write);

private:
    static constexpr Addr kPage = 4096;
    std::uint8_t fill_;
    std::unordered_map<Addr, std::array<std::uint8_t, kPage>> pages_;
};

class MemorySystem {
public:
    explicit MemorySystem(const SystemConfig& config);

    MemorySystem(const MemorySystem&) = delete;
    MemorySystem& operator=(const MemorySystem&) = delete;

    Cycle now() const { return now_; }

    /// Offer at the current cycle. Returns the serial the frontend will
    /// assign, which assumes same-cycle offers are made in serialized order.
    std::uint64_t offer(BusTransaction txn);

    /// Advance one cycle; completions are appended to `done`.
    void step(std::vector<Completion>& done);

    void run_until_initialized();
    bool quiescent() const { return frontend_.idle() && controller_.idle(); }

    void set_upstream_ready(bool ready) { upstream_ready_ = ready; }
    /// Non-idle beats are written to `os`; nullptr disables tracing.
    void set_bus_trace(std::ostream* os) { trace_ = os; }

    const BusStats& bus() const { return bus_; }
    const EventCounts& events() const { return controller_.events(); }
    std::uint64_t refresh_misses() const { return refresh_misses_; }
    std::optional<Cycle> init_done_at() const { return controller_.init_done_at(); }

    DramDevice& device() { return device_; }
    const DramDevice& device() const { return device_; }
    const Controller& controller() const { return controller_; }
    const Frontend& frontend() const { return frontend_; }
    const SystemConfig& config() const { return config_; }

private:
    SystemConfig config_;
    DramDevice device_;
    Controller controller_;
    Frontend frontend_;
    Cycle now_ = 0;
    std::uint64_t next_serial_ = 0;
    bool upstream_ready_ = true;
    std::ostream* trace_ = nullptr;
    BusStats bus_;
    std::uint64_t refresh_misses_ = 0;
    Cycle last_progress_ = 0;
};

/// Synchronous port into a memory system, used below the LLC.
class BlockingPort : public Downstream {
public:
    explicit BlockingPort(MemorySystem& sys) : sys_(sys) {}

    std::vector<std::uint8_t> read(Addr addr, std::uint64_t len) override;
    void write(Addr addr, std::span<const std::uint8_t> data) override;

    std::uint64_t transactions() const { return transactions_; }

private:
    Completion run(BusTransaction txn);

    MemorySystem& sys_;
    std::uint64_t transactions_ = 0;
    std::uint64_t next_id_ = 0;
};

/// Beat-aligned transfer covering [addr, addr + len). Writes enable exactly
/// the requested bytes and take them from `payload` (len bytes).
BusTransaction make_transfer(std::uint64_t id, Direction dir, Addr addr, std::uint64_t len, std::uint32_t beat_bytes,
                             std::span<const std::uint8_t> payload = {});

// ---------------------------------------------------------------------------
// Workloads
// ---------------------------------------------------------------------------

struct TraceEntry {
    Cycle issue_cycle = 0;  ///< relative to the end of device initialization
    Direction direction = Direction::Read;
    Addr addr = 0;
    std::uint64_t len = 0;
};

/// Parses `<cycle> <R|W> 0x<hex addr> <len>` lines; `#` starts a comment line.
std::vector<TraceEntry> parse_trace(std::istream& in);
std::vector<TraceEntry> load_trace(const std::string& path);

struct SweepWorkload {
    std::vector<std::uint64_t> burst_sizes;
    Direction direction = Direction::Read;
};
struct SequentialWorkload {
    Addr addr = 0;
    std::uint64_t total_bytes = 0;
    std::uint64_t burst_bytes = 2048;
    Direction direction = Direction::Write;
};
struct RandomWorkload {
    std::uint64_t count = 10'000;
    Cycle min_cycles = 0;              ///< keep injecting until this many cycles elapsed
    std::uint32_t max_beats = 32;
    Addr region_base = 0;
    std::uint64_t region_bytes = 64 * 1024;
    std::uint32_t ids = 4;
    bool read_back = true;             ///< read the whole region at the end
    bool inject_corruption = false;    ///< flip a written word before read-back
};
struct TraceWorkload {
    std::vector<TraceEntry> entries;
};

struct Workload {
    std::variant<SweepWorkload, SequentialWorkload, RandomWorkload, TraceWorkload> kind;
};

/// Steady-state measurement of back-to-back bursts of one size.
struct BurstMeasurement {
    std::uint64_t burst_bytes = 0;
    Direction direction = Direction::Read;
    BusStats stats;
    EventCounts events;
    std::uint64_t violations = 0;
    std::uint64_t mismatches = 0;

    friend bool operator==(const BurstMeasurement&, const BurstMeasurement&) = default;
};

struct SimulationResult {
    std::vector<BurstMeasurement> bursts;  ///< sweep workloads only
    BusStats stats;                        ///< measurement window of finite workloads
    EventCounts events;
    std::vector<Cycle> latencies;          ///< accept to completion, serialized order
    std::uint64_t transactions = 0;
    std::uint64_t violations = 0;
    std::uint64_t mismatches = 0;
    std::uint64_t refresh_misses = 0;
    std::uint64_t interleaved_with_refresh = 0;
    Cycle end_cycle = 0;
    std::string violation_report;          ///< device log, one line per violation

    bool clean() const { return violations == 0 && mismatches == 0 && refresh_misses == 0; }
    friend bool operator==(const SimulationResult&, const SimulationResult&) = default;
};

/// Deterministic for a fixed (config, workload). Throws ConfigError or
/// DeadlockDetected.
SimulationResult run(const SystemConfig& config, const Workload& workload, std::ostream* bus_trace = nullptr);

/// One sweep point. `jobs` > 1 runs sizes concurrently.
BurstMeasurement measure_burst(const SystemConfig& config, std::uint64_t burst_bytes, Direction dir);
std::vector<BurstMeasurement> sweep_bursts(const SystemConfig& config, Direction dir,
                                           const std::vector<std::uint64_t>& sizes, unsigned jobs = 1);

/// Powers of two from `min_bytes` to `max_bytes`.
std::vector<std::uint64_t> burst_sizes(std::uint64_t min_bytes = 8, std::uint64_t max_bytes = 64 * 1024);

SweepPoint to_sweep_point(const BurstMeasurement& m, const SystemConfig& config);

/// The headline energy workload: sequential full-strobe 64 KiB DMA writes.
SequentialWorkload mem_workload();

/// Γ of `mem_workload()` under `config`.
double mem_energy_per_byte(const SystemConfig& config);

/// Background power that makes `mem_workload()` hit `target_pj_per_byte`.
double calibrate_background_power(const SystemConfig& config, double target_pj_per_byte);

/// Read-back mismatch count of a randomized workload with full read coverage.
std::uint64_t verify_against_oracle(const SystemConfig& config, const RandomWorkload& workload);

/// LLC equivalence run: the same random access stream is replayed with and
/// without the cache stage, with SPM reconfiguration between accesses.
struct LlcCheck {
    std::uint64_t mismatches = 0;              ///< reads differing from the flat model
    std::uint64_t divergences = 0;             ///< reads differing between the two runs
    std::uint64_t spm_downstream_traffic = 0;  ///< downstream calls made by SPM accesses
    std::uint64_t reconfigurations = 0;
    std::uint64_t spm_accesses = 0;
    std::uint64_t violations = 0;
};
LlcCheck verify_llc(const SystemConfig& config, std::uint64_t seed, std::uint64_t accesses);

}  // namespace rpcsim
