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

#include "rpcsim/harness.hpp"

#include "rpcsim/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <future>
#include <random>
#include <sstream>

namespace rpcsim {

void SystemConfig::validate() const {
    profile.validate();
    manager.validate(profile.timing, profile.geometry);
    frontend.validate();
    llc.validate();
    energy.validate();
    if (controller.queue_depth == 0) throw ConfigError("controller.queue_depth: must be > 0");
    if (harness.deadlock_bound == 0) throw ConfigError("harness.deadlock_bound: must be > 0");
    if (harness.refresh_check_period == 0) throw ConfigError("harness.refresh_check_period: must be > 0");
    if (harness.warmup_align == 0) throw ConfigError("harness.warmup_align: must be > 0");
}

// ---------------------------------------------------------------------------
// FlatMemory
// ---------------------------------------------------------------------------

std::uint8_t FlatMemory::get(Addr a) const {
    const auto it = pages_.find(a / kPage);
    return it == pages_.end() ? fill_ : it->second[a % kPage];
}

void FlatMemory::set(Addr a, std::uint8_t v) {
    auto [it, fresh] = pages_.try_emplace(a / kPage);
    if (fresh) it->second.fill(fill_);
    it->second[a % kPage] = v;
}

std::vector<std::uint8_t> FlatMemory::read(Addr addr, std::uint64_t len) const {
    std::vector<std::uint8_t> out(len);
    for (std::uint64_t i = 0; i < len; ++i) out[i] = get(addr + i);
    return out;
}

void FlatMemory::write(Addr addr, std::span<const std::uint8_t> data) {
    for (std::size_t i = 0; i < data.size(); ++i) set(addr + i, data[i]);
}

void FlatMemory::apply(const BusTransaction& w) {
    for (std::uint64_t i = 0; i < w.span_bytes(); ++i) {
        if (w.byte_enabled(i)) set(w.addr + i, w.data[i]);
    }
}

// ---------------------------------------------------------------------------
// MemorySystem
// ---------------------------------------------------------------------------

namespace {

const SystemConfig& validated(const SystemConfig& c) {
    c.validate();
    return c;
}

}  // namespace

MemorySystem::MemorySystem(const SystemConfig& config)
    : config_(validated(config)),
      device_(config_.profile),
      controller_(config_.profile, config_.controller, config_.manager, device_),
      frontend_(config_.profile, config_.frontend, controller_) {}

std::uint64_t MemorySystem::offer(BusTransaction txn) {
    frontend_.offer(std::move(txn), now_);
    return next_serial_++;
}

void MemorySystem::step(std::vector<Completion>& done) {
    const ControllerStep s = controller_.tick(now_);
    bus_.record(s.beat.kind);
    if (trace_ && s.beat.kind != BeatKind::Idle) write_beat(*trace_, s.beat);
    frontend_.ingest(s);
    const std::size_t before = done.size();
    frontend_.tick(now_, upstream_ready_, done);

    if (s.beat.kind == BeatKind::Data || done.size() != before || quiescent()) last_progress_ = now_;
    if (now_ - last_progress_ > config_.harness.deadlock_bound) {
        throw DeadlockDetected("no datapath progress for " + std::to_string(config_.harness.deadlock_bound) +
                               " cycles at cycle " + std::to_string(now_));
    }
    if (now_ % config_.harness.refresh_check_period == 0 && device_.initialized(now_)) {
        refresh_misses_ += device_.check_refresh_deadlines(now_).size();
    }
    ++now_;
}

void MemorySystem::run_until_initialized() {
    std::vector<Completion> sink;
    while (!controller_.initialized(now_)) step(sink);
}

BusTransaction make_transfer(std::uint64_t id, Direction dir, Addr addr, std::uint64_t len, std::uint32_t beat_bytes,
                             std::span<const std::uint8_t> payload) {
    BusTransaction t;
    t.id = id;
    t.direction = dir;
    t.beat_bytes = beat_bytes;
    t.addr = addr - addr % beat_bytes;
    const Addr end = addr + len;
    const Addr aligned_end = (end + beat_bytes - 1) / beat_bytes * beat_bytes;
    t.beats = static_cast<std::uint32_t>((aligned_end - t.addr) / beat_bytes);
    if (dir == Direction::Write) {
        t.strobes.assign(t.beats, 0);
        t.data.assign(t.span_bytes(), 0);
        for (std::uint64_t i = 0; i < len; ++i) {
            const std::uint64_t off = addr - t.addr + i;
            t.strobes[off / beat_bytes] |= std::uint64_t{1} << (off % beat_bytes);
            t.data[off] = payload[i];
        }
    }
    return t;
}

Completion BlockingPort::run(BusTransaction txn) {
    const std::uint64_t serial = sys_.offer(std::move(txn));
    ++transactions_;
    std::vector<Completion> done;
    for (;;) {
        sys_.step(done);
        for (auto& c : done) {
            if (c.serial == serial) return std::move(c);
        }
        done.clear();
    }
}

std::vector<std::uint8_t> BlockingPort::read(Addr addr, std::uint64_t len) {
    const std::uint32_t bb = sys_.config().frontend.beat_bytes();
    Completion c = run(make_transfer(next_id_++ % 4, Direction::Read, addr, len, bb));
    const Addr base = addr - addr % bb;
    return {c.data.begin() + static_cast<std::ptrdiff_t>(addr - base),
            c.data.begin() + static_cast<std::ptrdiff_t>(addr - base + len)};
}

void BlockingPort::write(Addr addr, std::span<const std::uint8_t> data) {
    const std::uint32_t bb = sys_.config().frontend.beat_bytes();
    run(make_transfer(next_id_++ % 4, Direction::Write, addr, data.size(), bb, data));
}

// ---------------------------------------------------------------------------
// Trace files
// ---------------------------------------------------------------------------

namespace {

template <class T>
bool parse_number(std::string_view s, T& out, int base = 10) {
    if (s.empty()) return false;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out, base);
    return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace

std::vector<TraceEntry> parse_trace(std::istream& in) {
    std::vector<TraceEntry> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ss(line);
        std::string cyc, dir, addr, len, extra;
        if (!(ss >> cyc >> dir >> addr >> len)) throw TraceParseError(lineno, "expected '<cycle> <R|W> 0x<addr> <len>'");
        if (ss >> extra) throw TraceParseError(lineno, "unexpected trailing field '" + extra + "'");
        TraceEntry e;
        if (!parse_number(cyc, e.issue_cycle)) throw TraceParseError(lineno, "bad issue cycle '" + cyc + "'");
        if (dir == "R") {
            e.direction = Direction::Read;
        } else if (dir == "W") {
            e.direction = Direction::Write;
        } else {
            throw TraceParseError(lineno, "direction must be R or W, got '" + dir + "'");
        }
        if (addr.size() < 3 || addr[0] != '0' || (addr[1] != 'x' && addr[1] != 'X') ||
            !parse_number(std::string_view(addr).substr(2), e.addr, 16))
            throw TraceParseError(lineno, "bad hex address '" + addr + "'");
        if (!parse_number(len, e.len) || e.len == 0) throw TraceParseError(lineno, "bad length '" + len + "'");
        out.push_back(e);
    }
    return out;
}

std::vector<TraceEntry> load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("trace: cannot open '" + path + "'");
    return parse_trace(in);
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

namespace {

/// Memory system plus the flat oracle, fed in serialized order.
class Driver {
public:
    explicit Driver(const SystemConfig& config, std::ostream* trace = nullptr) : sys_(config) {
        sys_.set_bus_trace(trace);
    }

    MemorySystem& sys() { return sys_; }
    FlatMemory& oracle() { return oracle_; }

    /// Offers one cycle's arrivals; the oracle sees them in frontend order.
    void offer(std::vector<BusTransaction> batch) {
        std::vector<Arrival> arrivals;
        arrivals.reserve(batch.size());
        for (auto& t : batch) arrivals.push_back({sys_.now(), std::move(t)});
        for (auto& t : serialize(std::move(arrivals))) {
            if (t.direction == Direction::Write) oracle_.apply(t);
            std::vector<std::uint8_t> expect;
            if (t.direction == Direction::Read) expect = oracle_.read(t.addr, t.span_bytes());
            const std::uint64_t serial = sys_.offer(std::move(t));
            if (!expect.empty()) expected_.emplace(serial, std::move(expect));
            ++offered_;
        }
    }
    void offer(BusTransaction t) {
        std::vector<BusTransaction> one;
        one.push_back(std::move(t));
        offer(std::move(one));
    }

    void step() {
        done_.clear();
        sys_.step(done_);
        for (auto& c : done_) {
            latencies_.push_back(c.complete_cycle - c.accept_cycle);
            ++completed_;
            if (c.direction != Direction::Read) continue;
            const auto it = expected_.find(c.serial);
            if (it == expected_.end() || it->second != c.data) ++mismatches_;
            if (it != expected_.end()) expected_.erase(it);
        }
    }

    void drain() {
        while (!sys_.quiescent()) step();
    }

    std::uint64_t offered() const { return offered_; }
    std::uint64_t completed() const { return completed_; }
    std::uint64_t mismatches() const { return mismatches_; }
    std::vector<Cycle>& latencies() { return latencies_; }

private:
    MemorySystem sys_;
    FlatMemory oracle_;
    std::unordered_map<std::uint64_t, std::vector<std::uint8_t>> expected_;
    std::vector<Completion> done_;
    std::vector<Cycle> latencies_;
    std::uint64_t offered_ = 0;
    std::uint64_t completed_ = 0;
    std::uint64_t mismatches_ = 0;
};

void fill_random(std::mt19937_64& rng, std::vector<std::uint8_t>& bytes) {
    for (std::size_t i = 0; i < bytes.size(); i += 8) {
        std::uint64_t v = rng();
        for (std::size_t k = 0; k < 8 && i + k < bytes.size(); ++k, v >>= 8) bytes[i + k] = static_cast<std::uint8_t>(v);
    }
}

/// Full-strobe DMA burst.
BusTransaction dma_burst(std::mt19937_64& rng, Direction dir, Addr addr, std::uint64_t bytes, std::uint32_t bb) {
    bb = static_cast<std::uint32_t>(std::min<std::uint64_t>(bb, bytes));
    BusTransaction t;
    t.id = 0;
    t.direction = dir;
    t.addr = addr;
    t.beat_bytes = bb;
    t.beats = static_cast<std::uint32_t>(bytes / bb);
    if (dir == Direction::Write) {
        t.strobes.assign(t.beats, bb >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bb) - 1);
        t.data.resize(bytes);
        fill_random(rng, t.data);
    }
    return t;
}

void finish(Driver& d, SimulationResult& r, const BusStats& bus0, const EventCounts& ev0, bool window) {
    MemorySystem& sys = d.sys();
    if (window) {
        r.stats = sys.bus() - bus0;
        r.events = sys.events() - ev0;
    }
    r.latencies = std::move(d.latencies());
    r.transactions = d.completed();
    r.violations = sys.device().violation_log().size();
    r.mismatches = d.mismatches();
    r.refresh_misses = sys.refresh_misses();
    r.interleaved_with_refresh = sys.device().interleaved_with_refresh();
    r.end_cycle = sys.now();
    std::ostringstream report;
    sys.device().write_violation_report(report);
    r.violation_report = report.str();
}

SimulationResult run_sequential(const SystemConfig& config, const SequentialWorkload& w, std::ostream* trace) {
    Driver d(config, trace);
    std::mt19937_64 rng(config.harness.seed);
    d.sys().run_until_initialized();
    const BusStats bus0 = d.sys().bus();
    const EventCounts ev0 = d.sys().events();
    const Addr cap = config.profile.capacity_bytes();
    std::uint64_t sent = 0;
    while (sent < w.total_bytes) {
        if (d.sys().frontend().queued() == 0) {
            const std::uint64_t n = std::min(w.burst_bytes, w.total_bytes - sent);
            d.offer(dma_burst(rng, w.direction, (w.addr + sent) % cap, n, config.frontend.beat_bytes()));
            sent += n;
        }
        d.step();
    }
    d.drain();
    SimulationResult r;
    finish(d, r, bus0, ev0, w.total_bytes > 0);
    return r;
}

SimulationResult run_random(const SystemConfig& config, const RandomWorkload& w, std::ostream* trace) {
    Driver d(config, trace);
    MemorySystem& sys = d.sys();
    std::mt19937_64 rng(config.harness.seed);
    const std::uint32_t bb = config.frontend.beat_bytes();
    const std::uint64_t max_span = std::uint64_t{w.max_beats} * bb;
    if (w.region_bytes < max_span || w.region_base % bb != 0)
        throw ConfigError("harness: random region must be beat aligned and hold the largest burst");

    sys.run_until_initialized();
    const BusStats bus0 = sys.bus();
    const EventCounts ev0 = sys.events();
    const Cycle start = sys.now();
    std::uint64_t generated = 0;
    Addr last_write_word = w.region_base;
    bool wrote = false;

    while (generated < w.count || sys.now() - start < w.min_cycles) {
        if (sys.frontend().queued() < 4) {
            const auto arrivals = static_cast<std::uint32_t>(rng() % 3);
            std::vector<BusTransaction> batch;
            for (std::uint32_t k = 0; k < arrivals && (generated < w.count || sys.now() - start < w.min_cycles); ++k) {
                BusTransaction t;
                t.id = rng() % std::max<std::uint32_t>(1, w.ids);
                t.direction = (rng() & 1) ? Direction::Write : Direction::Read;
                t.beat_bytes = bb;
                t.beats = 1 + static_cast<std::uint32_t>(rng() % w.max_beats);
                const std::uint64_t slots = (w.region_bytes - t.span_bytes()) / bb + 1;
                t.addr = w.region_base + (rng() % slots) * bb;
                if (t.direction == Direction::Write) {
                    t.data.resize(t.span_bytes());
                    fill_random(rng, t.data);
                    const std::uint64_t full = bb >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bb) - 1;
                    t.strobes.assign(t.beats, full);
                    switch (rng() % 4) {
                        case 0:
                        case 1:
                            break;
                        case 2:
                            for (auto& s : t.strobes) s = rng() & full;
                            break;
                        default: {
                            const std::uint64_t lo = rng() % t.span_bytes();
                            const std::uint64_t hi = lo + 1 + rng() % (t.span_bytes() - lo);
                            for (std::uint64_t i = 0; i < t.span_bytes(); ++i) {
                                if (i < lo || i >= hi) t.strobes[i / bb] &= ~(std::uint64_t{1} << (i % bb));
                            }
                            break;
                        }
                    }
                    for (std::uint64_t i = 0; i < t.span_bytes(); ++i) {
                        if (t.byte_enabled(i)) {
                            last_write_word = (t.addr + i) & ~Addr{WordGeometry::word_bytes - 1};
                            wrote = true;
                        }
                    }
                }
                batch.push_back(std::move(t));
                ++generated;
            }
            if (!batch.empty()) d.offer(std::move(batch));
        }
        d.step();
    }
    if (w.read_back) {
        d.drain();
        if (w.inject_corruption && wrote) sys.device().corrupt_word(last_write_word);
        const std::uint64_t chunk = 2048;
        for (Addr a = w.region_base; a < w.region_base + w.region_bytes; a += chunk) {
            const std::uint64_t n = std::min<std::uint64_t>(chunk, w.region_base + w.region_bytes - a);
            while (sys.frontend().queued() != 0) d.step();
            d.offer(make_transfer(0, Direction::Read, a, n, bb));
            d.step();
        }
    }
    d.drain();
    SimulationResult r;
    finish(d, r, bus0, ev0, d.offered() > 0);
    return r;
}

SimulationResult run_trace(const SystemConfig& config, const TraceWorkload& w, std::ostream* trace) {
    Driver d(config, trace);
    MemorySystem& sys = d.sys();
    sys.run_until_initialized();
    const Cycle base = sys.now();
    const std::uint32_t bb = config.frontend.beat_bytes();

    std::vector<TraceEntry> entries = w.entries;
    std::stable_sort(entries.begin(), entries.end(),
                     [](const TraceEntry& a, const TraceEntry& b) { return a.issue_cycle < b.issue_cycle; });
    const Addr cap = config.profile.capacity_bytes();
    for (const auto& e : entries) {
        if (e.addr >= cap || e.len > cap - e.addr)
            throw ConfigError("trace: transfer at 0x" + [&] {
                std::ostringstream os;
                os << std::hex << e.addr;
                return os.str();
            }() + " exceeds the device capacity");
    }

    std::mt19937_64 rng(config.harness.seed);
    BusStats bus0;
    EventCounts ev0;
    bool window = false;
    std::size_t next = 0;
    while (next < entries.size()) {
        const Cycle due = base + entries[next].issue_cycle;
        if (sys.now() >= due) {
            if (!window) {
                bus0 = sys.bus();
                ev0 = sys.events();
                window = true;
            }
            std::vector<BusTransaction> batch;
            for (; next < entries.size() && base + entries[next].issue_cycle <= sys.now(); ++next) {
                const TraceEntry& e = entries[next];
                std::vector<std::uint8_t> payload;
                if (e.direction == Direction::Write) {
                    payload.resize(e.len);
                    fill_random(rng, payload);
                }
                batch.push_back(make_transfer(0, e.direction, e.addr, e.len, bb, payload));
            }
            d.offer(std::move(batch));
        }
        d.step();
    }
    d.drain();
    SimulationResult r;
    finish(d, r, bus0, ev0, window);
    return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

std::vector<std::uint64_t> burst_sizes(std::uint64_t min_bytes, std::uint64_t max_bytes) {
    if (min_bytes < 8 || !is_power_of_two(min_bytes) || !is_power_of_two(max_bytes) || max_bytes < min_bytes)
        throw ConfigError("sweep: burst sizes must be powers of two >= 8 with min <= max");
    std::vector<std::uint64_t> out;
    for (std::uint64_t b = min_bytes; b <= max_bytes; b *= 2) out.push_back(b);
    return out;
}

BurstMeasurement measure_burst(const SystemConfig& config, std::uint64_t burst_bytes, Direction dir) {
    if (burst_bytes < 8 || !is_power_of_two(burst_bytes))
        throw ConfigError("sweep: burst size must be a power of two >= 8");
    Driver d(config);
    MemorySystem& sys = d.sys();
    std::mt19937_64 rng(config.harness.seed ^ burst_bytes);
    const Cycle window =
        config.harness.measure_cycles ? config.harness.measure_cycles : 32 * config.manager.refresh_interval;
    const Addr cap = config.profile.capacity_bytes();
    const std::uint32_t bb = config.frontend.beat_bytes();

    sys.run_until_initialized();
    const Cycle init_done = sys.now();
    Addr cursor = 0;
    std::optional<Cycle> start;
    BusStats bus0;
    EventCounts ev0;
    while (!start || sys.now() - *start < window) {
        if (sys.frontend().queued() == 0) {
            d.offer(dma_burst(rng, dir, cursor, burst_bytes, bb));
            cursor = (cursor + burst_bytes) % cap;
        }
        d.step();
        // Same-shaped steady states then measure bit-identical windows.
        if (!start && d.completed() >= config.harness.warmup_bursts &&
            (sys.now() - init_done) % config.harness.warmup_align == 0) {
            start = sys.now();
            bus0 = sys.bus();
            ev0 = sys.events();
        }
    }
    BurstMeasurement m;
    m.burst_bytes = burst_bytes;
    m.direction = dir;
    m.stats = sys.bus() - bus0;
    m.events = sys.events() - ev0;
    m.violations = sys.device().violation_log().size();
    m.mismatches = d.mismatches();
    return m;
}

std::vector<BurstMeasurement> sweep_bursts(const SystemConfig& config, Direction dir,
                                           const std::vector<std::uint64_t>& sizes, unsigned jobs) {
    std::vector<BurstMeasurement> out(sizes.size());
    if (jobs <= 1) {
        for (std::size_t i = 0; i < sizes.size(); ++i) out[i] = measure_burst(config, sizes[i], dir);
        return out;
    }
    std::size_t next = 0;
    while (next < sizes.size()) {
        std::vector<std::future<BurstMeasurement>> batch;
        const std::size_t first = next;
        for (; next < sizes.size() && next - first < jobs; ++next) {
            batch.push_back(std::async(std::launch::async, measure_burst, std::cref(config), sizes[next], dir));
        }
        for (std::size_t i = 0; i < batch.size(); ++i) out[first + i] = batch[i].get();
    }
    return out;
}

SweepPoint to_sweep_point(const BurstMeasurement& m, const SystemConfig& config) {
    SweepPoint p;
    p.burst_bytes = m.burst_bytes;
    p.direction = m.direction;
    p.alpha = utilization(m.stats);
    p.throughput_mbps = throughput(m.stats, config.profile.timing.freq_mhz) / 1e6;
    p.energy_pj_per_byte = m.stats.bytes_transferred
                               ? energy_per_byte(m.stats, m.events, config.energy, config.profile.timing.freq_mhz)
                               : 0.0;
    return p;
}

SimulationResult run(const SystemConfig& config, const Workload& workload, std::ostream* bus_trace) {
    config.validate();
    return std::visit(
        [&](const auto& w) -> SimulationResult {
            using W = std::decay_t<decltype(w)>;
            if constexpr (std::is_same_v<W, SweepWorkload>) {
                SimulationResult r;
                r.bursts = sweep_bursts(config, w.direction, w.burst_sizes);
                for (const auto& b : r.bursts) {
                    r.violations += b.violations;
                    r.mismatches += b.mismatches;
                }
                return r;
            } else if constexpr (std::is_same_v<W, SequentialWorkload>) {
                return run_sequential(config, w, bus_trace);
            } else if constexpr (std::is_same_v<W, RandomWorkload>) {
                return run_random(config, w, bus_trace);
            } else {
                return run_trace(config, w, bus_trace);
            }
        },
        workload.kind);
}

SequentialWorkload mem_workload() {
    SequentialWorkload w;
    w.addr = 0;
    w.total_bytes = 2 * 1024 * 1024;
    w.burst_bytes = 64 * 1024;
    w.direction = Direction::Write;
    return w;
}

double mem_energy_per_byte(const SystemConfig& config) {
    const SimulationResult r = run(config, Workload{mem_workload()});
    return energy_per_byte(r.stats, r.events, config.energy, config.profile.timing.freq_mhz);
}

double calibrate_background_power(const SystemConfig& config, double target_pj_per_byte) {
    const SimulationResult r = run(config, Workload{mem_workload()});
    return solve_background_power(r.stats, r.events, config.energy, config.profile.timing.freq_mhz,
                                  target_pj_per_byte);
}

std::uint64_t verify_against_oracle(const SystemConfig& config, const RandomWorkload& workload) {
    RandomWorkload w = workload;
    w.read_back = true;
    return run(config, Workload{w}).mismatches;
}

// ---------------------------------------------------------------------------
// LLC equivalence
// ---------------------------------------------------------------------------

LlcCheck verify_llc(const SystemConfig& config, std::uint64_t seed, std::uint64_t accesses) {
    config.validate();
    MemorySystem cached_sys(config);
    MemorySystem plain_sys(config);
    cached_sys.run_until_initialized();
    plain_sys.run_until_initialized();
    BlockingPort cached_port(cached_sys);
    BlockingPort plain_port(plain_sys);
    Llc llc(config.llc, cached_port);

    const LlcConfig& lc = config.llc;
    FlatMemory dram;
    // SPM model: per-way bytes, zeroed whenever a way changes role.
    std::vector<std::vector<std::uint8_t>> spm(lc.ways, std::vector<std::uint8_t>(lc.way_bytes(), 0));
    std::uint32_t mask = lc.spm_way_mask;
    const auto spm_ref = [&](Addr off) -> std::uint8_t& {
        std::uint32_t m = mask;
        for (std::uint64_t k = 0; k < off / lc.way_bytes(); ++k) m &= m - 1;
        return spm[static_cast<std::size_t>(std::countr_zero(m))][off % lc.way_bytes()];
    };

    std::mt19937_64 rng(seed);
    // Twice the cache capacity so that evictions and write-backs occur.
    const std::uint64_t region = std::min<std::uint64_t>(2 * lc.spm_window_bytes(), config.profile.capacity_bytes());
    LlcCheck out;
    for (std::uint64_t i = 0; i < accesses; ++i) {
        const auto op = rng() % 20;
        if (op == 0) {
            const auto next = static_cast<std::uint32_t>(rng() & ((lc.ways >= 32) ? ~0u : (1u << lc.ways) - 1));
            const std::uint32_t changed = next ^ mask;
            for (std::uint32_t w = 0; w < lc.ways; ++w) {
                if ((changed >> w) & 1u) std::fill(spm[w].begin(), spm[w].end(), 0);
            }
            llc.configure_spm(next);
            mask = next;
            ++out.reconfigurations;
            continue;
        }
        const std::uint64_t len = 1 + rng() % 128;
        if (op <= 3) {
            const std::uint64_t aperture = static_cast<std::uint64_t>(std::popcount(mask)) * lc.way_bytes();
            if (aperture < len) continue;
            const Addr off = rng() % (aperture - len + 1);
            const Addr addr = lc.spm_base + off;
            const std::uint64_t before = cached_port.transactions();
            ++out.spm_accesses;
            if (rng() & 1) {
                std::vector<std::uint8_t> data(len);
                fill_random(rng, data);
                llc.write(addr, data);
                for (std::uint64_t k = 0; k < len; ++k) spm_ref(off + k) = data[k];
            } else {
                const auto got = llc.read(addr, len);
                for (std::uint64_t k = 0; k < len; ++k) {
                    if (got[k] != spm_ref(off + k)) {
                        ++out.mismatches;
                        break;
                    }
                }
            }
            out.spm_downstream_traffic += cached_port.transactions() - before;
            continue;
        }
        const Addr addr = rng() % (region - len + 1);
        if (rng() & 1) {
            std::vector<std::uint8_t> data(len);
            fill_random(rng, data);
            llc.write(addr, data);
            plain_port.write(addr, data);
            dram.write(addr, data);
        } else {
            const auto a = llc.read(addr, len);
            const auto b = plain_port.read(addr, len);
            if (a != b) ++out.divergences;
            if (a != dram.read(addr, len)) ++out.mismatches;
        }
    }
    // After a flush the cached system's DRAM must agree with the model too.
    llc.flush();
    for (Addr a = 0; a < region; a += 2048) {
        const std::uint64_t n = std::min<std::uint64_t>(2048, region - a);
        if (cached_port.read(a, n) != dram.read(a, n)) ++out.mismatches;
    }
    out.violations = cached_sys.device().violation_log().size() + plain_sys.device().violation_log().size();
    return out;
}

}  // namespace rpcsim
