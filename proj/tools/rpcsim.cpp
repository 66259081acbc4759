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

// rpcsim: command-line front end of the simulator.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration or parse
// error, 3 protocol violation or deadlock, 4 oracle mismatch.

#include "rpcsim/config.hpp"
#include "rpcsim/errors.hpp"
#include "rpcsim/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>

namespace {

using namespace rpcsim;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kConfig = 2;
constexpr int kViolation = 3;
constexpr int kMismatch = 4;

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string bus_trace;
    std::vector<std::string> overrides;
};

Config resolve_config(const Globals& g) {
    Config c = g.config_path.empty() ? Config{} : load_config(g.config_path);
    std::vector<std::pair<std::string, std::string>> kv;
    for (const auto& o : g.overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError(o + ": expected key=value");
        kv.emplace_back(o.substr(0, eq), o.substr(eq + 1));
    }
    if (!kv.empty()) c = apply_overrides(c, kv);
    if (g.seed) c.system.harness.seed = *g.seed;
    if (!g.out.empty()) c.output.csv = g.out;
    if (!g.bus_trace.empty()) c.output.bus_trace = g.bus_trace;
    return c;
}

/// Output stream for `path`; stdout when empty.
std::ostream& open_out(const std::string& path, std::unique_ptr<std::ofstream>& holder) {
    if (path.empty()) return std::cout;
    holder = std::make_unique<std::ofstream>(path);
    if (!*holder) throw ConfigError("output: cannot open '" + path + "'");
    return *holder;
}

void print_stats(std::ostream& os, const SimulationResult& r, const SystemConfig& cfg) {
    const double freq = cfg.profile.timing.freq_mhz;
    os << "transactions      " << r.transactions << '\n'
       << "window_cycles     " << r.stats.total_cycles << '\n'
       << "data_cycles       " << r.stats.data_cycles << '\n'
       << "bytes             " << r.stats.bytes_transferred << '\n'
       << std::fixed << std::setprecision(4) << "alpha             " << utilization(r.stats) << '\n'
       << std::setprecision(1) << "throughput_MBps   " << throughput(r.stats, freq) / 1e6 << '\n';
    if (r.stats.bytes_transferred) {
        os << "energy_pJ_per_B   " << energy_per_byte(r.stats, r.events, cfg.energy, freq) << '\n';
    }
    os.unsetf(std::ios::floatfield);
    os << "violations        " << r.violations << '\n'
       << "refresh_misses    " << r.refresh_misses << '\n'
       << "mismatches        " << r.mismatches << '\n';
}

int cmd_sweep(const Config& c, const std::string& direction, std::uint64_t min_burst, std::uint64_t max_burst,
              unsigned jobs) {
    if (!c.output.bus_trace.empty()) throw ConfigError("bus_trace: not supported by sweep");
    const auto sizes = burst_sizes(min_burst, max_burst);
    std::vector<Direction> dirs;
    if (direction == "read" || direction == "both") dirs.push_back(Direction::Read);
    if (direction == "write" || direction == "both") dirs.push_back(Direction::Write);

    std::vector<SweepPoint> points;
    std::uint64_t violations = 0, mismatches = 0;
    for (Direction d : dirs) {
        for (const auto& m : sweep_bursts(c.system, d, sizes, jobs)) {
            points.push_back(to_sweep_point(m, c.system));
            violations += m.violations;
            mismatches += m.mismatches;
        }
    }
    std::unique_ptr<std::ofstream> file;
    std::ostream& csv = open_out(c.output.csv, file);
    write_csv(csv, points);
    write_summary(c.output.csv.empty() ? std::cerr : std::cout, points);
    if (violations) {
        std::cerr << "sweep: " << violations << " protocol violations\n";
        return kViolation;
    }
    if (mismatches) {
        std::cerr << "sweep: " << mismatches << " oracle mismatches\n";
        return kMismatch;
    }
    return kOk;
}

int cmd_trace(const Config& c, const std::string& path) {
    TraceWorkload w;
    w.entries = load_trace(path);
    std::unique_ptr<std::ofstream> trace_file;
    std::ostream* trace = c.output.bus_trace.empty() ? nullptr : &open_out(c.output.bus_trace, trace_file);
    const SimulationResult r = run(c.system, Workload{w}, trace);
    std::unique_ptr<std::ofstream> file;
    print_stats(open_out(c.output.csv, file), r, c.system);
    std::cerr << r.violation_report;
    if (r.violations || r.refresh_misses) return kViolation;
    if (r.mismatches) return kMismatch;
    return kOk;
}

int cmd_fuzz(const Config& c, std::uint64_t count, std::uint64_t seeds, bool corrupt) {
    if (count == 0) {
        std::cout << "fuzz: nothing to do\n";
        return kOk;
    }
    std::unique_ptr<std::ofstream> trace_file;
    std::ostream* trace = c.output.bus_trace.empty() ? nullptr : &open_out(c.output.bus_trace, trace_file);
    for (std::uint64_t k = 0; k < seeds; ++k) {
        SystemConfig sc = c.system;
        sc.harness.seed = c.system.harness.seed + k;
        RandomWorkload w;
        w.count = count;
        w.inject_corruption = corrupt;
        const SimulationResult r = run(sc, Workload{w}, k == 0 ? trace : nullptr);
        std::cout << "seed " << sc.harness.seed << ": " << r.transactions << " transactions, " << r.violations
                  << " violations, " << r.mismatches << " mismatches, " << r.refresh_misses << " refresh misses\n";
        std::uint64_t llc_bad = 0;
        if (sc.llc.enabled) {
            const LlcCheck l = verify_llc(sc, sc.harness.seed, count / 4);
            llc_bad = l.mismatches + l.divergences + l.spm_downstream_traffic + l.violations;
            std::cout << "seed " << sc.harness.seed << " llc: " << l.mismatches << " mismatches, " << l.divergences
                      << " divergences, " << l.spm_downstream_traffic << " spm downstream transfers\n";
        }
        if (!r.clean() || llc_bad) {
            std::cerr << r.violation_report;
            std::cerr << "fuzz: FAILED with seed " << sc.harness.seed << '\n';
            return kViolation;
        }
    }
    return kOk;
}

int cmd_calibrate(const Config& c, double target) {
    const double p = calibrate_background_power(c.system, target);
    SystemConfig calibrated = c.system;
    calibrated.energy.p_background = p;
    const double gamma = mem_energy_per_byte(calibrated);
    std::unique_ptr<std::ofstream> file;
    std::ostream& os = open_out(c.output.csv, file);
    os << std::setprecision(10) << "[energy]\np_background = " << p << "\n# gamma_pJ_per_B = " << gamma << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cycle-level RPC DRAM interface simulator"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "INI configuration file")->envname("RPCSIM_CONFIG");
    app.add_option("--seed", g.seed, "Simulation seed");
    app.add_option("--out", g.out, "Output file (CSV or report); stdout if omitted");
    app.add_option("--bus-trace", g.bus_trace, "Write non-idle DB bus beats to this file");
    app.add_option("--set", g.overrides, "Override a configuration key (key=value)");

    std::string direction = "both";
    std::uint64_t min_burst = 8, max_burst = 64 * 1024;
    unsigned jobs = 1;
    auto* sweep = app.add_subcommand("sweep", "Burst-size utilization sweep");
    sweep->add_option("--direction", direction, "Transfer direction")->check(CLI::IsMember({"read", "write", "both"}));
    sweep->add_option("--min-burst", min_burst, "Smallest burst in bytes (power of two)");
    sweep->add_option("--max-burst", max_burst, "Largest burst in bytes (power of two)");
    sweep->add_option("--jobs", jobs, "Burst sizes simulated concurrently")->check(CLI::Range(1u, 256u));

    std::string trace_path;
    auto* trace = app.add_subcommand("trace", "Replay a transfer trace");
    trace->add_option("file", trace_path, "Trace file: <cycle> <R|W> <addr> <len> per line")->required();

    std::uint64_t count = 10'000, seeds = 1;
    bool corrupt = false;
    auto* fuzz = app.add_subcommand("fuzz", "Randomized protocol and data fuzzing");
    fuzz->add_option("--count", count, "Transactions per seed");
    fuzz->add_option("--seeds", seeds, "Number of consecutive seeds, starting at --seed");
    fuzz->add_flag("--inject-corruption", corrupt, "Corrupt device storage before read-back");

    double target = 250.0;
    auto* calibrate = app.add_subcommand("calibrate-energy", "Solve the background power for a target energy per byte");
    calibrate->add_option("--target", target, "Target pJ/B")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        const Config c = resolve_config(g);
        if (*sweep) return cmd_sweep(c, direction, min_burst, max_burst, jobs);
        if (*trace) return cmd_trace(c, trace_path);
        if (*fuzz) return cmd_fuzz(c, count, seeds, corrupt);
        if (*calibrate) return cmd_calibrate(c, target);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfig;
    } catch (const TraceParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfig;
    } catch (const DeadlockDetected& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kViolation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kFailure;
}
