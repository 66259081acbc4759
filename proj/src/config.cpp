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

#include "rpcsim/config.hpp"

#include "rpcsim/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>

namespace rpcsim {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) { throw ConfigError(key + ": " + what); }

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::uint64_t parse_u64(const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    std::string_view digits = v;
    int base = 10;
    if (digits.size() > 2 && digits[0] == '0' && (digits[1] == 'x' || digits[1] == 'X')) {
        digits.remove_prefix(2);
        base = 16;
    }
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), out, base);
    if (digits.empty() || ec != std::errc{} || p != digits.data() + digits.size())
        bad(key, "expected an unsigned integer, got '" + v + "'");
    return out;
}

std::uint32_t parse_u32(const std::string& key, const std::string& raw) {
    const std::uint64_t v = parse_u64(key, raw);
    if (v > 0xFFFF'FFFFull) bad(key, "value out of range");
    return static_cast<std::uint32_t>(v);
}

double parse_double(const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc{} || p != v.data() + v.size()) bad(key, "expected a number, got '" + v + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    bad(key, "expected a boolean, got '" + v + "'");
}

std::vector<Cycle> parse_list(const std::string& key, const std::string& raw) {
    std::vector<Cycle> out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_u64(key, item));
    if (out.empty()) bad(key, "expected a comma-separated list");
    return out;
}

std::string fmt_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

struct Entry {
    std::string key;
    std::function<void(Config&, const std::string&)> set;
    std::function<std::string(const Config&)> get;
};

Entry u64(const std::string& key, std::function<std::uint64_t&(Config&)> ref) {
    return {key, [key, ref](Config& c, const std::string& v) { ref(c) = parse_u64(key, v); },
            [ref](const Config& c) { return std::to_string(ref(const_cast<Config&>(c))); }};
}
Entry u32(const std::string& key, std::function<std::uint32_t&(Config&)> ref) {
    return {key, [key, ref](Config& c, const std::string& v) { ref(c) = parse_u32(key, v); },
            [ref](const Config& c) { return std::to_string(ref(const_cast<Config&>(c))); }};
}
Entry hex32(const std::string& key, std::function<std::uint32_t&(Config&)> ref) {
    return {key, [key, ref](Config& c, const std::string& v) { ref(c) = parse_u32(key, v); },
            [ref](const Config& c) {
                std::ostringstream os;
                os << "0x" << std::hex << ref(const_cast<Config&>(c));
                return os.str();
            }};
}
Entry hex64(const std::string& key, std::function<std::uint64_t&(Config&)> ref) {
    return {key, [key, ref](Config& c, const std::string& v) { ref(c) = parse_u64(key, v); },
            [ref](const Config& c) {
                std::ostringstream os;
                os << "0x" << std::hex << ref(const_cast<Config&>(c));
                return os.str();
            }};
}
Entry dbl(const std::string& key, std::function<double&(Config&)> ref) {
    return {key, [key, ref](Config& c, const std::string& v) { ref(c) = parse_double(key, v); },
            [ref](const Config& c) { return fmt_double(ref(const_cast<Config&>(c))); }};
}
Entry boolean(const std::string& key, std::function<bool&(Config&)> ref) {
    return {key, [key, ref](Config& c, const std::string& v) { ref(c) = parse_bool(key, v); },
            [ref](const Config& c) { return std::string(ref(const_cast<Config&>(c)) ? "true" : "false"); }};
}
Entry text(const std::string& key, std::function<std::string&(Config&)> ref) {
    return {key, [ref](Config& c, const std::string& v) { ref(c) = trim(v); },
            [ref](const Config& c) { return ref(const_cast<Config&>(c)); }};
}

const std::vector<Entry>& registry() {
    static const std::vector<Entry> entries = [] {
        std::vector<Entry> e;
        // clang-format off
        e.push_back(dbl("timing.freq_mhz", [](Config& c) -> double& { return c.system.profile.timing.freq_mhz; }));
        e.push_back(u64("timing.t_rcd", [](Config& c) -> std::uint64_t& { return c.system.profile.timing.t_rcd; }));
        e.push_back(u64("timing.t_ras", [](Config& c) -> std::uint64_t& { return c.system.profile.timing.t_ras; }));
        e.push_back(u64("timing.t_rp", [](Config& c) -> std::uint64_t& { return c.system.profile.timing.t_rp; }));
        e.push_back(u64("timing.t_wr", [](Config& c) -> std::uint64_t& { return c.system.profile.timing.t_wr; }));
        e.push_back(u64("timing.t_rfc", [](Config& c) -> std::uint64_t& { return c.system.profile.timing.t_rfc; }));
        e.push_back(u64("timing.t_refi", [](Config& c) -> std::uint64_t& { return c.system.profile.timing.t_refi; }));
        e.push_back(u64("timing.t_zqi", [](Config& c) -> std::uint64_t& { return c.system.profile.timing.t_zqi; }));
        e.push_back(u64("timing.t_zq", [](Config& c) -> std::uint64_t& { return c.system.profile.timing.t_zq; }));
        e.push_back({"timing.t_init_steps",
                     [](Config& c, const std::string& v) { c.system.profile.timing.t_init_steps = parse_list("timing.t_init_steps", v); },
                     [](const Config& c) {
                         std::string s;
                         for (Cycle d : c.system.profile.timing.t_init_steps) s += (s.empty() ? "" : ",") + std::to_string(d);
                         return s;
                     }});
        e.push_back(u64("timing.t_cmd_cycles", [](Config& c) -> std::uint64_t& { return c.system.profile.timing.t_cmd_cycles; }));
        e.push_back(u64("timing.t_mask_cycles", [](Config& c) -> std::uint64_t& { return c.system.profile.timing.t_mask_cycles; }));
        e.push_back(u64("timing.t_preamble", [](Config& c) -> std::uint64_t& { return c.system.profile.timing.t_preamble; }));
        e.push_back(u64("timing.t_postamble", [](Config& c) -> std::uint64_t& { return c.system.profile.timing.t_postamble; }));
        e.push_back(u32("timing.page_bytes", [](Config& c) -> std::uint32_t& { return c.system.profile.timing.page_bytes; }));

        e.push_back(u32("device.banks", [](Config& c) -> std::uint32_t& { return c.system.profile.geometry.banks; }));
        e.push_back(u32("device.rows", [](Config& c) -> std::uint32_t& { return c.system.profile.geometry.rows; }));

        e.push_back(u32("controller.queue_depth", [](Config& c) -> std::uint32_t& { return c.system.controller.queue_depth; }));
        e.push_back(u32("controller.act_lookahead", [](Config& c) -> std::uint32_t& { return c.system.controller.act_lookahead; }));

        e.push_back(u64("manager.refresh_interval", [](Config& c) -> std::uint64_t& { return c.system.manager.refresh_interval; }));
        e.push_back(u64("manager.zq_interval", [](Config& c) -> std::uint64_t& { return c.system.manager.zq_interval; }));
        e.push_back(u64("manager.refresh_priority_window", [](Config& c) -> std::uint64_t& { return c.system.manager.refresh_priority_window; }));

        e.push_back(u64("phy.cdc_delay", [](Config& c) -> std::uint64_t& { return c.system.controller.phy.cdc_delay; }));
        e.push_back(u64("phy.output_strobe_offset", [](Config& c) -> std::uint64_t& { return c.system.controller.phy.output_strobe_offset; }));

        e.push_back(u32("frontend.data_width_bits", [](Config& c) -> std::uint32_t& { return c.system.frontend.data_width_bits; }));
        e.push_back(u64("frontend.write_buffer_bytes", [](Config& c) -> std::uint64_t& { return c.system.frontend.write_buffer_bytes; }));
        e.push_back(u64("frontend.read_buffer_bytes", [](Config& c) -> std::uint64_t& { return c.system.frontend.read_buffer_bytes; }));
        e.push_back(u32("frontend.max_outstanding", [](Config& c) -> std::uint32_t& { return c.system.frontend.max_outstanding; }));
        e.push_back(u32("frontend.addr_width_bits", [](Config& c) -> std::uint32_t& { return c.system.frontend.addr_width_bits; }));

        e.push_back(boolean("llc.enabled", [](Config& c) -> bool& { return c.system.llc.enabled; }));
        e.push_back(u32("llc.sets", [](Config& c) -> std::uint32_t& { return c.system.llc.sets; }));
        e.push_back(u32("llc.ways", [](Config& c) -> std::uint32_t& { return c.system.llc.ways; }));
        e.push_back(u32("llc.line_bytes", [](Config& c) -> std::uint32_t& { return c.system.llc.line_bytes; }));
        e.push_back(hex32("llc.spm_way_mask", [](Config& c) -> std::uint32_t& { return c.system.llc.spm_way_mask; }));
        e.push_back(hex64("llc.spm_base", [](Config& c) -> std::uint64_t& { return c.system.llc.spm_base; }));

        e.push_back(dbl("energy.e_data_per_byte", [](Config& c) -> double& { return c.system.energy.e_data_per_byte; }));
        e.push_back(dbl("energy.e_command", [](Config& c) -> double& { return c.system.energy.e_command; }));
        e.push_back(dbl("energy.e_activate", [](Config& c) -> double& { return c.system.energy.e_activate; }));
        e.push_back(dbl("energy.e_precharge", [](Config& c) -> double& { return c.system.energy.e_precharge; }));
        e.push_back(dbl("energy.e_refresh", [](Config& c) -> double& { return c.system.energy.e_refresh; }));
        e.push_back(dbl("energy.e_idle_per_cycle", [](Config& c) -> double& { return c.system.energy.e_idle_per_cycle; }));
        e.push_back(dbl("energy.p_background", [](Config& c) -> double& { return c.system.energy.p_background; }));

        e.push_back(u64("harness.seed", [](Config& c) -> std::uint64_t& { return c.system.harness.seed; }));
        e.push_back(u64("harness.deadlock_bound", [](Config& c) -> std::uint64_t& { return c.system.harness.deadlock_bound; }));
        e.push_back(u32("harness.warmup_bursts", [](Config& c) -> std::uint32_t& { return c.system.harness.warmup_bursts; }));
        e.push_back(u64("harness.warmup_align", [](Config& c) -> std::uint64_t& { return c.system.harness.warmup_align; }));
        e.push_back(u64("harness.measure_cycles", [](Config& c) -> std::uint64_t& { return c.system.harness.measure_cycles; }));
        e.push_back(u64("harness.refresh_check_period", [](Config& c) -> std::uint64_t& { return c.system.harness.refresh_check_period; }));

        e.push_back(text("output.csv", [](Config& c) -> std::string& { return c.output.csv; }));
        e.push_back(text("output.bus_trace", [](Config& c) -> std::string& { return c.output.bus_trace; }));
        // clang-format on
        return e;
    }();
    return entries;
}

const Entry* find(const std::string& key) {
    for (const auto& e : registry()) {
        if (e.key == key) return &e;
    }
    return nullptr;
}

bool starts_with(const std::string& s, std::string_view p) { return s.compare(0, p.size(), p) == 0; }

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& e : registry()) k.push_back(e.key);
        return k;
    }();
    return keys;
}

Config apply_overrides(Config base, const std::vector<std::pair<std::string, std::string>>& kv) {
    std::set<std::string> seen;
    bool timing_changed = false;
    for (const auto& [key, value] : kv) {
        if (!find(key)) bad(key, "unknown configuration key");
        if (!seen.insert(key).second) bad(key, "given more than once");
        if (starts_with(key, "timing.")) timing_changed = true;
    }
    for (const auto& [key, value] : kv) {
        if (!starts_with(key, "manager.")) find(key)->set(base, value);
    }
    // Manager periods follow the timing profile unless set explicitly.
    if (timing_changed) base.system.manager = ManagerConfig::defaults_for(base.system.profile.timing);
    for (const auto& [key, value] : kv) {
        if (starts_with(key, "manager.")) find(key)->set(base, value);
    }
    base.system.validate();
    return base;
}

Config parse_config(std::istream& in) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config: line " + std::to_string(e.line()) + ": " + e.message());
    }
    std::vector<std::pair<std::string, std::string>> kv;
    for (const auto& [name, node] : tree) {
        if (node.empty()) {
            kv.emplace_back(name, node.data());
            continue;
        }
        for (const auto& [key, leaf] : node) kv.emplace_back(name + "." + key, leaf.data());
    }
    return apply_overrides(Config{}, kv);
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    return parse_config(in);
}

void write_config(std::ostream& os, const Config& c) {
    std::string section;
    for (const auto& e : registry()) {
        const auto dot = e.key.find('.');
        const std::string s = e.key.substr(0, dot);
        if (s != section) {
            os << (section.empty() ? "" : "\n") << '[' << s << "]\n";
            section = s;
        }
        os << e.key.substr(dot + 1) << " = " << e.get(c) << '\n';
    }
}

}  // namespace rpcsim
