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

#include "rpcsim/protocol.hpp"

#include "rpcsim/errors.hpp"

#include <sstream>

namespace rpcsim {

namespace {

void require(bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(std::string(key) + ": " + what);
}

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

void TimingParams::validate() const {
    require(freq_mhz > 0.0, "timing.freq_mhz", "must be > 0");
    require(t_rcd > 0, "timing.t_rcd", "must be > 0");
    require(t_ras > 0, "timing.t_ras", "must be > 0");
    require(t_rp > 0, "timing.t_rp", "must be > 0");
    require(t_wr > 0, "timing.t_wr", "must be > 0");
    require(t_rfc > 0, "timing.t_rfc", "must be > 0");
    require(t_refi > 0, "timing.t_refi", "must be > 0");
    require(t_zqi > 0, "timing.t_zqi", "must be > 0");
    require(t_refi > t_rfc, "timing.t_refi", "must exceed timing.t_rfc");
    require(!t_init_steps.empty(), "timing.t_init_steps", "must list at least one step");
    for (Cycle d : t_init_steps) require(d > 0, "timing.t_init_steps", "durations must be > 0");
    require(t_cmd_cycles > 0, "timing.t_cmd_cycles", "must be > 0");
    require(t_mask_cycles > 0, "timing.t_mask_cycles", "must be > 0");
    require(t_preamble > 0, "timing.t_preamble", "must be > 0");
    require(t_postamble > 0, "timing.t_postamble", "must be > 0");
    require(is_power_of_two(page_bytes), "timing.page_bytes", "must be a power of two");
    require(page_bytes % WordGeometry::word_bytes == 0 && page_bytes >= WordGeometry::word_bytes,
            "timing.page_bytes", "must be a multiple of the 32-byte word");
}

void DeviceGeometry::validate() const {
    require(banks >= 1 && banks <= 32, "device.banks", "must be in [1, 32]");
    require(is_power_of_two(banks), "device.banks", "must be a power of two");
    require(rows >= 1 && is_power_of_two(rows), "device.rows", "must be a power of two");
}

Location map_address(Addr addr, const Profile& p) {
    const Addr page = addr / p.timing.page_bytes;
    Location loc;
    loc.col = static_cast<std::uint32_t>((addr % p.timing.page_bytes) / WordGeometry::word_bytes);
    loc.bank = static_cast<std::uint32_t>(page % p.geometry.banks);
    loc.row = static_cast<std::uint32_t>((page / p.geometry.banks) % p.geometry.rows);
    return loc;
}

Addr compose_address(const Location& loc, const Profile& p) {
    const Addr page = Addr{loc.row} * p.geometry.banks + loc.bank;
    return page * p.timing.page_bytes + Addr{loc.col} * WordGeometry::word_bytes;
}

std::string_view to_string(CommandKind k) {
    switch (k) {
        case CommandKind::Activate: return "ACT";
        case CommandKind::Read: return "RD";
        case CommandKind::Write: return "WR";
        case CommandKind::Precharge: return "PRE";
        case CommandKind::Refresh: return "REF";
        case CommandKind::ZqCal: return "ZQ";
        case CommandKind::InitStep: return "INIT";
    }
    return "?";
}

std::string to_string(const RpcCommand& c) {
    std::ostringstream os;
    os << to_string(kind_of(c));
    std::visit(Overloaded{
                   [&](const cmd::Activate& a) { os << " b" << a.bank << " r" << a.row; },
                   [&](const cmd::Read& r) { os << " b" << r.bank << " c" << r.col << " n" << r.n_words; },
                   [&](const cmd::Write& w) {
                       os << " b" << w.bank << " c" << w.col << " n" << w.n_words << std::hex
                          << " fm=0x" << w.first_mask << " lm=0x" << w.last_mask << std::dec;
                   },
                   [&](const cmd::Precharge& p) { os << " b" << p.bank; },
                   [&](const cmd::Refresh& r) { os << std::hex << " set=0x" << r.bank_set << std::dec; },
                   [&](const cmd::ZqCal&) {},
                   [&](const cmd::InitStep& s) { os << " step" << s.index; },
               },
               c);
    return os.str();
}

std::string_view to_string(BeatKind k) {
    switch (k) {
        case BeatKind::Idle: return "idle";
        case BeatKind::Command: return "cmd";
        case BeatKind::Mask: return "mask";
        case BeatKind::Preamble: return "pre";
        case BeatKind::Data: return "data";
        case BeatKind::Postamble: return "post";
    }
    return "?";
}

Cycle bus_reservation(const RpcCommand& c, const TimingParams& t) {
    return std::visit(
        Overloaded{
            [&](const cmd::Read& r) {
                return t.t_cmd_cycles + t.t_preamble + word_cycles(r.n_words) + t.t_postamble;
            },
            [&](const cmd::Write& w) {
                return t.t_cmd_cycles + t.t_mask_cycles + t.t_preamble + word_cycles(w.n_words) +
                       t.t_postamble;
            },
            [&](const cmd::ZqCal&) { return t.t_cmd_cycles + t.t_zq; },
            [&](const auto&) { return t.t_cmd_cycles; },
        },
        c);
}

WordSpan bytes_to_words(Addr addr, std::uint64_t len) {
    constexpr Addr wb = WordGeometry::word_bytes;
    const Addr last = addr + len - 1;
    WordSpan s;
    s.first_word_addr = addr - addr % wb;
    s.n_words = static_cast<std::uint32_t>(last / wb - addr / wb + 1);
    s.head_offset = static_cast<std::uint32_t>(addr % wb);
    s.tail_offset = static_cast<std::uint32_t>(last % wb);
    return s;
}

double peak_bandwidth(double freq_mhz) {
    if (!(freq_mhz > 0.0)) throw std::invalid_argument("peak_bandwidth: freq_mhz must be > 0");
    return freq_mhz * 1e6 * WordGeometry::bytes_per_bus_cycle;
}

}  // namespace rpcsim
