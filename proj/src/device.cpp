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

#include "rpcsim/device.hpp"

#include <algorithm>
#include <ostream>

namespace rpcsim {

std::string_view to_string(BankPhase p) {
    switch (p) {
        case BankPhase::Idle: return "idle";
        case BankPhase::Active: return "active";
        case BankPhase::Refreshing: return "refreshing";
    }
    return "?";
}

DramDevice::DramDevice(Profile profile, std::uint8_t fill)
    : profile_(std::move(profile)), fill_(fill), banks_(profile_.geometry.banks) {
    profile_.validate();
}

void DramDevice::settle(Cycle cycle) const {
    for (auto& b : banks_) {
        if (b.phase == BankPhase::Refreshing && cycle >= b.refresh_end) b.phase = BankPhase::Idle;
    }
}

bool DramDevice::initialized(Cycle cycle) const { return init_done_at_ && cycle >= *init_done_at_; }

Cycle DramDevice::zq_age(Cycle cycle) const { return cycle >= last_zq_ ? cycle - last_zq_ : 0; }

BankState DramDevice::bank(std::uint32_t b, Cycle cycle) const {
    settle(cycle);
    return banks_.at(b);
}

Word DramDevice::fill_word() const {
    Word w;
    w.fill(fill_);
    return w;
}

CommandResult DramDevice::reject(Cycle cycle, ViolationKind kind, std::string constraint,
                                 const RpcCommand& c, Cycle required, Cycle actual) {
    Violation v{cycle, kind, std::move(constraint), to_string(c), required, actual};
    violations_.push_back(v);
    return CommandResult{std::move(v)};
}

std::optional<CommandResult> DramDevice::check_bus(const RpcCommand& c, Cycle cycle) {
    if (cycle < bus_busy_until_) {
        return reject(cycle, ViolationKind::Timing, "db_bus", c, bus_busy_until_ - cycle, 0);
    }
    return std::nullopt;
}

CommandResult DramDevice::apply_command(const RpcCommand& c, Cycle cycle,
                                        std::span<const Word> write_data) {
    settle(cycle);
    const TimingParams& t = profile_.timing;
    const CommandKind kind = kind_of(c);

    if (kind == CommandKind::InitStep) {
        const auto& step = std::get<cmd::InitStep>(c);
        if (init_done_at_ || step.index != next_init_step_ ||
            step.index >= t.t_init_steps.size()) {
            return reject(cycle, ViolationKind::State, "init_order", c);
        }
        if (cycle < init_step_ready_) {
            const Cycle prev = t.t_init_steps[step.index - 1];
            return reject(cycle, ViolationKind::Timing, "t_init_step", c, prev,
                          prev - (init_step_ready_ - cycle));
        }
        if (auto bad = check_bus(c, cycle)) return *bad;
        bus_busy_until_ = cycle + bus_reservation(c, t);
        init_step_ready_ = cycle + t.t_init_steps[step.index];
        ++next_init_step_;
        if (next_init_step_ == t.t_init_steps.size()) {
            init_done_at_ = init_step_ready_;
            last_zq_ = *init_done_at_;
            for (auto& b : banks_) b.last_refresh = *init_done_at_;
        }
        return {};
    }

    if (!initialized(cycle)) return reject(cycle, ViolationKind::NotInitialized, "not_initialized", c);
    if (auto bad = check_bus(c, cycle)) return *bad;

    const auto bank_ok = [&](std::uint32_t b) { return b < banks_.size(); };
    const auto gap_since = [&](const std::optional<Cycle>& ts) { return ts ? cycle - *ts : ~Cycle{0}; };

    switch (kind) {
        case CommandKind::Activate: {
            const auto& a = std::get<cmd::Activate>(c);
            if (!bank_ok(a.bank) || a.row >= profile_.geometry.rows)
                return reject(cycle, ViolationKind::State, "address_range", c);
            BankState& b = banks_[a.bank];
            if (b.phase == BankPhase::Refreshing)
                return reject(cycle, ViolationKind::State, "bank_refreshing", c);
            if (b.phase == BankPhase::Active) return reject(cycle, ViolationKind::State, "bank_active", c);
            if (gap_since(b.last_precharge) < t.t_rp)
                return reject(cycle, ViolationKind::Timing, "t_rp", c, t.t_rp, gap_since(b.last_precharge));
            b.phase = BankPhase::Active;
            b.open_row = a.row;
            b.last_activate = cycle;
            break;
        }
        case CommandKind::Read:
        case CommandKind::Write: {
            const bool is_write = kind == CommandKind::Write;
            std::uint32_t bank_idx = 0, col = 0, n = 0;
            if (is_write) {
                const auto& w = std::get<cmd::Write>(c);
                bank_idx = w.bank, col = w.col, n = w.n_words;
            } else {
                const auto& r = std::get<cmd::Read>(c);
                bank_idx = r.bank, col = r.col, n = r.n_words;
            }
            if (!bank_ok(bank_idx)) return reject(cycle, ViolationKind::State, "address_range", c);
            BankState& b = banks_[bank_idx];
            if (b.phase == BankPhase::Refreshing)
                return reject(cycle, ViolationKind::State, "bank_refreshing", c);
            if (b.phase != BankPhase::Active)
                return reject(cycle, ViolationKind::State, "bank_not_active", c);
            if (gap_since(b.last_activate) < t.t_rcd)
                return reject(cycle, ViolationKind::Timing, "t_rcd", c, t.t_rcd, gap_since(b.last_activate));
            if (n == 0 || col + n > t.words_per_page())
                return reject(cycle, ViolationKind::State, "page_overflow", c);
            if (is_write && write_data.size() != n)
                return reject(cycle, ViolationKind::State, "write_data_size", c);

            b.burst_end = cycle + bus_reservation(c, t);
            b.last_access_write = is_write;
            if (is_write) {
                const auto& w = std::get<cmd::Write>(c);
                b.last_write = cycle;
                b.write_data_end = cycle + t.t_cmd_cycles + t.t_mask_cycles + t.t_preamble + word_cycles(n);
                for (std::uint32_t i = 0; i < n; ++i) {
                    ByteMask mask = kFullMask;
                    if (i == 0) mask &= w.first_mask;
                    if (i + 1 == n) mask &= w.last_mask;
                    const Addr addr = compose_address({bank_idx, *b.open_row, col + i}, profile_);
                    auto [it, inserted] = storage_.try_emplace(addr, fill_word());
                    for (std::uint32_t byte = 0; byte < WordGeometry::word_bytes; ++byte) {
                        if (mask & (ByteMask{1} << byte)) it->second[byte] = write_data[i][byte];
                    }
                }
            } else {
                b.last_read = cycle;
            }
            break;
        }
        case CommandKind::Precharge: {
            const auto& p = std::get<cmd::Precharge>(c);
            if (!bank_ok(p.bank)) return reject(cycle, ViolationKind::State, "address_range", c);
            BankState& b = banks_[p.bank];
            if (b.phase != BankPhase::Active)
                return reject(cycle, ViolationKind::State, "bank_not_active", c);
            if (cycle < b.burst_end) return reject(cycle, ViolationKind::State, "burst_in_flight", c);
            if (gap_since(b.last_activate) < t.t_ras)
                return reject(cycle, ViolationKind::Timing, "t_ras", c, t.t_ras, gap_since(b.last_activate));
            if (b.last_access_write && cycle - b.write_data_end < t.t_wr)
                return reject(cycle, ViolationKind::Timing, "t_wr", c, t.t_wr, cycle - b.write_data_end);
            b.phase = BankPhase::Idle;
            b.open_row.reset();
            b.last_precharge = cycle;
            break;
        }
        case CommandKind::Refresh: {
            const auto& r = std::get<cmd::Refresh>(c);
            if (r.bank_set == 0 || (r.bank_set >> banks_.size()) != 0)
                return reject(cycle, ViolationKind::State, "address_range", c);
            for (std::uint32_t i = 0; i < banks_.size(); ++i) {
                if (!(r.bank_set & (1u << i))) continue;
                const BankState& b = banks_[i];
                if (b.phase == BankPhase::Refreshing)
                    return reject(cycle, ViolationKind::State, "bank_refreshing", c);
                if (b.phase == BankPhase::Active) return reject(cycle, ViolationKind::State, "bank_active", c);
                if (gap_since(b.last_precharge) < t.t_rp)
                    return reject(cycle, ViolationKind::Timing, "t_rp", c, t.t_rp, gap_since(b.last_precharge));
            }
            for (std::uint32_t i = 0; i < banks_.size(); ++i) {
                if (!(r.bank_set & (1u << i))) continue;
                BankState& b = banks_[i];
                // A late refresh is still performed; the missed deadline is logged.
                if (b.last_refresh && cycle - *b.last_refresh > t.t_refi) {
                    violations_.push_back({cycle, ViolationKind::Timing, "t_refi", to_string(c), t.t_refi,
                                           cycle - *b.last_refresh});
                }
                b.phase = BankPhase::Refreshing;
                b.refresh_end = cycle + t.t_rfc;
                b.last_refresh = cycle;
            }
            break;
        }
        case CommandKind::ZqCal:
            last_zq_ = cycle;
            break;
        case CommandKind::InitStep:
            break;
    }

    if (is_datapath(kind)) {
        const std::uint32_t own = std::visit(
            [](const auto& x) -> std::uint32_t {
                if constexpr (requires { x.bank; }) return x.bank;
                else return ~0u;
            },
            c);
        for (std::uint32_t i = 0; i < banks_.size(); ++i) {
            if (i != own && banks_[i].phase == BankPhase::Refreshing) {
                ++interleaved_with_refresh_;
                break;
            }
        }
    }
    bus_busy_until_ = cycle + bus_reservation(c, t);
    return {};
}

std::vector<Word> DramDevice::read_words(std::uint32_t bank, std::uint32_t col, std::uint32_t n_words) const {
    std::vector<Word> out;
    out.reserve(n_words);
    const auto& b = banks_.at(bank);
    for (std::uint32_t i = 0; i < n_words; ++i) {
        if (!b.open_row) {
            out.push_back(fill_word());
            continue;
        }
        out.push_back(peek(compose_address({bank, *b.open_row, col + i}, profile_)));
    }
    return out;
}

std::vector<std::uint32_t> DramDevice::check_refresh_deadlines(Cycle cycle, double slack) const {
    std::vector<std::uint32_t> overdue;
    const double limit = static_cast<double>(profile_.timing.t_refi) * slack;
    for (std::uint32_t i = 0; i < banks_.size(); ++i) {
        const Cycle since = banks_[i].last_refresh ? cycle - std::min(cycle, *banks_[i].last_refresh) : cycle;
        if (static_cast<double>(since) > limit) overdue.push_back(i);
    }
    return overdue;
}

void DramDevice::write_violation_report(std::ostream& os) const {
    for (const auto& v : violations_) {
        os << v.cycle << ' ' << v.constraint;
        if (v.kind == ViolationKind::Timing) os << "(required=" << v.required_gap << ",actual=" << v.actual_gap << ')';
        os << ' ' << v.command << '\n';
    }
}

Word DramDevice::peek(Addr word_addr) const {
    auto it = storage_.find(word_addr - word_addr % WordGeometry::word_bytes);
    return it == storage_.end() ? fill_word() : it->second;
}

void DramDevice::corrupt_word(Addr word_addr, std::uint8_t pattern) {
    const Addr key = word_addr - word_addr % WordGeometry::word_bytes;
    auto [it, inserted] = storage_.try_emplace(key, fill_word());
    for (auto& byte : it->second) byte ^= pattern;
}

}  // namespace rpcsim
