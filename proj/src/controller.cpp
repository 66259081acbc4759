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

#include "rpcsim/controller.hpp"

#include "rpcsim/errors.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace rpcsim {

// ---------------------------------------------------------------------------
// Command FSM
// ---------------------------------------------------------------------------

void validate(const DatapathRequest& req, const Profile& profile) {
    constexpr Addr wb = WordGeometry::word_bytes;
    const Addr page = profile.timing.page_bytes;
    if (req.word_addr % wb != 0) throw std::invalid_argument("datapath request not word aligned");
    if (req.n_words == 0) throw std::invalid_argument("datapath request with zero words");
    if (req.word_addr % page + Addr{req.n_words} * wb > page)
        throw std::invalid_argument("datapath request crosses a page boundary");
    if (req.word_addr + Addr{req.n_words} * wb > profile.capacity_bytes())
        throw std::invalid_argument("datapath request beyond device capacity");
}

std::vector<RpcCommand> decompose(const DatapathRequest& req, const Profile& profile) {
    validate(req, profile);
    const Location loc = map_address(req.word_addr, profile);
    std::vector<RpcCommand> out;
    out.reserve(3);
    out.emplace_back(cmd::Activate{loc.bank, loc.row});
    if (req.direction == Direction::Read) {
        out.emplace_back(cmd::Read{loc.bank, loc.col, req.n_words});
    } else {
        out.emplace_back(cmd::Write{loc.bank, loc.col, req.n_words, req.first_mask, req.last_mask});
    }
    out.emplace_back(cmd::Precharge{loc.bank});
    return out;
}

// ---------------------------------------------------------------------------
// Manager
// ---------------------------------------------------------------------------

ManagerConfig ManagerConfig::defaults_for(const TimingParams& t) {
    ManagerConfig m;
    m.refresh_interval = t.t_refi / 2;
    m.refresh_priority_window = t.t_refi * 9 / 20;
    m.zq_interval = t.t_zqi;
    for (std::uint32_t i = 0; i < t.t_init_steps.size(); ++i) {
        m.init_schedule.emplace_back(cmd::InitStep{i}, t.t_init_steps[i]);
    }
    return m;
}

void ManagerConfig::validate(const TimingParams& t, const DeviceGeometry& g) const {
    if (refresh_interval == 0 || refresh_interval > t.t_refi)
        throw ConfigError("manager.refresh_interval: must be in (0, timing.t_refi]");
    if (refresh_interval < g.banks)
        throw ConfigError("manager.refresh_interval: must be at least one cycle per bank");
    if (zq_interval == 0) throw ConfigError("manager.zq_interval: must be > 0");
    if (refresh_priority_window > t.t_refi)
        throw ConfigError("manager.refresh_priority_window: must not exceed timing.t_refi");
    if (init_schedule.empty()) throw ConfigError("manager.init_schedule: empty");
}

Manager::Manager(ManagerConfig config, std::uint32_t num_banks)
    : config_(std::move(config)),
      num_banks_(num_banks),
      spacing_(std::max<Cycle>(1, config_.refresh_interval / num_banks)) {}

std::optional<RpcCommand> Manager::tick(Cycle cycle) {
    if (!init_done_at_) {
        if (!step_outstanding_ && next_step_ < config_.init_schedule.size() && cycle >= next_step_at_) {
            step_outstanding_ = true;
            return config_.init_schedule[next_step_].first;
        }
        return std::nullopt;
    }
    if (cycle < *init_done_at_) return std::nullopt;

    // Refresh wins a tie; a due ZQ simply stays due for the next cycle.
    if (cycle >= next_refresh_at_) {
        const std::uint32_t bank = next_bank_;
        next_bank_ = (next_bank_ + 1) % num_banks_;
        next_refresh_at_ += spacing_;
        return cmd::Refresh{1u << bank};
    }
    if (cycle >= next_zq_at_) {
        next_zq_at_ += config_.zq_interval;
        return cmd::ZqCal{};
    }
    return std::nullopt;
}

void Manager::notify_issued(const RpcCommand& c, Cycle cycle) {
    const auto* step = std::get_if<cmd::InitStep>(&c);
    if (!step || init_done_at_) return;
    const Cycle duration = config_.init_schedule.at(step->index).second;
    step_outstanding_ = false;
    next_step_at_ = cycle + duration;
    ++next_step_;
    if (next_step_ == config_.init_schedule.size()) {
        init_done_at_ = cycle + duration;
        next_refresh_at_ = *init_done_at_ + spacing_;
        next_zq_at_ = *init_done_at_ + config_.zq_interval;
    }
}

// ---------------------------------------------------------------------------
// PHY
// ---------------------------------------------------------------------------

void write_beat(std::ostream& os, const BusBeat& b) {
    os << b.cycle << ' ' << to_string(b.kind);
    switch (b.kind) {
        case BeatKind::Command:
            os << ' ' << to_string(b.command) << '.' << int{b.slice};
            break;
        case BeatKind::Data:
        case BeatKind::Mask: {
            os << ' ' << (b.direction == Direction::Read ? 'R' : 'W');
            if (b.kind == BeatKind::Data) os << " tag=" << b.tag << " w=" << b.word_index << " s=" << int{b.slice};
            os << " 0x" << std::hex << std::setfill('0');
            for (int i = 3; i >= 0; --i) os << std::setw(2) << int{b.bytes[static_cast<std::size_t>(i)]};
            os << std::dec << std::setfill(' ');
            break;
        }
        case BeatKind::Preamble:
        case BeatKind::Postamble:
            os << ' ' << (b.direction == Direction::Read ? 'R' : 'W');
            break;
        case BeatKind::Idle:
            break;
    }
    os << '\n';
}

PhyStep Phy::step(Cycle cycle) {
    PhyStep out;
    out.beat.cycle = cycle;
    if (!pending_.empty() && pending_.front().cycle == cycle) {
        out.beat = pending_.front();
        pending_.pop_front();
    }
    if (out.beat.kind == BeatKind::Data && out.beat.direction == Direction::Read) {
        // DDR→SDR sampling yields one 32-bit subword per cycle; eight make a word.
        assembling_.tag = out.beat.tag;
        assembling_.word_index = out.beat.word_index;
        std::copy(out.beat.bytes.begin(), out.beat.bytes.end(),
                  assembling_.data.begin() + std::size_t{out.beat.slice} * 4);
        if (++rx_beats_ == WordGeometry::cycles_per_word) {
            cdc_.emplace_back(cycle + config_.cdc_delay, assembling_);
            rx_beats_ = 0;
        }
    }
    if (!cdc_.empty() && cdc_.front().first <= cycle) {
        out.word = cdc_.front().second;
        cdc_.pop_front();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Timing FSM
// ---------------------------------------------------------------------------

TimingFsm::TimingFsm(const Profile& profile, const ManagerConfig& manager, const ControllerConfig& config)
    : profile_(&profile), manager_(&manager), config_(&config) {}

bool TimingFsm::refresh_has_priority(Cycle now, std::uint32_t bank, std::span<const PendingManagement> management,
                                     std::span<const BankShadow> banks) const {
    for (const auto& m : management) {
        const auto* r = std::get_if<cmd::Refresh>(&m.command);
        if (!r || !(r->bank_set & (1u << bank))) continue;
        const Cycle deadline = banks[bank].last_refresh + profile_->timing.t_refi;
        if (deadline <= now || deadline - now <= manager_->refresh_priority_window) return true;
    }
    return false;
}

namespace {

RpcCommand access_command(const PendingRequest& r) {
    if (r.req.direction == Direction::Read) return cmd::Read{r.loc.bank, r.loc.col, r.req.n_words};
    return cmd::Write{r.loc.bank, r.loc.col, r.req.n_words, r.req.first_mask, r.req.last_mask};
}

}  // namespace

bool TimingFsm::access_starves_refresh(Cycle now, const RpcCommand& access, std::uint32_t own_bank,
                                       std::span<const PendingManagement> management,
                                       std::span<const BankShadow> banks) const {
    // An access holds the shared bus for its whole burst; a pending refresh on
    // an idle bank must not hit its deadline behind it.
    const TimingParams& t = profile_->timing;
    const Cycle clear = now + bus_reservation(access, t) + t.t_cmd_cycles;
    for (const auto& m : management) {
        const auto* r = std::get_if<cmd::Refresh>(&m.command);
        if (!r) continue;
        for (std::uint32_t b = 0; b < banks.size(); ++b) {
            if (b == own_bank || !(r->bank_set & (1u << b)) || banks[b].active) continue;
            if (banks[b].last_refresh + t.t_refi < clear) return true;
        }
    }
    return false;
}

bool TimingFsm::activation_fits(Cycle now, std::span<const PendingRequest> requests, std::size_t from,
                                std::size_t to, const BankShadow& bank) const {
    // The bank stays open until every earlier access and its own have left
    // the bus; it must be precharged and ready for REF before its deadline.
    const TimingParams& t = profile_->timing;
    Cycle busy_until = now;
    for (const auto& r : requests) {
        if (r.stage == RequestStage::NeedPrecharge) busy_until = std::max(busy_until, r.burst_end);
    }
    Cycle finish = busy_until + t.t_rcd;
    for (std::size_t j = from; j <= to; ++j) {
        finish += bus_reservation(access_command(requests[j]), t) + t.t_cmd_cycles;
    }
    finish += std::max(t.t_wr, t.t_ras) + t.t_rp + 2 * t.t_cmd_cycles;
    return finish <= bank.last_refresh + t.t_refi;
}

std::optional<IssueChoice> TimingFsm::select(Cycle now, bool initialized, std::span<const PendingRequest> requests,
                                             std::span<const PendingManagement> management,
                                             std::span<const BankShadow> banks) const {
    const TimingParams& t = profile_->timing;
    const auto bank_ready = [&](const BankShadow& b) {
        return !b.active && now >= b.refresh_end && (!b.precharged_at || now >= *b.precharged_at + t.t_rp);
    };

    IssueChoice chosen{IssueChoice::Source::Management, 0, RpcCommand{}};
    bool found = false;
    Cycle best_age = 0;
    const auto offer = [&](IssueChoice::Source src, std::size_t idx, const RpcCommand& c, Cycle age) {
        if (!found || age < best_age) {
            chosen.source = src;
            chosen.index = idx;
            chosen.command = c;
            found = true;
            best_age = age;
        }
    };
    const auto best = [&]() -> std::optional<IssueChoice> {
        if (!found) return std::nullopt;
        return chosen;
    };

    for (std::size_t i = 0; i < management.size(); ++i) {
        const auto& m = management[i];
        bool eligible = false;
        switch (kind_of(m.command)) {
            case CommandKind::InitStep:
                eligible = true;
                break;
            case CommandKind::Refresh: {
                const auto set = std::get<cmd::Refresh>(m.command).bank_set;
                eligible = initialized;
                bool urgent = false;
                for (std::uint32_t b = 0; eligible && b < banks.size(); ++b) {
                    if (!(set & (1u << b))) continue;
                    eligible = bank_ready(banks[b]);
                    urgent = urgent || refresh_has_priority(now, b, management, banks);
                }
                // Inside the priority window a ready refresh outranks all data commands.
                if (eligible && urgent) return IssueChoice{IssueChoice::Source::Management, i, m.command};
                break;
            }
            case CommandKind::ZqCal:
                eligible = initialized;
                break;
            default:
                break;
        }
        if (eligible) offer(IssueChoice::Source::Management, i, m.command, m.emitted);
    }

    if (!initialized) return best();

    // Data commands leave strictly in request order.
    std::size_t first_unaccessed = requests.size();
    for (std::size_t i = 0; i < requests.size(); ++i) {
        if (requests[i].stage == RequestStage::NeedActivate || requests[i].stage == RequestStage::NeedAccess) {
            first_unaccessed = i;
            break;
        }
    }

    for (std::size_t i = 0; i < requests.size(); ++i) {
        const PendingRequest& r = requests[i];
        if (found && r.arrival >= best_age) break;  // nothing younger can win
        const BankShadow& bank = banks[r.loc.bank];
        switch (r.stage) {
            case RequestStage::NeedActivate: {
                if (i - first_unaccessed > config_->act_lookahead) break;
                bool bank_claimed = false;
                for (std::size_t j = 0; j < i; ++j) {
                    if (requests[j].loc.bank == r.loc.bank && requests[j].stage != RequestStage::Done) {
                        bank_claimed = true;
                        break;
                    }
                }
                if (bank_claimed || !bank_ready(bank)) break;
                if (refresh_has_priority(now, r.loc.bank, management, banks)) break;
                if (!activation_fits(now, requests, std::min(first_unaccessed, i), i, bank)) break;
                offer(IssueChoice::Source::Datapath, i, cmd::Activate{r.loc.bank, r.loc.row}, r.arrival);
                break;
            }
            case RequestStage::NeedAccess: {
                if (i != first_unaccessed || now < bank.activated_at + t.t_rcd) break;
                const RpcCommand access = access_command(r);
                if (access_starves_refresh(now, access, r.loc.bank, management, banks)) break;
                offer(IssueChoice::Source::Datapath, i, access, r.arrival);
                break;
            }
            case RequestStage::NeedPrecharge: {
                if (now < r.burst_end || now < bank.activated_at + t.t_ras) break;
                if (r.req.direction == Direction::Write && now < r.write_data_end + t.t_wr) break;
                offer(IssueChoice::Source::Datapath, i, cmd::Precharge{r.loc.bank}, r.arrival);
                break;
            }
            case RequestStage::Done:
                break;
        }
    }
    return best();
}

// ---------------------------------------------------------------------------
// Controller
// ---------------------------------------------------------------------------

Controller::Controller(const Profile& profile, ControllerConfig config, ManagerConfig manager, DramDevice& device)
    : profile_(profile),
      config_(config),
      manager_config_(std::move(manager)),
      device_(device),
      manager_(manager_config_, profile_.geometry.banks),
      fsm_(profile_, manager_config_, config_),
      phy_(config_.phy),
      banks_(profile_.geometry.banks) {
    profile_.validate();
    manager_config_.validate(profile_.timing, profile_.geometry);
    if (config_.queue_depth == 0) throw ConfigError("controller.queue_depth: must be > 0");
}

void Controller::push(std::uint64_t tag, const DatapathRequest& req, std::vector<Word> write_data, Cycle now) {
    validate(req, profile_);
    if (req.direction == Direction::Write && write_data.size() != req.n_words)
        throw std::invalid_argument("write payload size does not match n_words");
    PendingRequest p;
    p.tag = tag;
    p.req = req;
    p.loc = map_address(req.word_addr, profile_);
    p.arrival = now;
    p.data = std::move(write_data);
    requests_.push_back(std::move(p));
}

bool Controller::idle() const { return requests_.empty() && phy_.idle() && write_done_.empty(); }

ControllerStep Controller::tick(Cycle now) {
    ControllerStep out;
    if (auto m = manager_.tick(now)) management_.push_back({*m, now});

    if (now >= bus_free_at_) {
        auto choice = fsm_.select(now, manager_.initialized(now), requests_, management_, banks_);
        if (choice) {
            issue(*choice, now);
            out.issued = true;
        }
    }

    PhyStep ps = phy_.step(now);
    out.beat = ps.beat;
    out.read_word = std::move(ps.word);

    if (!write_done_.empty() && write_done_.front().first <= now) {
        out.write_done = write_done_.front().second;
        write_done_.pop_front();
    }
    std::erase_if(requests_, [](const PendingRequest& r) { return r.stage == RequestStage::Done; });
    return out;
}

void Controller::issue(const IssueChoice& choice, Cycle now) {
    const TimingParams& t = profile_.timing;
    const RpcCommand& c = choice.command;
    const CommandKind kind = kind_of(c);
    PendingRequest* req = choice.source == IssueChoice::Source::Datapath ? &requests_[choice.index] : nullptr;

    const std::span<const Word> payload =
        (req && kind == CommandKind::Write) ? std::span<const Word>(req->data) : std::span<const Word>();
    if (!device_.apply_command(c, now, payload)) ++rejected_;
    events_.count(kind);

    const Cycle reservation = bus_reservation(c, t);
    bus_free_at_ = now + reservation;

    BusBeat beat;
    beat.kind = BeatKind::Command;
    beat.command = kind;
    const Cycle cmd_beats = kind == CommandKind::ZqCal ? reservation : t.t_cmd_cycles;
    for (Cycle s = 0; s < cmd_beats; ++s) {
        beat.cycle = now + s;
        beat.slice = static_cast<std::uint8_t>(s);
        phy_.schedule(beat);
    }

    const auto schedule_span = [&](BeatKind k, Direction dir, Cycle start, Cycle len) {
        BusBeat b;
        b.kind = k;
        b.direction = dir;
        b.tag = req ? req->tag : 0;
        for (Cycle s = 0; s < len; ++s) {
            b.cycle = start + s;
            b.slice = static_cast<std::uint8_t>(s);
            phy_.schedule(b);
        }
    };
    const auto schedule_data = [&](Direction dir, Cycle start, std::span<const Word> words) {
        BusBeat b;
        b.kind = BeatKind::Data;
        b.direction = dir;
        b.tag = req->tag;
        Cycle cycle = start;
        for (std::uint32_t w = 0; w < words.size(); ++w) {
            b.word_index = w;
            for (std::uint32_t s = 0; s < WordGeometry::cycles_per_word; ++s) {
                b.cycle = cycle++;
                b.slice = static_cast<std::uint8_t>(s);
                std::copy_n(words[w].begin() + s * 4, 4, b.bytes.begin());
                phy_.schedule(b);
            }
        }
    };

    switch (kind) {
        case CommandKind::Activate: {
            BankShadow& b = banks_[req->loc.bank];
            b.active = true;
            b.open_row = req->loc.row;
            b.activated_at = now;
            req->stage = RequestStage::NeedAccess;
            break;
        }
        case CommandKind::Read: {
            const auto& r = std::get<cmd::Read>(c);
            const Cycle data_start = now + t.t_cmd_cycles + t.t_preamble;
            schedule_span(BeatKind::Preamble, Direction::Read, now + t.t_cmd_cycles, t.t_preamble);
            const auto words = device_.read_words(r.bank, r.col, r.n_words);
            schedule_data(Direction::Read, data_start, words);
            schedule_span(BeatKind::Postamble, Direction::Read, data_start + word_cycles(r.n_words), t.t_postamble);
            req->burst_end = now + reservation;
            req->stage = RequestStage::NeedPrecharge;
            break;
        }
        case CommandKind::Write: {
            const auto& w = std::get<cmd::Write>(c);
            BusBeat mask;
            mask.kind = BeatKind::Mask;
            mask.direction = Direction::Write;
            mask.tag = req->tag;
            for (Cycle s = 0; s < t.t_mask_cycles; ++s) {
                const ByteMask m = s == 0 ? w.first_mask : (s == 1 ? w.last_mask : 0);
                mask.cycle = now + t.t_cmd_cycles + s;
                mask.slice = static_cast<std::uint8_t>(s);
                for (int i = 0; i < 4; ++i) mask.bytes[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(m >> (8 * i));
                phy_.schedule(mask);
            }
            const Cycle pre_start = now + t.t_cmd_cycles + t.t_mask_cycles;
            const Cycle data_start = pre_start + t.t_preamble;
            schedule_span(BeatKind::Preamble, Direction::Write, pre_start, t.t_preamble);
            schedule_data(Direction::Write, data_start, req->data);
            schedule_span(BeatKind::Postamble, Direction::Write, data_start + word_cycles(w.n_words), t.t_postamble);
            req->burst_end = now + reservation;
            req->write_data_end = data_start + word_cycles(w.n_words);
            req->stage = RequestStage::NeedPrecharge;
            write_done_.emplace_back(now + reservation + config_.phy.output_strobe_offset, req->tag);
            break;
        }
        case CommandKind::Precharge: {
            BankShadow& b = banks_[req->loc.bank];
            b.active = false;
            b.precharged_at = now;
            req->stage = RequestStage::Done;
            req->data.clear();
            break;
        }
        case CommandKind::Refresh: {
            const auto set = std::get<cmd::Refresh>(c).bank_set;
            for (std::uint32_t i = 0; i < banks_.size(); ++i) {
                if (set & (1u << i)) {
                    banks_[i].refresh_end = now + t.t_rfc;
                    banks_[i].last_refresh = now;
                }
            }
            break;
        }
        case CommandKind::ZqCal:
        case CommandKind::InitStep:
            break;
    }

    if (choice.source == IssueChoice::Source::Management) {
        manager_.notify_issued(c, now);
        management_.erase(management_.begin() + static_cast<std::ptrdiff_t>(choice.index));
        if (kind == CommandKind::InitStep && manager_.init_done_at()) {
            for (auto& b : banks_) b.last_refresh = *manager_.init_done_at();
        }
    }
}

}  // namespace rpcsim
