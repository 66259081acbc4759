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
 * @file controller.hpp
 * @brief RPC DRAM controller: command FSM, manager, timing FSM and PHY model.
 *
 * ```
 *   DatapathRequest ──► command FSM ──┐
 *                                     ├──► timing FSM ──► PHY ──► DB bus ──► device
 *   manager (init/REF/ZQ) ────────────┘                    │
 *                                                          └──► read words (after CDC)
 * ```
 *
 * The controller keeps its own shadow of bank timing; it never asks the device
 * whether a command is legal. Every issued command is still handed to the
 * device, which referees it independently.
 */

#pragma once

#include "rpcsim/device.hpp"
#include "rpcsim/metrics.hpp"
#include "rpcsim/protocol.hpp"

#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace rpcsim {

// ---------------------------------------------------------------------------
// Command FSM
// ---------------------------------------------------------------------------

/// A word-granular access confined to one DRAM page.
struct DatapathRequest {
    Direction direction = Direction::Read;
    Addr word_addr = 0;
    std::uint32_t n_words = 1;
    ByteMask first_mask = kFullMask;  ///< writes only
    ByteMask last_mask = kFullMask;   ///< writes only

    friend bool operator==(const DatapathRequest&, const DatapathRequest&) = default;
};

/// Throws std::invalid_argument if the request is misaligned, empty or
/// crosses a page boundary.
void validate(const DatapathRequest& req, const Profile& profile);

/// Close-page decomposition: ACT, RD|WR, PRE.
std::vector<RpcCommand> decompose(const DatapathRequest& req, const Profile& profile);

// ---------------------------------------------------------------------------
// Manager
// ---------------------------------------------------------------------------

struct ManagerConfig {
    Cycle refresh_interval = 1700;          ///< per-bank refresh period
    Cycle zq_interval = 200000;
    std::vector<std::pair<cmd::InitStep, Cycle>> init_schedule;
    Cycle refresh_priority_window = 1200;   ///< deadline distance below which REF blocks new ACTs

    /// Schedule derived from the timing profile's init durations.
    static ManagerConfig defaults_for(const TimingParams& t);
    void validate(const TimingParams& t, const DeviceGeometry& g) const;
};

/// Generates init, refresh and ZQ commands. At most one command per cycle.
class Manager {
public:
    Manager(ManagerConfig config, std::uint32_t num_banks);

    /// Management command due at `cycle`, if any. Call once per cycle.
    std::optional<RpcCommand> tick(Cycle cycle);

    /// Feedback from the timing FSM; init steps are paced from their issue.
    void notify_issued(const RpcCommand& c, Cycle cycle);

    bool initialized(Cycle cycle) const { return init_done_at_ && cycle >= *init_done_at_; }
    std::optional<Cycle> init_done_at() const { return init_done_at_; }

    Cycle refresh_spacing() const { return spacing_; }
    const ManagerConfig& config() const { return config_; }

private:
    ManagerConfig config_;
    std::uint32_t num_banks_;
    Cycle spacing_;

    std::uint32_t next_step_ = 0;
    bool step_outstanding_ = false;
    Cycle next_step_at_ = 0;
    std::optional<Cycle> init_done_at_;

    std::uint32_t next_bank_ = 0;
    Cycle next_refresh_at_ = 0;
    Cycle next_zq_at_ = 0;
};

// ---------------------------------------------------------------------------
// DB bus and PHY
// ---------------------------------------------------------------------------

/// What the DB pins carry in one cycle. Data beats hold one 32-bit subword
/// (two 16-bit DDR transfers).
struct BusBeat {
    Cycle cycle = 0;
    BeatKind kind = BeatKind::Idle;
    CommandKind command = CommandKind::Activate;  ///< Command beats
    std::uint8_t slice = 0;                       ///< packet slice or subword index
    Direction direction = Direction::Read;        ///< Data/Mask/Preamble/Postamble
    std::uint64_t tag = 0;                        ///< request tag for data beats
    std::uint32_t word_index = 0;
    std::array<std::uint8_t, 4> bytes{};
};

void write_beat(std::ostream& os, const BusBeat& beat);

struct PhyConfig {
    Cycle cdc_delay = 3;            ///< rx: last beat of a word to upstream visibility
    Cycle output_strobe_offset = 0; ///< tx: extra cycles before a write is reported done
};

/// A 256-bit word reassembled by the receive path.
struct RxWord {
    std::uint64_t tag = 0;
    std::uint32_t word_index = 0;
    Word data{};
};

struct PhyStep {
    BusBeat beat;
    std::optional<RxWord> word;
};

/// Digital timing abstraction of the PHY: SDR→DDR serialization on transmit,
/// DDR→SDR sampling, word packing and clock-domain crossing on receive.
class Phy {
public:
    explicit Phy(PhyConfig config) : config_(config) {}

    void schedule(const BusBeat& beat) { pending_.push_back(beat); }

    /// Beat on the DB pins this cycle plus any word leaving the CDC.
    PhyStep step(Cycle cycle);

    bool idle() const { return pending_.empty() && cdc_.empty(); }
    const PhyConfig& config() const { return config_; }

private:
    PhyConfig config_;
    std::deque<BusBeat> pending_;  ///< future beats in cycle order
    RxWord assembling_{};
    std::uint32_t rx_beats_ = 0;
    std::deque<std::pair<Cycle, RxWord>> cdc_;
};

// ---------------------------------------------------------------------------
// Timing FSM / controller
// ---------------------------------------------------------------------------

struct ControllerConfig {
    std::uint32_t queue_depth = 8;    ///< datapath requests held by the command FSM
    std::uint32_t act_lookahead = 1;  ///< requests past the next data command that may activate early
    PhyConfig phy;
};

enum class RequestStage : std::uint8_t { NeedActivate, NeedAccess, NeedPrecharge, Done };

struct PendingRequest {
    std::uint64_t tag = 0;
    DatapathRequest req;
    Location loc;
    RequestStage stage = RequestStage::NeedActivate;
    Cycle arrival = 0;
    Cycle burst_end = 0;
    Cycle write_data_end = 0;
    std::vector<Word> data;  ///< write payload
};

struct PendingManagement {
    RpcCommand command;
    Cycle emitted = 0;
};

/// Controller-side timing record of one bank.
struct BankShadow {
    bool active = false;
    std::uint32_t open_row = 0;
    Cycle activated_at = 0;
    std::optional<Cycle> precharged_at;
    Cycle refresh_end = 0;
    Cycle last_refresh = 0;
};

/// Which pending command the timing FSM picked.
struct IssueChoice {
    enum class Source : std::uint8_t { Management, Datapath } source;
    std::size_t index;  ///< into the pending management or request list
    RpcCommand command;
};

/// Scheduling policy of the timing FSM. Pure with respect to its inputs.
class TimingFsm {
public:
    TimingFsm(const Profile& profile, const ManagerConfig& manager, const ControllerConfig& config);

    /// Oldest eligible command at `now`, assuming the DB bus is free.
    std::optional<IssueChoice> select(Cycle now, bool initialized, std::span<const PendingRequest> requests,
                                      std::span<const PendingManagement> management,
                                      std::span<const BankShadow> banks) const;

private:
    bool refresh_has_priority(Cycle now, std::uint32_t bank, std::span<const PendingManagement> management,
                              std::span<const BankShadow> banks) const;
    bool access_starves_refresh(Cycle now, const RpcCommand& access, std::uint32_t own_bank,
                                std::span<const PendingManagement> management,
                                std::span<const BankShadow> banks) const;
    bool activation_fits(Cycle now, std::span<const PendingRequest> requests, std::size_t from, std::size_t to,
                         const BankShadow& bank) const;

    const Profile* profile_;
    const ManagerConfig* manager_;
    const ControllerConfig* config_;
};

/// Events the controller produced in one cycle.
struct ControllerStep {
    BusBeat beat;
    std::optional<RxWord> read_word;
    std::optional<std::uint64_t> write_done;  ///< tag of a write whose burst finished
    bool issued = false;
};

class Controller {
public:
    Controller(const Profile& profile, ControllerConfig config, ManagerConfig manager, DramDevice& device);

    Controller(const Controller&) = delete;
    Controller& operator=(const Controller&) = delete;

    bool can_accept() const { return requests_.size() < config_.queue_depth; }

    /// Hand over a validated request. Writes carry exactly n_words words.
    void push(std::uint64_t tag, const DatapathRequest& req, std::vector<Word> write_data, Cycle now);

    /// Advance one cycle: manager, timing FSM issue, PHY.
    ControllerStep tick(Cycle now);

    bool idle() const;
    bool initialized(Cycle now) const { return manager_.initialized(now); }
    std::optional<Cycle> init_done_at() const { return manager_.init_done_at(); }

    const EventCounts& events() const { return events_; }
    std::uint64_t rejected_commands() const { return rejected_; }
    std::span<const BankShadow> banks() const { return banks_; }
    const Manager& manager() const { return manager_; }

private:
    void issue(const IssueChoice& choice, Cycle now);

    Profile profile_;
    ControllerConfig config_;
    ManagerConfig manager_config_;
    DramDevice& device_;
    Manager manager_;
    TimingFsm fsm_;
    Phy phy_;

    std::vector<PendingRequest> requests_;  /// bounded by queue_depth
    std::vector<PendingManagement> management_;
    std::vector<BankShadow> banks_;
    std::deque<std::pair<Cycle, std::uint64_t>> write_done_;

    Cycle bus_free_at_ = 0;
    EventCounts events_;
    std::uint64_t rejected_ = 0;
};

}  // namespace rpcsim
