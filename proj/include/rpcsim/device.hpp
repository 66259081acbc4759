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
 * @file device.hpp
 * @brief Behavioral RPC DRAM chip: bank state machines, protocol checker and
 *        word storage.
 *
 * The device is the independent referee of the controller. It never trusts
 * the controller's own bookkeeping: every command is checked against the
 * device's bank history and the shared DB bus occupancy. Illegal commands are
 * logged and rejected without modifying state.
 */

#pragma once

#include "rpcsim/protocol.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace rpcsim {

enum class BankPhase : std::uint8_t { Idle, Active, Refreshing };

std::string_view to_string(BankPhase p);

struct BankState {
    BankPhase phase = BankPhase::Idle;
    std::optional<std::uint32_t> open_row;

    std::optional<Cycle> last_activate;
    std::optional<Cycle> last_read;
    std::optional<Cycle> last_write;
    std::optional<Cycle> last_precharge;
    std::optional<Cycle> last_refresh;

    Cycle refresh_end = 0;     ///< bank leaves Refreshing at this cycle
    Cycle burst_end = 0;       ///< DB reservation end of the last RD/WR
    Cycle write_data_end = 0;  ///< cycle after the last write data beat
    bool last_access_write = false;
};

enum class ViolationKind : std::uint8_t { Timing, State, NotInitialized };

struct Violation {
    Cycle cycle = 0;
    ViolationKind kind = ViolationKind::State;
    std::string constraint;
    std::string command;
    Cycle required_gap = 0;  ///< Timing only
    Cycle actual_gap = 0;    ///< Timing only
};

struct CommandResult {
    std::optional<Violation> violation;

    bool accepted() const { return !violation.has_value(); }
    explicit operator bool() const { return accepted(); }
};

class DramDevice {
public:
    static constexpr std::uint8_t kDefaultFill = 0x5A;

    explicit DramDevice(Profile profile, std::uint8_t fill = kDefaultFill);

    /// Check `c` at `cycle` and apply it if legal. Writes consume
    /// `write_data` (exactly n_words entries).
    CommandResult apply_command(const RpcCommand& c, Cycle cycle,
                                std::span<const Word> write_data = {});

    /// Data return path of an accepted Read on the bank's open row.
    std::vector<Word> read_words(std::uint32_t bank, std::uint32_t col, std::uint32_t n_words) const;

    /// Banks whose last refresh is older than t_refi * slack.
    std::vector<std::uint32_t> check_refresh_deadlines(Cycle cycle, double slack = 1.0) const;

    bool initialized(Cycle cycle) const;
    std::optional<Cycle> initialized_at() const { return init_done_at_; }
    Cycle zq_age(Cycle cycle) const;

    /// Bank state as seen at `cycle` (refresh completion applied).
    BankState bank(std::uint32_t b, Cycle cycle) const;

    const std::vector<Violation>& violation_log() const { return violations_; }
    void write_violation_report(std::ostream& os) const;

    /// Datapath commands accepted while some other bank was refreshing.
    std::uint64_t interleaved_with_refresh() const { return interleaved_with_refresh_; }

    /// Stored word at a word-aligned byte address (fill pattern if never written).
    Word peek(Addr word_addr) const;
    std::size_t stored_words() const { return storage_.size(); }

    /// Test hook: XOR `pattern` into every byte of a stored word.
    void corrupt_word(Addr word_addr, std::uint8_t pattern = 0xFF);

    const Profile& profile() const { return profile_; }

private:
    void settle(Cycle cycle) const;
    CommandResult reject(Cycle cycle, ViolationKind kind, std::string constraint, const RpcCommand& c,
                         Cycle required = 0, Cycle actual = 0);
    std::optional<CommandResult> check_bus(const RpcCommand& c, Cycle cycle);
    Word fill_word() const;

    Profile profile_;
    std::uint8_t fill_;
    mutable std::vector<BankState> banks_;

    std::uint32_t next_init_step_ = 0;
    Cycle init_step_ready_ = 0;
    std::optional<Cycle> init_done_at_;
    Cycle last_zq_ = 0;
    Cycle bus_busy_until_ = 0;
    std::uint64_t interleaved_with_refresh_ = 0;

    std::unordered_map<Addr, Word> storage_;
    std::vector<Violation> violations_;
};

}  // namespace rpcsim
