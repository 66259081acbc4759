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
 * @file protocol.hpp
 * @brief Shared RPC DRAM vocabulary: word geometry, timing profile, command set
 *        and the address arithmetic every other stage relies on.
 *
 * All durations are expressed in controller clock cycles. The DB bus moves
 * 4 bytes per cycle (16 DQ pins, DDR), so one 32-byte word occupies 8 cycles.
 */

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace rpcsim {

using Cycle = std::uint64_t;
using Addr = std::uint64_t;

/// Byte-enable mask for one 32-byte word; bit i enables byte i.
using ByteMask = std::uint32_t;
inline constexpr ByteMask kFullMask = 0xFFFFFFFFu;

enum class Direction : std::uint8_t { Read, Write };

constexpr std::string_view to_string(Direction d) {
    return d == Direction::Read ? "read" : "write";
}

/// Fixed RPC word geometry.
struct WordGeometry {
    static constexpr std::uint32_t word_bytes = 32;
    static constexpr std::uint32_t dq_pins = 16;
    static constexpr std::uint32_t bytes_per_bus_cycle = 2 * dq_pins / 8;  // DDR
    static constexpr std::uint32_t cycles_per_word = 8;

    static_assert(word_bytes == bytes_per_bus_cycle * cycles_per_word);
};

using Word = std::array<std::uint8_t, WordGeometry::word_bytes>;

/// Protocol timing constraints in controller cycles, plus page size.
///
/// Defaults form the "default" profile. They are calibrated so that the DMA
/// burst sweep lands on the published utilization figures; none of them is a
/// datasheet value.
struct TimingParams {
    double freq_mhz = 200.0;

    Cycle t_rcd = 6;         ///< ACT to RD/WR, same bank
    Cycle t_ras = 12;        ///< ACT to PRE, same bank
    Cycle t_rp = 6;          ///< PRE to ACT/REF, same bank
    Cycle t_wr = 14;         ///< last write data beat to PRE
    Cycle t_rfc = 26;        ///< per-bank refresh duration
    Cycle t_refi = 3120;     ///< per-bank refresh deadline
    Cycle t_zqi = 200000;    ///< ZQ calibration interval
    Cycle t_zq = 32;         ///< extra DB occupancy of a ZQ calibration
    std::vector<Cycle> t_init_steps{2000, 200, 200, 100};  ///< reset, mode regs, ZQ init, settle

    Cycle t_cmd_cycles = 2;  ///< DB cycles per serialized command packet
    Cycle t_mask_cycles = 2; ///< DB cycles carrying first+last write masks
    Cycle t_preamble = 10;   ///< strobe lead-in before a data burst
    Cycle t_postamble = 4;   ///< strobe lead-out after a data burst

    std::uint32_t page_bytes = 2048;

    std::uint32_t words_per_page() const { return page_bytes / WordGeometry::word_bytes; }

    /// Throws ConfigError naming the first broken invariant.
    void validate() const;
};

/// Bank/row organization of the attached device.
struct DeviceGeometry {
    std::uint32_t banks = 4;
    std::uint32_t rows = 4096;

    void validate() const;
};

/// Timing and organization together; what the device and controller share.
struct Profile {
    TimingParams timing;
    DeviceGeometry geometry;

    Addr capacity_bytes() const {
        return Addr{geometry.banks} * geometry.rows * timing.page_bytes;
    }
    void validate() const {
        timing.validate();
        geometry.validate();
    }
};

/// Decoded DRAM location of a word address (row : bank : column mapping).
struct Location {
    std::uint32_t bank = 0;
    std::uint32_t row = 0;
    std::uint32_t col = 0;  ///< word index within the page

    friend bool operator==(const Location&, const Location&) = default;
};

Location map_address(Addr addr, const Profile& profile);
Addr compose_address(const Location& loc, const Profile& profile);

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace cmd {

struct Activate {
    std::uint32_t bank;
    std::uint32_t row;
    friend bool operator==(const Activate&, const Activate&) = default;
};
struct Read {
    std::uint32_t bank;
    std::uint32_t col;
    std::uint32_t n_words;
    friend bool operator==(const Read&, const Read&) = default;
};
struct Write {
    std::uint32_t bank;
    std::uint32_t col;
    std::uint32_t n_words;
    ByteMask first_mask = kFullMask;
    ByteMask last_mask = kFullMask;
    friend bool operator==(const Write&, const Write&) = default;
};
struct Precharge {
    std::uint32_t bank;
    friend bool operator==(const Precharge&, const Precharge&) = default;
};
/// Refresh of every bank whose bit is set.
struct Refresh {
    std::uint32_t bank_set;
    friend bool operator==(const Refresh&, const Refresh&) = default;
};
struct ZqCal {
    friend bool operator==(const ZqCal&, const ZqCal&) = default;
};
struct InitStep {
    std::uint32_t index;
    friend bool operator==(const InitStep&, const InitStep&) = default;
};

}  // namespace cmd

using RpcCommand = std::variant<cmd::Activate, cmd::Read, cmd::Write, cmd::Precharge,
                                cmd::Refresh, cmd::ZqCal, cmd::InitStep>;

enum class CommandKind : std::uint8_t { Activate, Read, Write, Precharge, Refresh, ZqCal, InitStep };

inline CommandKind kind_of(const RpcCommand& c) { return static_cast<CommandKind>(c.index()); }

std::string_view to_string(CommandKind k);
std::string to_string(const RpcCommand& c);

inline bool is_datapath(CommandKind k) {
    return k == CommandKind::Activate || k == CommandKind::Read || k == CommandKind::Write ||
           k == CommandKind::Precharge;
}

/// Content class of one DB bus cycle; the pins are time-multiplexed.
enum class BeatKind : std::uint8_t { Idle, Command, Mask, Preamble, Data, Postamble };

std::string_view to_string(BeatKind k);

/// Number of cycles the DB bus is reserved when `c` is issued.
Cycle bus_reservation(const RpcCommand& c, const TimingParams& t);

// ---------------------------------------------------------------------------
// Pure arithmetic
// ---------------------------------------------------------------------------

constexpr Cycle word_cycles(std::uint64_t n_words) {
    return n_words * WordGeometry::cycles_per_word;
}

/// Word-granular cover of a byte range.
struct WordSpan {
    Addr first_word_addr = 0;
    std::uint32_t n_words = 0;
    std::uint32_t head_offset = 0;  ///< first byte's offset in the first word
    std::uint32_t tail_offset = 0;  ///< last byte's offset in the last word

    friend bool operator==(const WordSpan&, const WordSpan&) = default;
};

/// Words covering [addr, addr + len). Requires len >= 1.
WordSpan bytes_to_words(Addr addr, std::uint64_t len);

/// Bytes per second at full DB utilization. Requires freq_mhz > 0.
double peak_bandwidth(double freq_mhz);

constexpr bool is_power_of_two(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

}  // namespace rpcsim
