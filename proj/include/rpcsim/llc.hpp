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
 * @file llc.hpp
 * @brief Set-associative last-level cache whose ways can each serve as
 *        directly addressed scratchpad memory (SPM).
 *
 * Cache ways are write-back, write-allocate with LRU replacement. SPM ways
 * never hold tags and are never chosen as victims. The SPM aperture starts at
 * `spm_base`; its k-th way-sized slot is backed by the k-th SPM way in
 * ascending way order.
 */

#pragma once

#include "rpcsim/protocol.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace rpcsim {

struct LlcConfig {
    std::uint32_t sets = 256;
    std::uint32_t ways = 8;
    std::uint32_t line_bytes = 64;
    std::uint32_t spm_way_mask = 0;
    Addr spm_base = 0x1000'0000;
    bool enabled = false;  ///< whether the harness places the stage in front of the frontend

    std::uint64_t way_bytes() const { return std::uint64_t{sets} * line_bytes; }
    std::uint64_t spm_bytes() const;
    /// Aperture reserved for SPM whatever the current mask.
    std::uint64_t spm_window_bytes() const { return way_bytes() * ways; }
    void validate() const;
};

/// Memory below the cache. Calls complete synchronously.
class Downstream {
public:
    virtual ~Downstream() = default;
    virtual std::vector<std::uint8_t> read(Addr addr, std::uint64_t len) = 0;
    virtual void write(Addr addr, std::span<const std::uint8_t> data) = 0;
};

struct LlcStats {
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t writebacks = 0;
    std::uint64_t spm_accesses = 0;
    std::uint64_t bypasses = 0;
    std::uint64_t downstream_reads = 0;
    std::uint64_t downstream_writes = 0;
};

class Llc {
public:
    Llc(LlcConfig config, Downstream& downstream);

    /// Flushes dirty lines of ways turning into SPM; every way whose role
    /// changes starts invalid (cache) or zeroed (SPM). Only legal while no
    /// access is in flight, which the synchronous interface guarantees.
    void configure_spm(std::uint32_t way_mask);

    std::vector<std::uint8_t> read(Addr addr, std::uint64_t len);
    void write(Addr addr, std::span<const std::uint8_t> data);

    /// Writes back every dirty line; lines stay valid and clean.
    void flush();

    bool in_spm_window(Addr addr) const {
        return addr >= config_.spm_base && addr - config_.spm_base < config_.spm_window_bytes();
    }
    bool line_valid(std::uint32_t set, std::uint32_t way) const { return line(set, way).valid; }
    bool line_dirty(std::uint32_t set, std::uint32_t way) const { return line(set, way).dirty; }
    std::uint32_t cache_ways() const;

    const LlcConfig& config() const { return config_; }
    const LlcStats& stats() const { return stats_; }

private:
    struct Line {
        bool valid = false;
        bool dirty = false;
        Addr tag = 0;
        std::uint64_t lru = 0;  ///< last-use stamp
    };

    const Line& line(std::uint32_t set, std::uint32_t way) const { return lines_[std::size_t{set} * config_.ways + way]; }
    Line& line(std::uint32_t set, std::uint32_t way) { return lines_[std::size_t{set} * config_.ways + way]; }
    std::uint8_t* line_data(std::uint32_t set, std::uint32_t way) {
        return data_.data() + (std::size_t{way} * config_.sets + set) * config_.line_bytes;
    }
    bool is_spm(std::uint32_t way) const { return (config_.spm_way_mask >> way) & 1u; }

    /// Cache lookup with allocation; returns the way holding the line.
    std::uint32_t lookup(Addr line_addr);
    std::uint32_t victim(std::uint32_t set) const;
    void write_back(std::uint32_t set, std::uint32_t way);
    std::uint8_t* spm_byte(Addr addr);

    LlcConfig config_;
    Downstream& downstream_;
    std::vector<Line> lines_;
    std::vector<std::uint8_t> data_;  ///< way-major; SPM ways reuse their cache storage
    std::uint64_t stamp_ = 0;
    LlcStats stats_;
};

}  // namespace rpcsim
