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

#include "rpcsim/llc.hpp"

#include "rpcsim/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <stdexcept>

namespace rpcsim {

std::uint64_t LlcConfig::spm_bytes() const {
    return static_cast<std::uint64_t>(std::popcount(spm_way_mask)) * way_bytes();
}

void LlcConfig::validate() const {
    if (sets == 0 || !is_power_of_two(sets)) throw ConfigError("llc.sets: must be a power of two");
    if (ways == 0 || ways > 32) throw ConfigError("llc.ways: must be in [1, 32]");
    if (line_bytes < 4 || !is_power_of_two(line_bytes)) throw ConfigError("llc.line_bytes: must be a power of two >= 4");
    if (ways < 32 && (spm_way_mask >> ways) != 0) throw ConfigError("llc.spm_way_mask: names a way beyond llc.ways");
    if (spm_base % way_bytes() != 0) throw ConfigError("llc.spm_base: must be aligned to one way");
}

Llc::Llc(LlcConfig config, Downstream& downstream)
    : config_(config),
      downstream_(downstream),
      lines_(std::size_t{config.sets} * config.ways),
      data_(std::size_t{config.sets} * config.ways * config.line_bytes, 0) {
    config_.validate();
}

std::uint32_t Llc::cache_ways() const {
    return config_.ways - static_cast<std::uint32_t>(std::popcount(config_.spm_way_mask));
}

void Llc::configure_spm(std::uint32_t way_mask) {
    if (config_.ways < 32 && (way_mask >> config_.ways) != 0)
        throw std::invalid_argument("spm way mask names a way beyond the configured ways");
    const std::uint32_t changed = way_mask ^ config_.spm_way_mask;
    for (std::uint32_t w = 0; w < config_.ways; ++w) {
        if (!((changed >> w) & 1u)) continue;
        for (std::uint32_t s = 0; s < config_.sets; ++s) {
            if (!is_spm(w) && line(s, w).valid && line(s, w).dirty) write_back(s, w);
            line(s, w) = Line{};
            std::memset(line_data(s, w), 0, config_.line_bytes);
        }
    }
    config_.spm_way_mask = way_mask;
}

std::uint8_t* Llc::spm_byte(Addr addr) {
    const Addr off = addr - config_.spm_base;
    const std::uint64_t slot = off / config_.way_bytes();
    if (slot >= static_cast<std::uint64_t>(std::popcount(config_.spm_way_mask)))
        throw SpmOutOfRange("SPM access beyond the configured aperture");
    std::uint32_t mask = config_.spm_way_mask;
    for (std::uint64_t k = 0; k < slot; ++k) mask &= mask - 1;
    const auto way = static_cast<std::uint32_t>(std::countr_zero(mask));
    return data_.data() + std::size_t{way} * config_.way_bytes() + off % config_.way_bytes();
}

std::uint32_t Llc::victim(std::uint32_t set) const {
    std::uint32_t best = config_.ways;
    for (std::uint32_t w = 0; w < config_.ways; ++w) {
        if (is_spm(w)) continue;
        if (!line(set, w).valid) return w;
        if (best == config_.ways || line(set, w).lru < line(set, best).lru) best = w;
    }
    return best;
}

void Llc::write_back(std::uint32_t set, std::uint32_t way) {
    Line& l = line(set, way);
    const Addr addr = (l.tag * config_.sets + set) * config_.line_bytes;
    downstream_.write(addr, std::span<const std::uint8_t>(line_data(set, way), config_.line_bytes));
    ++stats_.writebacks;
    ++stats_.downstream_writes;
    l.dirty = false;
}

std::uint32_t Llc::lookup(Addr line_addr) {
    const Addr index = line_addr / config_.line_bytes;
    const auto set = static_cast<std::uint32_t>(index % config_.sets);
    const Addr tag = index / config_.sets;
    for (std::uint32_t w = 0; w < config_.ways; ++w) {
        if (!is_spm(w) && line(set, w).valid && line(set, w).tag == tag) {
            ++stats_.hits;
            line(set, w).lru = ++stamp_;
            return w;
        }
    }
    ++stats_.misses;
    const std::uint32_t w = victim(set);
    if (line(set, w).valid && line(set, w).dirty) write_back(set, w);
    const auto fill = downstream_.read(line_addr, config_.line_bytes);
    ++stats_.downstream_reads;
    std::memcpy(line_data(set, w), fill.data(), config_.line_bytes);
    line(set, w) = Line{true, false, tag, ++stamp_};
    return w;
}

std::vector<std::uint8_t> Llc::read(Addr addr, std::uint64_t len) {
    std::vector<std::uint8_t> out(len);
    const Addr lb = config_.line_bytes;
    for (std::uint64_t done = 0; done < len;) {
        const Addr a = addr + done;
        const std::uint64_t n = std::min<std::uint64_t>(len - done, lb - a % lb);
        if (in_spm_window(a)) {
            ++stats_.spm_accesses;
            for (std::uint64_t i = 0; i < n; ++i) out[done + i] = *spm_byte(a + i);
        } else if (cache_ways() == 0) {
            ++stats_.bypasses;
            ++stats_.downstream_reads;
            const auto d = downstream_.read(a, n);
            std::copy(d.begin(), d.end(), out.begin() + static_cast<std::ptrdiff_t>(done));
        } else {
            const Addr la = a - a % lb;
            const std::uint32_t w = lookup(la);
            const auto set = static_cast<std::uint32_t>((la / lb) % config_.sets);
            std::memcpy(out.data() + done, line_data(set, w) + (a - la), n);
        }
        done += n;
    }
    return out;
}

void Llc::write(Addr addr, std::span<const std::uint8_t> data) {
    const Addr lb = config_.line_bytes;
    for (std::uint64_t done = 0; done < data.size();) {
        const Addr a = addr + done;
        const std::uint64_t n = std::min<std::uint64_t>(data.size() - done, lb - a % lb);
        const auto chunk = data.subspan(done, n);
        if (in_spm_window(a)) {
            ++stats_.spm_accesses;
            for (std::uint64_t i = 0; i < n; ++i) *spm_byte(a + i) = chunk[i];
        } else if (cache_ways() == 0) {
            ++stats_.bypasses;
            ++stats_.downstream_writes;
            downstream_.write(a, chunk);
        } else {
            const Addr la = a - a % lb;
            const std::uint32_t w = lookup(la);
            const auto set = static_cast<std::uint32_t>((la / lb) % config_.sets);
            std::memcpy(line_data(set, w) + (a - la), chunk.data(), n);
            line(set, w).dirty = true;
        }
        done += n;
    }
}

void Llc::flush() {
    for (std::uint32_t s = 0; s < config_.sets; ++s) {
        for (std::uint32_t w = 0; w < config_.ways; ++w) {
            if (!is_spm(w) && line(s, w).valid && line(s, w).dirty) write_back(s, w);
        }
    }
}

}  // namespace rpcsim
