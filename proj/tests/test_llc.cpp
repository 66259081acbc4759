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

#include "rpcsim/errors.hpp"
#include "rpcsim/harness.hpp"
#include "rpcsim/llc.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>

namespace rpcsim {
namespace {

/// Recording downstream over a sparse byte array.
class FakeMemory : public Downstream {
public:
    std::vector<std::uint8_t> read(Addr addr, std::uint64_t len) override {
        reads.emplace_back(addr, len);
        std::vector<std::uint8_t> out(len);
        for (std::uint64_t i = 0; i < len; ++i) out[i] = get(addr + i);
        return out;
    }
    void write(Addr addr, std::span<const std::uint8_t> data) override {
        writes.emplace_back(addr, data.size());
        for (std::size_t i = 0; i < data.size(); ++i) bytes[addr + i] = data[i];
    }
    std::uint8_t get(Addr a) const {
        auto it = bytes.find(a);
        return it == bytes.end() ? 0x5A : it->second;
    }
    std::size_t calls() const { return reads.size() + writes.size(); }

    std::map<Addr, std::uint8_t> bytes;
    std::vector<std::pair<Addr, std::uint64_t>> reads, writes;
};

LlcConfig small() {
    LlcConfig c;
    c.sets = 4;
    c.ways = 4;
    c.line_bytes = 32;
    c.spm_base = 0x10000;
    return c;
}

std::vector<std::uint8_t> bytes(std::size_t n, std::uint8_t v) { return std::vector<std::uint8_t>(n, v); }

TEST(LlcConfig, ApertureSize) {
    LlcConfig c = small();
    EXPECT_EQ(c.spm_bytes(), 0u);
    c.spm_way_mask = 0b1010;
    EXPECT_EQ(c.spm_bytes(), 2u * 4 * 32);
    EXPECT_NO_THROW(c.validate());
    c.spm_way_mask = 0b10000;
    EXPECT_THROW(c.validate(), std::exception);
    c = small();
    c.spm_base = 0x10010;
    EXPECT_THROW(c.validate(), std::exception);
}

TEST(Llc, ColdMissFetchesOneLine) {
    FakeMemory mem;
    Llc llc(small(), mem);
    const auto r = llc.read(0x40, 4);
    EXPECT_EQ(r, bytes(4, 0x5A));
    ASSERT_EQ(mem.reads.size(), 1u);
    EXPECT_EQ(mem.reads[0], (std::pair<Addr, std::uint64_t>{0x40, 32}));
    EXPECT_EQ(llc.stats().misses, 1u);
    (void)llc.read(0x44, 4);
    EXPECT_EQ(llc.stats().hits, 1u);
    EXPECT_EQ(mem.reads.size(), 1u);
}

TEST(Llc, WriteAllocateAndWriteBackOnEviction) {
    FakeMemory mem;
    Llc llc(small(), mem);
    const Addr stride = 4 * 32;  // same set
    llc.write(0, bytes(8, 1));
    EXPECT_EQ(mem.reads.size(), 1u);  // allocate fetched the line
    EXPECT_TRUE(mem.writes.empty());
    for (Addr k = 1; k <= 4; ++k) (void)llc.read(k * stride, 1);  // evicts the LRU dirty line
    ASSERT_EQ(mem.writes.size(), 1u);
    EXPECT_EQ(mem.writes[0].first, 0u);
    EXPECT_EQ(mem.get(0), 1);
    EXPECT_EQ(mem.get(8), 0x5A);
}

TEST(Llc, LruPicksLeastRecentlyUsed) {
    FakeMemory mem;
    Llc llc(small(), mem);
    const Addr stride = 4 * 32;
    for (Addr k = 0; k < 4; ++k) (void)llc.read(k * stride, 1);
    (void)llc.read(0, 1);            // line 0 is now most recent
    (void)llc.read(4 * stride, 1);   // evicts line 1
    const auto before = mem.reads.size();
    (void)llc.read(0, 1);
    EXPECT_EQ(mem.reads.size(), before);
    (void)llc.read(stride, 1);
    EXPECT_EQ(mem.reads.size(), before + 1);
}

TEST(Llc, SpmRoundTripWithoutDownstreamTraffic) {
    FakeMemory mem;
    LlcConfig c = small();
    c.spm_way_mask = 0b0011;
    Llc llc(c, mem);
    std::vector<std::uint8_t> data(200);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<std::uint8_t>(i);
    llc.write(c.spm_base + 20, data);
    EXPECT_EQ(llc.read(c.spm_base + 20, 200), data);
    EXPECT_EQ(mem.calls(), 0u);
    EXPECT_GT(llc.stats().spm_accesses, 0u);
}

TEST(Llc, SpmOutOfRangeThrows) {
    FakeMemory mem;
    LlcConfig c = small();
    c.spm_way_mask = 0b0001;
    Llc llc(c, mem);
    EXPECT_NO_THROW((void)llc.read(c.spm_base + c.spm_bytes() - 1, 1));
    EXPECT_THROW((void)llc.read(c.spm_base + c.spm_bytes(), 1), SpmOutOfRange);
    EXPECT_THROW(llc.write(c.spm_base + c.spm_bytes() - 1, bytes(2, 0)), SpmOutOfRange);
}

TEST(Llc, ConvertingDirtyWayWritesBackExactlyItsDirtyLines) {
    FakeMemory mem;
    LlcConfig c = small();
    c.ways = 1;  // direct mapped: every line lands in way 0
    Llc llc(c, mem);
    llc.write(0 * 32, bytes(4, 1));
    llc.write(2 * 32, bytes(4, 2));
    (void)llc.read(1 * 32, 4);  // clean
    mem.writes.clear();
    llc.configure_spm(0b1);
    std::vector<std::pair<Addr, std::uint64_t>> want{{0, 32}, {64, 32}};
    std::sort(mem.writes.begin(), mem.writes.end());
    EXPECT_EQ(mem.writes, want);
    EXPECT_EQ(mem.get(64), 2);
    for (std::uint32_t s = 0; s < c.sets; ++s) EXPECT_FALSE(llc.line_valid(s, 0));
}

TEST(Llc, ConvertBackLeavesNoStaleTags) {
    FakeMemory mem;
    Llc llc(small(), mem);
    for (Addr a = 0; a < 16 * 32; a += 32) (void)llc.read(a, 1);
    llc.configure_spm(0b1111);
    llc.configure_spm(0);
    for (std::uint32_t s = 0; s < 4; ++s) {
        for (std::uint32_t w = 0; w < 4; ++w) EXPECT_FALSE(llc.line_valid(s, w));
    }
}

TEST(Llc, AllWaysSpmBypassesCache) {
    FakeMemory mem;
    LlcConfig c = small();
    c.spm_way_mask = 0b1111;
    Llc llc(c, mem);
    EXPECT_EQ(llc.cache_ways(), 0u);
    llc.write(0x100, bytes(3, 7));
    EXPECT_EQ(llc.read(0x100, 3), bytes(3, 7));
    EXPECT_EQ(mem.writes.size(), 1u);
    EXPECT_EQ(mem.reads.size(), 1u);
    EXPECT_EQ(llc.stats().bypasses, 2u);
}

TEST(Llc, SpmWaysNeverChosenAsVictims) {
    FakeMemory mem;
    LlcConfig c = small();
    c.spm_way_mask = 0b0101;
    Llc llc(c, mem);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 2000; ++i) {
        const Addr a = (rng() % 512) * 8;
        if (rng() % 2) llc.write(a, bytes(8, static_cast<std::uint8_t>(i)));
        else (void)llc.read(a, 8);
        for (std::uint32_t s = 0; s < c.sets; ++s) {
            ASSERT_FALSE(llc.line_valid(s, 0));
            ASSERT_FALSE(llc.line_valid(s, 2));
        }
    }
}

TEST(Llc, FlushCleansEverything) {
    FakeMemory mem;
    Llc llc(small(), mem);
    llc.write(0, bytes(64, 9));
    llc.flush();
    EXPECT_EQ(mem.get(63), 9);
    for (std::uint32_t s = 0; s < 4; ++s) {
        for (std::uint32_t w = 0; w < 4; ++w) EXPECT_FALSE(llc.line_dirty(s, w));
    }
}

TEST(Llc, InvalidMaskRejected) {
    FakeMemory mem;
    Llc llc(small(), mem);
    EXPECT_THROW(llc.configure_spm(0b10000), std::invalid_argument);
}

TEST(LlcSystem, EquivalentToFlatModelWithReconfiguration) {
    SystemConfig cfg;
    cfg.llc.sets = 16;
    cfg.llc.ways = 4;
    cfg.llc.line_bytes = 64;
    cfg.llc.spm_base = 0x100000;
    for (std::uint64_t seed : {1, 2}) {
        const LlcCheck r = verify_llc(cfg, seed, 800);
        EXPECT_EQ(r.mismatches, 0u);
        EXPECT_EQ(r.divergences, 0u);
        EXPECT_EQ(r.spm_downstream_traffic, 0u);
        EXPECT_EQ(r.violations, 0u);
        EXPECT_GT(r.reconfigurations, 0u);
        EXPECT_GT(r.spm_accesses, 0u);
    }
}

}  // namespace
}  // namespace rpcsim
