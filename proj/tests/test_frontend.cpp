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

#include "rpcsim/frontend.hpp"
#include "rpcsim/harness.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

namespace rpcsim {
namespace {

BusTransaction txn(std::uint64_t id, Direction d = Direction::Read, Addr addr = 0, std::uint32_t beats = 1,
                   std::uint32_t bb = 8) {
    BusTransaction t;
    t.id = id;
    t.direction = d;
    t.addr = addr;
    t.beats = beats;
    t.beat_bytes = bb;
    if (d == Direction::Write) {
        t.strobes.assign(beats, bb == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bb) - 1);
        t.data.assign(t.span_bytes(), 0x11);
    }
    return t;
}

std::vector<std::uint64_t> ids(const std::vector<BusTransaction>& v) {
    std::vector<std::uint64_t> out;
    for (const auto& t : v) out.push_back(t.id);
    return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

TEST(Serialize, FirstComeFirstServe) {
    EXPECT_EQ(ids(serialize({{1, txn(1)}, {0, txn(2)}})), (std::vector<std::uint64_t>{2, 1}));
}

TEST(Serialize, SingleStreamUnchanged) {
    std::vector<Arrival> a;
    for (Cycle c = 0; c < 6; ++c) a.push_back({c * 3, txn(5)});
    a[2].txn.addr = 64;
    const auto out = serialize(a);
    ASSERT_EQ(out.size(), 6u);
    EXPECT_EQ(out[2].addr, 64u);
}

TEST(Serialize, SameCycleTieBreakByIdEnumerated) {
    std::vector<std::uint64_t> order{0, 1, 2, 3};
    do {
        std::vector<Arrival> a;
        for (auto id : order) a.push_back({7, txn(id)});
        EXPECT_EQ(ids(serialize(a)), (std::vector<std::uint64_t>{0, 1, 2, 3}));
    } while (std::next_permutation(order.begin(), order.end()));
    EXPECT_EQ(ids(serialize({{0, txn(3)}, {0, txn(1)}})), (std::vector<std::uint64_t>{1, 3}));
}

// ---------------------------------------------------------------------------
// Width conversion, split, masks
// ---------------------------------------------------------------------------

TEST(ConvertWidth, Examples) {
    EXPECT_EQ(convert_width(txn(0, Direction::Read, 0, 8, 8)), (WordSpan{0, 2, 0, 31}));
    auto t = txn(0, Direction::Read, 0x18, 2, 8);  // bytes 0x18..0x27
    EXPECT_EQ(convert_width(t).n_words, 2u);
    EXPECT_EQ(convert_width(txn(0, Direction::Read, 0x10, 1, 4)), (WordSpan{0, 1, 16, 19}));
}

TEST(Split, Examples) {
    EXPECT_EQ(split({0x000, 0x400}, 2048), (std::vector<ByteRange>{{0x000, 0x400}}));
    EXPECT_EQ(split({0x7C0, 0x840}, 2048), (std::vector<ByteRange>{{0x7C0, 0x800}, {0x800, 0x840}}));
    EXPECT_EQ(split({0x0, 0x1800}, 2048),
              (std::vector<ByteRange>{{0x0, 0x800}, {0x800, 0x1000}, {0x1000, 0x1800}}));
}

TEST(Split, TilesWithoutGapOverlapOrCrossing) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 5000; ++i) {
        const Addr lo = rng() % 20000;
        const Addr hi = lo + 1 + rng() % 9000;
        const std::uint64_t boundary = std::uint64_t{1} << (5 + rng() % 7);
        const auto parts = split({lo, hi}, boundary);
        ASSERT_FALSE(parts.empty());
        EXPECT_EQ(parts.front().lo, lo);
        EXPECT_EQ(parts.back().hi, hi);
        for (std::size_t k = 0; k < parts.size(); ++k) {
            EXPECT_LT(parts[k].lo, parts[k].hi);
            EXPECT_EQ(parts[k].lo / boundary, (parts[k].hi - 1) / boundary);
            if (k) {
                EXPECT_EQ(parts[k - 1].hi, parts[k].lo);
            }
        }
    }
}

TEST(EdgeMasks, Examples) {
    const WordSpan s = bytes_to_words(4, 60);
    const EdgeMasks m = edge_masks(s.head_offset, s.tail_offset);
    EXPECT_EQ(m.first, 0xFFFFFFF0u);
    EXPECT_EQ(m.last, kFullMask);
    EXPECT_EQ(edge_masks(0, 31), (EdgeMasks{kFullMask, kFullMask}));
    EXPECT_EQ(edge_masks(8, 15).first & edge_masks(8, 15).last, 0x0000FF00u);
}

TEST(EdgeMasks, MatchBitwiseOracle) {
    for (std::uint32_t h = 0; h < 32; ++h) {
        for (std::uint32_t tl = 0; tl < 32; ++tl) {
            const EdgeMasks m = edge_masks(h, tl);
            for (std::uint32_t b = 0; b < 32; ++b) {
                EXPECT_EQ((m.first >> b) & 1u, b >= h ? 1u : 0u);
                EXPECT_EQ((m.last >> b) & 1u, b <= tl ? 1u : 0u);
            }
        }
    }
}

TEST(StrobeRuns, SparseStrobesDecompose) {
    BusTransaction t = txn(0, Direction::Write, 0, 4, 8);  // one word
    t.strobes = {0xFF, 0x00, 0xFF, 0x00};
    const auto runs = strobe_runs(t);
    EXPECT_EQ(runs, (std::vector<ByteRange>{{0, 8}, {16, 24}}));
    const auto plan = plan_requests(t, 2048);
    ASSERT_EQ(plan.size(), 2u);
    const auto mask = [](const DatapathRequest& r) { return r.first_mask & r.last_mask; };
    EXPECT_EQ(mask(plan[0].second), 0x000000FFu);
    EXPECT_EQ(mask(plan[1].second), 0x00FF0000u);
    EXPECT_EQ(plan[0].second.n_words, 1u);
}

TEST(StrobeRuns, ContiguousGivesOneRequest) {
    BusTransaction t = txn(0, Direction::Write, 0, 8, 8);
    t.strobes.front() = 0xF0;
    t.strobes.back() = 0x0F;
    const auto plan = plan_requests(t, 2048);
    ASSERT_EQ(plan.size(), 1u);
    EXPECT_EQ(plan[0].second, (DatapathRequest{Direction::Write, 0, 2, 0xFFFFFFF0u, 0x0FFFFFFFu}));
}

TEST(StrobeRuns, EmptyStrobesYieldNothing) {
    BusTransaction t = txn(0, Direction::Write, 0, 2, 8);
    t.strobes = {0, 0};
    EXPECT_TRUE(plan_requests(t, 2048).empty());
}

TEST(Plan, ReadsSplitAtBoundary) {
    const auto plan = plan_requests(txn(0, Direction::Read, 0x700, 64, 8), 2048);
    ASSERT_EQ(plan.size(), 2u);
    EXPECT_EQ(plan[0].second.n_words, 8u);
    EXPECT_EQ(plan[1].second.word_addr, 0x800u);
    EXPECT_EQ(plan[1].second.n_words, 8u);
}

TEST(ValidateTxn, Rejections) {
    auto t = txn(0, Direction::Read, 4, 1, 8);
    EXPECT_THROW(validate(t, 48), std::invalid_argument);  // not beat aligned
    t = txn(0, Direction::Read, 0, 1, 12);
    EXPECT_THROW(validate(t, 48), std::invalid_argument);
    t = txn(0, Direction::Read, 0, 1, 64);  // wider than a device word
    EXPECT_THROW(validate(t, 48), std::invalid_argument);
    EXPECT_NO_THROW(validate(txn(0, Direction::Read, 0, 1, 32), 48));
    t = txn(0, Direction::Read, (Addr{1} << 48) - 8, 2, 8);
    EXPECT_THROW(validate(t, 48), std::invalid_argument);
    t = txn(0, Direction::Write, 0, 2, 8);
    t.data.pop_back();
    EXPECT_THROW(validate(t, 48), std::invalid_argument);
    EXPECT_NO_THROW(validate(txn(0, Direction::Write, 0, 2, 8), 48));
}

TEST(FrontendConfig, Validation) {
    FrontendConfig c;
    EXPECT_NO_THROW(c.validate());
    c.data_width_bits = 48;
    EXPECT_THROW(c.validate(), std::exception);
    c.data_width_bits = 512;
    EXPECT_THROW(c.validate(), std::exception);
    c.data_width_bits = 256;
    EXPECT_NO_THROW(c.validate());
}

// ---------------------------------------------------------------------------
// Buffering against the full datapath
// ---------------------------------------------------------------------------

class BufferTest : public ::testing::Test {
protected:
    void boot(SystemConfig cfg = {}) {
        sys = std::make_unique<MemorySystem>(cfg);
        sys->set_bus_trace(&trace);
        sys->run_until_initialized();
        trace.str("");
    }

    std::vector<Completion> drain(Cycle limit = 200000) {
        std::vector<Completion> done;
        const Cycle stop = sys->now() + limit;
        while (!sys->quiescent() && sys->now() < stop) sys->step(done);
        EXPECT_TRUE(sys->quiescent());
        return done;
    }

    /// Cycle of the first command beat of `kind`, if any.
    std::optional<Cycle> first_command(const std::string& kind) const {
        std::istringstream in(trace.str());
        std::string line;
        while (std::getline(in, line)) {
            std::istringstream ls(line);
            Cycle c;
            std::string k, what;
            ls >> c >> k >> what;
            if (k == "cmd" && what == kind + ".0") return c;
        }
        return std::nullopt;
    }

    std::unique_ptr<MemorySystem> sys;
    std::ostringstream trace;
};

TEST_F(BufferTest, FullPageWriteReleasedAfterLastBeat) {
    boot();
    std::vector<std::uint8_t> payload(2048);
    std::iota(payload.begin(), payload.end(), 0);
    const Cycle offered = sys->now();
    sys->offer(make_transfer(0, Direction::Write, 0, 2048, 8, payload));
    std::uint64_t peak = 0;
    std::vector<Completion> done;
    while (!sys->quiescent()) {
        sys->step(done);
        peak = std::max(peak, sys->frontend().occupancy().write_used);
    }
    EXPECT_EQ(peak, 2048u);
    const auto act = first_command("ACT");
    ASSERT_TRUE(act);
    EXPECT_GE(*act, offered + 256);  // one 8-byte beat per cycle
    EXPECT_LE(*act, offered + 260);
    EXPECT_EQ(sys->frontend().occupancy().write_used, 0u);
    EXPECT_EQ(sys->device().peek(2047 - 31)[31], payload[2047]);
}

TEST_F(BufferTest, EagerReadHoldsAtMostOneWord) {
    boot();
    sys->offer(make_transfer(0, Direction::Read, 0, 2048, 8));
    const auto done = drain();
    ASSERT_EQ(done.size(), 1u);
    EXPECT_LE(sys->frontend().peak_read_held(), 32u);
    EXPECT_GT(sys->frontend().peak_read_held(), 0u);
}

TEST_F(BufferTest, StalledUpstreamGrowsByArrivalsThenDrains) {
    for (Cycle k : {8, 20, 64, 100, 257}) {
        boot();
        sys->offer(make_transfer(0, Direction::Read, 0, 2048, 8));
        std::vector<Completion> done;
        while (sys->frontend().occupancy().read_held == 0) sys->step(done);
        sys->set_upstream_ready(false);
        std::uint64_t peak = 0;
        for (Cycle i = 0; i < k; ++i) {
            sys->step(done);
            peak = std::max(peak, sys->frontend().occupancy().read_held);
        }
        sys->set_upstream_ready(true);
        const std::uint64_t words = peak / 32;
        const std::uint64_t grown = (k + 7) / 8;
        EXPECT_GE(words, grown) << k;      // held word plus arrivals
        EXPECT_LE(words, grown + 1) << k;
        done = drain();
        EXPECT_EQ(sys->frontend().occupancy().read_held, 0u);
        EXPECT_EQ(sys->frontend().occupancy().read_reserved, 0u);
        ASSERT_EQ(done.size(), 1u);
        std::vector<std::uint8_t> fill(2048, DramDevice::kDefaultFill);
        EXPECT_EQ(done[0].data, fill);
    }
}

TEST_F(BufferTest, TinyBuffersStillCorrect) {
    SystemConfig cfg;
    cfg.frontend.write_buffer_bytes = 64;
    cfg.frontend.read_buffer_bytes = 32;
    boot(cfg);
    EXPECT_EQ(sys->frontend().split_boundary(Direction::Write), 64u);
    EXPECT_EQ(sys->frontend().split_boundary(Direction::Read), 32u);
    std::vector<std::uint8_t> payload(1000);
    for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<std::uint8_t>(i * 13);
    sys->offer(make_transfer(0, Direction::Write, 24, 1000, 8, payload));
    std::vector<Completion> done;
    while (!sys->quiescent()) {
        sys->step(done);
        ASSERT_LE(sys->frontend().occupancy().write_used, 64u);
    }
    sys->offer(make_transfer(1, Direction::Read, 24, 1000, 8));
    while (!sys->quiescent()) {
        sys->step(done);
        ASSERT_LE(sys->frontend().occupancy().read_reserved, 32u);
    }
    ASSERT_EQ(done.size(), 2u);
    const auto& r = done[1].data;
    EXPECT_TRUE(std::equal(payload.begin(), payload.end(), r.begin()));
    EXPECT_EQ(sys->device().violation_log().size(), 0u);
}

TEST_F(BufferTest, SameDirectionCompletionsInSerialOrder) {
    boot();
    sys->offer(make_transfer(0, Direction::Read, 0, 2048, 8));
    sys->offer(make_transfer(1, Direction::Read, 8192, 8, 8));
    sys->offer(make_transfer(2, Direction::Read, 4096, 512, 8));
    const auto done = drain();
    ASSERT_EQ(done.size(), 3u);
    for (std::size_t i = 0; i < done.size(); ++i) EXPECT_EQ(done[i].serial, i);
}

TEST_F(BufferTest, OfferRejectsWideBeatsAndOutOfRange) {
    boot();
    EXPECT_THROW(sys->offer(txn(0, Direction::Read, 0, 1, 16)), std::invalid_argument);
    EXPECT_THROW(sys->offer(txn(0, Direction::Read, sys->config().profile.capacity_bytes(), 1, 8)),
                 std::invalid_argument);
}

}  // namespace
}  // namespace rpcsim
