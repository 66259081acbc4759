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

#include <gtest/gtest.h>

#include <map>
#include <sstream>

namespace rpcsim {
namespace {

// ---------------------------------------------------------------------------
// Command FSM
// ---------------------------------------------------------------------------

TEST(Decompose, SingleWordReadAtZero) {
    const Profile p;
    const auto cmds = decompose({Direction::Read, 0, 1}, p);
    ASSERT_EQ(cmds.size(), 3u);
    EXPECT_EQ(cmds[0], RpcCommand{(cmd::Activate{0, 0})});
    EXPECT_EQ(cmds[1], RpcCommand{(cmd::Read{0, 0, 1})});
    EXPECT_EQ(cmds[2], RpcCommand{cmd::Precharge{0}});
}

TEST(Decompose, WriteCarriesBothMasks) {
    const Profile p;
    const DatapathRequest w{Direction::Write, 2048 + 64, 2, 0xFFFFFF00u, 0x0000FFFFu};
    const auto cmds = decompose(w, p);
    ASSERT_EQ(cmds.size(), 3u);
    EXPECT_EQ(cmds[0], RpcCommand{(cmd::Activate{1, 0})});
    EXPECT_EQ(cmds[1], RpcCommand{(cmd::Write{1, 2, 2, 0xFFFFFF00u, 0x0000FFFFu})});
    EXPECT_EQ(cmds[2], RpcCommand{cmd::Precharge{1}});
}

TEST(Decompose, FullPageReadIsOneCommand) {
    const Profile p;
    const auto cmds = decompose({Direction::Read, 4 * 2048, 64}, p);
    EXPECT_EQ(cmds[1], RpcCommand{(cmd::Read{0, 0, 64})});
}

TEST(ValidateRequest, RejectsMalformed) {
    const Profile p;
    EXPECT_THROW(validate({Direction::Read, 16, 1}, p), std::invalid_argument);
    EXPECT_THROW(validate({Direction::Read, 0, 0}, p), std::invalid_argument);
    EXPECT_THROW(validate({Direction::Read, 2048 - 32, 2}, p), std::invalid_argument);
    EXPECT_THROW(validate({Direction::Read, p.capacity_bytes(), 1}, p), std::invalid_argument);
    EXPECT_NO_THROW(validate({Direction::Read, 2048 - 32, 1}, p));
}

// ---------------------------------------------------------------------------
// Manager
// ---------------------------------------------------------------------------

ManagerConfig small_manager() {
    ManagerConfig m;
    m.refresh_interval = 400;
    m.zq_interval = 200;
    m.refresh_priority_window = 100;
    m.init_schedule = {{cmd::InitStep{0}, 10}, {cmd::InitStep{1}, 5}};
    return m;
}

TEST(Manager, ColdStartEmitsFirstInitStep) {
    Manager m(ManagerConfig::defaults_for(TimingParams{}), 4);
    const auto c = m.tick(0);
    ASSERT_TRUE(c);
    EXPECT_EQ(*c, RpcCommand{cmd::InitStep{0}});
    EXPECT_FALSE(m.tick(1));  // one step outstanding at a time
}

TEST(Manager, InitStepsPacedFromIssue) {
    Manager m(small_manager(), 4);
    ASSERT_TRUE(m.tick(0));
    m.notify_issued(cmd::InitStep{0}, 3);
    EXPECT_FALSE(m.tick(12));
    const auto c = m.tick(13);
    ASSERT_TRUE(c);
    EXPECT_EQ(*c, RpcCommand{cmd::InitStep{1}});
    m.notify_issued(*c, 13);
    EXPECT_EQ(m.init_done_at(), Cycle{18});
}

TEST(Manager, SteadyStateScheduleByEnumeration) {
    // Oracle: refresh every interval/banks cycles round robin, ZQ every zq
    // interval, refresh wins and a displaced ZQ goes out the next cycle.
    Manager m(small_manager(), 4);
    ASSERT_TRUE(m.tick(0));
    m.notify_issued(cmd::InitStep{0}, 0);
    ASSERT_TRUE(m.tick(10));
    m.notify_issued(cmd::InitStep{1}, 10);
    const Cycle done = 15;
    ASSERT_EQ(m.refresh_spacing(), 100u);

    std::map<Cycle, RpcCommand> got;
    for (Cycle c = done; c < done + 2000; ++c) {
        if (auto x = m.tick(c)) got.emplace(c, *x);
    }
    std::map<Cycle, RpcCommand> want;
    std::uint32_t bank = 0;
    for (Cycle c = done + 100; c < done + 2000; c += 100) {
        want.emplace(c, cmd::Refresh{1u << bank});
        bank = (bank + 1) % 4;
    }
    for (Cycle c = done + 200; c < done + 2000; c += 200) want.emplace(c + 1, cmd::ZqCal{});
    EXPECT_EQ(got, want);
}

TEST(Manager, ConfigValidation) {
    const TimingParams t;
    const DeviceGeometry g;
    EXPECT_NO_THROW(ManagerConfig::defaults_for(t).validate(t, g));
    auto m = ManagerConfig::defaults_for(t);
    m.refresh_interval = t.t_refi + 1;
    EXPECT_THROW(m.validate(t, g), ConfigError);
    m = ManagerConfig::defaults_for(t);
    m.init_schedule.clear();
    EXPECT_THROW(m.validate(t, g), ConfigError);
    m = ManagerConfig::defaults_for(t);
    m.zq_interval = 0;
    EXPECT_THROW(m.validate(t, g), ConfigError);
}

// ---------------------------------------------------------------------------
// PHY
// ---------------------------------------------------------------------------

BusBeat data_beat(Cycle c, std::uint8_t slice, std::uint8_t v) {
    BusBeat b;
    b.cycle = c;
    b.kind = BeatKind::Data;
    b.direction = Direction::Read;
    b.tag = 7;
    b.word_index = 2;
    b.slice = slice;
    b.bytes = {v, static_cast<std::uint8_t>(v + 1), static_cast<std::uint8_t>(v + 2), static_cast<std::uint8_t>(v + 3)};
    return b;
}

TEST(Phy, EightBeatsFormOneWordAfterCdcDelay) {
    Phy phy(PhyConfig{3, 0});
    for (std::uint8_t i = 0; i < 8; ++i) phy.schedule(data_beat(10 + i, i, static_cast<std::uint8_t>(4 * i)));
    std::vector<std::pair<Cycle, RxWord>> words;
    for (Cycle c = 0; c < 40; ++c) {
        const PhyStep s = phy.step(c);
        EXPECT_EQ(s.beat.kind, c >= 10 && c < 18 ? BeatKind::Data : BeatKind::Idle) << c;
        if (s.word) words.emplace_back(c, *s.word);
    }
    ASSERT_EQ(words.size(), 1u);
    EXPECT_EQ(words[0].first, 17u + 3u);
    EXPECT_EQ(words[0].second.tag, 7u);
    EXPECT_EQ(words[0].second.word_index, 2u);
    for (int i = 0; i < 32; ++i) EXPECT_EQ(words[0].second.data[i], i);
    EXPECT_TRUE(phy.idle());
}

TEST(Phy, NoDataNoWord) {
    Phy phy(PhyConfig{});
    for (Cycle c = 0; c < 20; ++c) EXPECT_FALSE(phy.step(c).word);
}

TEST(Phy, CdcDelayIsAParameter) {
    for (Cycle d : {0, 1, 9}) {
        Phy phy(PhyConfig{d, 0});
        for (std::uint8_t i = 0; i < 8; ++i) phy.schedule(data_beat(i, i, 0));
        Cycle seen = 0;
        for (Cycle c = 0; c < 30; ++c) {
            if (phy.step(c).word) seen = c;
        }
        EXPECT_EQ(seen, 7 + d);
    }
}

// ---------------------------------------------------------------------------
// Timing FSM policy
// ---------------------------------------------------------------------------

class FsmTest : public ::testing::Test {
protected:
    FsmTest() : manager(ManagerConfig::defaults_for(profile.timing)), fsm(profile, manager, config), banks(4) {}

    PendingRequest request(std::uint64_t tag, Addr addr, Cycle arrival) {
        PendingRequest r;
        r.tag = tag;
        r.req = {Direction::Read, addr, 1};
        r.loc = map_address(addr, profile);
        r.arrival = arrival;
        return r;
    }

    Profile profile;
    ControllerConfig config;
    ManagerConfig manager;
    TimingFsm fsm;
    std::vector<BankShadow> banks;
};

TEST_F(FsmTest, OtherBanksProceedWhileOneRefreshes) {
    const Cycle now = 1000;
    banks[2].refresh_end = now + profile.timing.t_rfc;
    std::vector<PendingRequest> reqs{request(0, 0, 900), request(1, 2048, 901)};
    auto c = fsm.select(now, true, reqs, {}, banks);
    ASSERT_TRUE(c);
    EXPECT_EQ(c->command, RpcCommand{(cmd::Activate{0, 0})});
    reqs[0].stage = RequestStage::NeedAccess;
    banks[0].active = true;
    banks[0].activated_at = now;
    c = fsm.select(now + 2, true, reqs, {}, banks);
    ASSERT_TRUE(c);
    EXPECT_EQ(c->command, RpcCommand{(cmd::Activate{1, 0})});  // lookahead, still inside t_rfc of bank 2
}

TEST_F(FsmTest, RefreshInsideWindowBlocksActToItsBank) {
    // Bank 0 last refreshed at 0: deadline t_refi, window opens at t_refi - window.
    const Cycle now = profile.timing.t_refi - manager.refresh_priority_window;
    banks[1].active = true;  // the refresh also covers bank 1, so it cannot go yet
    std::vector<PendingRequest> reqs{request(0, 0, 10)};
    std::vector<PendingManagement> mgmt{{cmd::Refresh{0b11}, now - 5}};
    EXPECT_FALSE(fsm.select(now, true, reqs, mgmt, banks));
    EXPECT_TRUE(fsm.select(now - 1, true, reqs, mgmt, banks));  // window not yet open
    banks[1].active = false;
    const auto c = fsm.select(now, true, reqs, mgmt, banks);
    ASSERT_TRUE(c);
    EXPECT_EQ(c->command, RpcCommand{cmd::Refresh{0b11}});
}

TEST_F(FsmTest, OldestFirstOutsideWindow) {
    const Cycle now = 100;
    std::vector<PendingRequest> reqs{request(0, 0, 10)};
    std::vector<PendingManagement> mgmt{{cmd::Refresh{1}, 50}};
    const auto c = fsm.select(now, true, reqs, mgmt, banks);
    ASSERT_TRUE(c);
    EXPECT_EQ(c->source, IssueChoice::Source::Datapath);
}

TEST_F(FsmTest, UrgentRefreshOutranksOlderDataOnOtherBanks) {
    const Cycle now = profile.timing.t_refi - 10;
    std::vector<PendingRequest> reqs{request(0, 2048, 10)};
    std::vector<PendingManagement> mgmt{{cmd::Refresh{1}, 500}};
    const auto c = fsm.select(now, true, reqs, mgmt, banks);
    ASSERT_TRUE(c);
    EXPECT_EQ(c->command, RpcCommand{cmd::Refresh{1}});
}

TEST_F(FsmTest, BurstHeldBackWhenIdleBankDeadlineFallsInside) {
    // Bank 1 waits out t_rp with a refresh pending; a 64-word read on bank 0
    // would hold the bus past bank 1's deadline.
    std::vector<PendingRequest> reqs{request(0, 0, 10)};
    reqs[0].req.n_words = 64;
    reqs[0].stage = RequestStage::NeedAccess;
    banks[0].active = true;
    std::vector<PendingManagement> mgmt{{cmd::Refresh{0b10}, 20}};
    const Cycle deadline = profile.timing.t_refi;
    const Cycle late = deadline - 200, early = deadline - 600;
    banks[1].precharged_at = late - 2;
    EXPECT_FALSE(fsm.select(late, true, reqs, mgmt, banks));
    banks[1].precharged_at = early - 2;
    const auto c = fsm.select(early, true, reqs, mgmt, banks);
    ASSERT_TRUE(c);
    EXPECT_EQ(c->command, RpcCommand{(cmd::Read{0, 0, 64})});
}

TEST_F(FsmTest, LookaheadActRefusedWhenQueuedBurstsOutlastDeadline) {
    config.act_lookahead = 4;
    std::vector<PendingRequest> reqs{request(0, 0, 10), request(1, 2048, 11), request(2, 4096, 12)};
    for (auto& r : reqs) r.req.n_words = 64;
    const Cycle now = profile.timing.t_refi - manager.refresh_priority_window - 100;
    reqs[0].stage = reqs[1].stage = RequestStage::NeedAccess;
    banks[0].active = banks[1].active = true;
    banks[0].activated_at = banks[1].activated_at = now;  // t_rcd pending, nothing else eligible
    EXPECT_FALSE(fsm.select(now, true, reqs, {}, banks));
    reqs.erase(reqs.begin() + 1);
    banks[1].active = false;
    const auto c = fsm.select(now, true, reqs, {}, banks);
    ASSERT_TRUE(c);
    EXPECT_EQ(c->command, RpcCommand{(cmd::Activate{2, 0})});
}

TEST_F(FsmTest, AccessCommandsLeaveInOrder) {
    std::vector<PendingRequest> reqs{request(0, 0, 10), request(1, 2048, 11)};
    reqs[1].stage = RequestStage::NeedAccess;
    banks[1].active = true;
    const auto c = fsm.select(500, true, reqs, {}, banks);
    ASSERT_TRUE(c);
    EXPECT_EQ(c->command, RpcCommand{(cmd::Activate{0, 0})});
}

// ---------------------------------------------------------------------------
// Controller on the device
// ---------------------------------------------------------------------------

class ControllerTest : public ::testing::Test {
protected:
    ControllerTest()
        : device(profile), ctl(profile, ControllerConfig{}, ManagerConfig::defaults_for(profile.timing), device) {
        while (!ctl.initialized(now)) steps.push_back(ctl.tick(now++));
        steps.clear();
    }

    void run_until_idle(Cycle limit = 100000) {
        const Cycle stop = now + limit;
        while (!ctl.idle() && now < stop) steps.push_back(ctl.tick(now++));
        ASSERT_TRUE(ctl.idle());
    }

    Profile profile;
    DramDevice device;
    Controller ctl;
    Cycle now = 0;
    std::vector<ControllerStep> steps;
    const TimingParams& t = profile.timing;
};

TEST_F(ControllerTest, InitDrivesDeviceReady) {
    EXPECT_TRUE(device.initialized(now));
    EXPECT_EQ(ctl.events().init_steps, t.t_init_steps.size());
    EXPECT_TRUE(device.violation_log().empty());
}

TEST_F(ControllerTest, SingleWordReadBusOccupancy) {
    ctl.push(1, {Direction::Read, 0, 1}, {}, now);
    run_until_idle();
    std::vector<BeatKind> kinds;
    for (const auto& s : steps) kinds.push_back(s.beat.kind);
    std::size_t rd = 0;
    while (rd < steps.size() && !(steps[rd].beat.kind == BeatKind::Command && steps[rd].beat.command == CommandKind::Read)) ++rd;
    ASSERT_LT(rd, steps.size());
    const Cycle reservation = t.t_cmd_cycles + t.t_preamble + 8 + t.t_postamble;
    std::map<BeatKind, Cycle> in_window;
    for (Cycle k = 0; k < reservation; ++k) ++in_window[kinds[rd + k]];
    EXPECT_EQ(in_window[BeatKind::Command], t.t_cmd_cycles);
    EXPECT_EQ(in_window[BeatKind::Preamble] + in_window[BeatKind::Postamble], t.t_preamble + t.t_postamble);
    EXPECT_EQ(in_window[BeatKind::Data], 8u);
    EXPECT_EQ(in_window[BeatKind::Idle], 0u);
    std::size_t data = 0, words = 0;
    for (const auto& s : steps) {
        data += s.beat.kind == BeatKind::Data;
        words += s.read_word.has_value();
    }
    EXPECT_EQ(data, 8u);
    EXPECT_EQ(words, 1u);
    EXPECT_TRUE(device.violation_log().empty());
}

TEST_F(ControllerTest, NextCommandWaitsForPostamble) {
    ctl.push(1, {Direction::Read, 0, 4}, {}, now);
    ctl.push(2, {Direction::Read, 2048, 1}, {}, now);
    run_until_idle();
    Cycle rd_at = 0;
    bool seen = false;
    for (const auto& s : steps) {
        if (s.beat.kind == BeatKind::Command && s.beat.slice == 0 && s.beat.command == CommandKind::Read && !seen) {
            rd_at = s.beat.cycle;
            seen = true;
        } else if (seen && s.beat.kind == BeatKind::Command && s.beat.slice == 0) {
            EXPECT_GE(s.beat.cycle, rd_at + bus_reservation(cmd::Read{0, 0, 4}, t));
            break;
        }
    }
    EXPECT_TRUE(seen);
    EXPECT_TRUE(device.violation_log().empty());
}

TEST_F(ControllerTest, WriteThenReadReturnsData) {
    Word w;
    for (int i = 0; i < 32; ++i) w[i] = static_cast<std::uint8_t>(0xC0 + i);
    ctl.push(1, {Direction::Write, 3 * 2048 + 32, 1, kFullMask, kFullMask}, {w}, now);
    ctl.push(2, {Direction::Read, 3 * 2048 + 32, 1}, {}, now);
    run_until_idle();
    std::optional<RxWord> got;
    bool write_done = false;
    for (const auto& s : steps) {
        if (s.read_word) got = s.read_word;
        write_done = write_done || (s.write_done && *s.write_done == 1);
    }
    ASSERT_TRUE(got);
    EXPECT_EQ(got->tag, 2u);
    EXPECT_EQ(got->data, w);
    EXPECT_TRUE(write_done);
    EXPECT_EQ(ctl.events().activates, 2u);
    EXPECT_EQ(ctl.events().precharges, 2u);
}

TEST_F(ControllerTest, BusExclusivityAndRefreshOverLongIdle) {
    const Cycle end = now + 20 * t.t_refi;
    std::uint64_t tag = 0;
    while (now < end) {
        if (now % 97 == 0 && ctl.can_accept()) {
            const Addr a = (tag * 2048 * 3 + (tag % 5) * 32) % (64 * 2048);
            ctl.push(tag++, {Direction::Read, a - a % 32, 1 + static_cast<std::uint32_t>(tag % 8)}, {}, now);
        }
        const auto s = ctl.tick(now);
        EXPECT_EQ(s.beat.cycle, s.beat.kind == BeatKind::Idle ? s.beat.cycle : now);
        ++now;
        if (now % 64 == 0) {
            ASSERT_TRUE(device.check_refresh_deadlines(now).empty()) << now;
        }
    }
    EXPECT_TRUE(device.violation_log().empty());
    EXPECT_EQ(ctl.rejected_commands(), 0u);
    EXPECT_GE(ctl.events().refreshes, 4u * 20u * t.t_refi / ManagerConfig::defaults_for(t).refresh_interval - 4u);
}

TEST(WriteBeat, TraceLineFormat) {
    BusBeat b;
    b.cycle = 42;
    b.kind = BeatKind::Command;
    b.command = CommandKind::Activate;
    b.slice = 1;
    std::ostringstream os;
    write_beat(os, b);
    EXPECT_EQ(os.str(), "42 cmd ACT.1\n");
}

}  // namespace
}  // namespace rpcsim
