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

#include "rpcsim/config.hpp"
#include "rpcsim/errors.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace rpcsim {
namespace {

Config parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

std::string dump(const Config& c) {
    std::ostringstream os;
    write_config(os, c);
    return os.str();
}

std::string error_of(const std::string& text) {
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

TEST(Config, EmptyFileKeepsDefaults) { EXPECT_EQ(dump(parse("")), dump(Config{})); }

TEST(Config, SectionAndDottedFormsAgree) {
    const Config a = parse("[timing]\nt_rcd = 7\n[frontend]\nwrite_buffer_bytes = 4096\n");
    const Config b = parse("timing.t_rcd = 7\nfrontend.write_buffer_bytes = 4096\n");
    EXPECT_EQ(a.system.profile.timing.t_rcd, 7u);
    EXPECT_EQ(a.system.frontend.write_buffer_bytes, 4096u);
    EXPECT_EQ(dump(a), dump(b));
}

TEST(Config, UnknownKeyNamed) {
    EXPECT_NE(error_of("[timing]\nt_bogus = 3\n").find("timing.t_bogus"), std::string::npos);
    EXPECT_NE(error_of("llc.wayz = 3\n").find("llc.wayz"), std::string::npos);
}

TEST(Config, MalformedValueNamed) {
    EXPECT_NE(error_of("[llc]\nways = many\n").find("llc.ways"), std::string::npos);
    EXPECT_NE(error_of("[llc]\nenabled = maybe\n").find("llc.enabled"), std::string::npos);
    EXPECT_NE(error_of("[energy]\ne_activate = 1.5x\n").find("energy.e_activate"), std::string::npos);
}

TEST(Config, SemanticValidationNamesKey) {
    EXPECT_NE(error_of("[timing]\npage_bytes = 1000\n").find("timing.page_bytes"), std::string::npos);
    EXPECT_NE(error_of("[energy]\np_background = -1\n").find("energy.p_background"), std::string::npos);
    EXPECT_NE(error_of("[manager]\nrefresh_interval = 99999\n").find("manager.refresh_interval"),
              std::string::npos);
}

TEST(Config, SyntaxErrorReportsLine) {
    const std::string e = error_of("[timing]\nt_rcd = 6\nthis line has no equals\n");
    EXPECT_NE(e.find("line 3"), std::string::npos) << e;
}

TEST(Config, DuplicateKeyRejected) {
    EXPECT_THROW(parse("timing.t_rcd = 6\n[timing]\nt_rcd = 7\n"), ConfigError);
}

TEST(Config, ManagerFollowsTimingUnlessExplicit) {
    const Config a = parse("[timing]\nt_refi = 6240\n");
    EXPECT_EQ(a.system.manager.refresh_interval, 3120u);
    const Config b = parse("[timing]\nt_refi = 6240\n[manager]\nrefresh_interval = 2000\n");
    EXPECT_EQ(b.system.manager.refresh_interval, 2000u);
    const Config c = parse("[timing]\nt_init_steps = 10, 20\n");
    ASSERT_EQ(c.system.manager.init_schedule.size(), 2u);
    EXPECT_EQ(c.system.manager.init_schedule[1].second, 20u);
}

TEST(Config, HexAndBooleanValues) {
    const Config c = parse("[llc]\nenabled = true\nspm_way_mask = 0x3\nspm_base = 0x20000000\n");
    EXPECT_TRUE(c.system.llc.enabled);
    EXPECT_EQ(c.system.llc.spm_way_mask, 3u);
    EXPECT_EQ(c.system.llc.spm_base, 0x2000'0000u);
}

TEST(Config, WriteParsesBackIdentically) {
    const Config c = parse("[timing]\nt_rcd = 9\nfreq_mhz = 333.5\n[llc]\nspm_way_mask = 0x5\n"
                           "[output]\ncsv = out.csv\n[energy]\np_background = 123.456\n");
    EXPECT_EQ(dump(parse(dump(c))), dump(c));
    EXPECT_EQ(parse(dump(c)).system.profile.timing.freq_mhz, 333.5);
}

TEST(Config, EveryKeyIsWritten) {
    const std::string text = dump(Config{});
    for (const auto& key : config_keys()) {
        const auto leaf = key.substr(key.find('.') + 1);
        EXPECT_NE(text.find(leaf + " = "), std::string::npos) << key;
    }
}

TEST(Config, OverridesInOrder) {
    const Config c = apply_overrides(Config{}, {{"harness.seed", "42"}, {"frontend.data_width_bits", "128"}});
    EXPECT_EQ(c.system.harness.seed, 42u);
    EXPECT_EQ(c.system.frontend.beat_bytes(), 16u);
    EXPECT_THROW(apply_overrides(Config{}, {{"nope", "1"}}), ConfigError);
}

TEST(Config, MissingFile) { EXPECT_THROW(load_config("/nonexistent/rpcsim.ini"), ConfigError); }

}  // namespace
}  // namespace rpcsim
