/*

Copyright 2026 The mcsim Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

 https://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.

*/

#include <gtest/gtest.h>

#include <random>

#include "mcsim/page_policy.hpp"
#include "support/bench.hpp"

namespace mcsim {
namespace {

using testing::Bench;

BankState open_bank(std::uint64_t row, std::uint32_t accesses) {
  BankState b;
  b.open_row = row;
  b.activation_access_count = accesses;
  b.activation_hit_count = accesses > 0 ? accesses - 1 : 0;
  return b;
}

PageDecision decide(PagePolicyKind k, const BankState& b, std::uint32_t hits, std::uint32_t conflicts) {
  PagePolicy p(PagePolicyParams{k}, 1);
  return p.decide(0, b, {hits, conflicts});
}

constexpr auto Keep = PageDecision::KeepOpen;
constexpr auto Close = PageDecision::PrechargeNow;

TEST(PagePolicy, OpenNeverClosesOnItsOwn) {
  EXPECT_EQ(decide(PagePolicyKind::Open, open_bank(1, 3), 0, 0), Keep);
  EXPECT_EQ(decide(PagePolicyKind::Open, open_bank(1, 3), 0, 5), Keep);
}

TEST(PagePolicy, CloseAfterFirstAccess) {
  EXPECT_EQ(decide(PagePolicyKind::Close, open_bank(1, 0), 1, 0), Keep);
  EXPECT_EQ(decide(PagePolicyKind::Close, open_bank(1, 1), 3, 0), Close);
  PagePolicy p(PagePolicyParams{PagePolicyKind::Close}, 1);
  EXPECT_FALSE(p.blocks_column_access(open_bank(1, 0)));
  EXPECT_TRUE(p.blocks_column_access(open_bank(1, 1)));
}

TEST(PagePolicy, OpenAdaptive) {
  EXPECT_EQ(decide(PagePolicyKind::OpenAdaptive, open_bank(1, 1), 1, 4), Keep);   // pending hit
  EXPECT_EQ(decide(PagePolicyKind::OpenAdaptive, open_bank(1, 1), 0, 0), Keep);   // no conflict either
  EXPECT_EQ(decide(PagePolicyKind::OpenAdaptive, open_bank(1, 1), 0, 1), Close);  // both conditions
}

TEST(PagePolicy, CloseAdaptive) {
  EXPECT_EQ(decide(PagePolicyKind::CloseAdaptive, open_bank(1, 1), 0, 0), Close);
  EXPECT_EQ(decide(PagePolicyKind::CloseAdaptive, open_bank(1, 1), 1, 0), Keep);
  EXPECT_EQ(decide(PagePolicyKind::CloseAdaptive, open_bank(1, 1), 0, 3), Close);
}

TEST(PagePolicy, IdleBankIsLeftAlone) {
  for (auto k : {PagePolicyKind::Close, PagePolicyKind::CloseAdaptive, PagePolicyKind::Rbpp})
    EXPECT_EQ(decide(k, BankState{}, 0, 0), Keep);
}

TEST(AbppTable, RecordsLastActivationHits) {
  AbppTable t(16);
  t.record(5, 3);
  EXPECT_EQ(t.lookup(5), 3u);
  t.record(5, 0);
  EXPECT_EQ(t.lookup(5), 0u);
  EXPECT_EQ(t.entries().size(), 1u);
}

TEST(AbppTable, EvictsLeastRecentlyUsed) {
  AbppTable t(3);
  t.record(1, 1);
  t.record(2, 2);
  t.record(3, 3);
  t.record(1, 4);  // refresh row 1
  t.record(4, 5);  // evicts row 2
  // table-state oracle: rows {1,3,4} with their latest counts
  EXPECT_EQ(t.lookup(1), 4u);
  EXPECT_FALSE(t.lookup(2));
  EXPECT_EQ(t.lookup(3), 3u);
  EXPECT_EQ(t.lookup(4), 5u);
}

TEST(Abpp, Decisions) {
  PagePolicy p(PagePolicyParams{PagePolicyKind::Abpp}, 1);
  // no entry: behaves as open page
  EXPECT_EQ(p.decide(0, open_bank(7, 5), {0, 0}), Keep);
  p.on_precharge(0, 7, 2);
  EXPECT_EQ(p.decide(0, open_bank(7, 3), {0, 0}), Close);  // predicted 2, received 2
  EXPECT_EQ(p.decide(0, open_bank(7, 2), {0, 0}), Keep);   // received 1
  EXPECT_EQ(p.decide(0, open_bank(7, 3), {1, 0}), Keep);   // pending hit
}

TEST(Rbpp, Decisions) {
  PagePolicy p(PagePolicyParams{PagePolicyKind::Rbpp}, 1);
  EXPECT_EQ(p.decide(0, open_bank(9, 1), {0, 0}), Close);  // absent: close-adaptive fallback
  EXPECT_EQ(p.decide(0, open_bank(9, 1), {1, 0}), Keep);
  p.on_precharge(0, 9, 3);
  EXPECT_EQ(p.decide(0, open_bank(9, 4), {0, 0}), Close);  // count 3 reached
  EXPECT_EQ(p.decide(0, open_bank(9, 2), {0, 0}), Keep);
}

TEST(Rbpp, ZeroHitActivationLeavesRegistersAlone) {
  PagePolicy p(PagePolicyParams{PagePolicyKind::Rbpp}, 1);
  p.on_precharge(0, 9, 0);
  EXPECT_TRUE(p.table(0).entries().empty());
  p.on_precharge(0, 9, 2);
  p.on_precharge(0, 9, 0);
  EXPECT_EQ(p.table(0).lookup(9), 2u);
}

TEST(Rbpp, CumulativeFlag) {
  PagePolicyParams params{PagePolicyKind::Rbpp};
  params.rbpp_cumulative = true;
  PagePolicy p(params, 1);
  p.on_precharge(0, 9, 2);
  p.on_precharge(0, 9, 3);
  EXPECT_EQ(p.table(0).lookup(9), 5u);
}

TEST(Rbpp, FourRegistersPerBank) {
  PagePolicy p(PagePolicyParams{PagePolicyKind::Rbpp}, 2);
  for (std::uint64_t row = 0; row < 6; ++row) p.on_precharge(1, row, 1);
  EXPECT_EQ(p.table(1).entries().size(), 4u);
  EXPECT_TRUE(p.table(0).entries().empty());
}

// Every activation carries exactly one access under C_PM, and nothing hits
// when no two pending requests share a row.
TEST(PagePolicyIntegration, CloseGivesSingleAccessActivations) {
  Bench b(PagePolicyKind::Close);
  for (int i = 0; i < 60; ++i) b.read(i % 4, i % 2, i % 8, i);
  b.drain();
  b.idle(100);
  EXPECT_EQ(b.stats().row_hits, 0u);
  ASSERT_EQ(b.stats().activation_histogram.size(), 1u);
  EXPECT_EQ(b.stats().activation_histogram.at(1), 60u);
}

TEST(PagePolicyIntegration, CloseStillServesRepeatedRow) {
  Bench b(PagePolicyKind::Close);
  for (int i = 0; i < 10; ++i) b.read(0, 0, 0, 3, i);
  b.drain();
  b.idle(100);
  EXPECT_EQ(b.retired().size(), 10u);
  EXPECT_EQ(b.stats().activation_histogram.at(1), 10u);
}

TEST(PagePolicyIntegration, OpenSequentialStreamMatchesClosedForm) {
  // one core walks rows block by block; hit rate = 1 - rows / accesses
  Bench b(PagePolicyKind::Open, SchedulerKind::FrFcfs, 1);
  const int rows = 6, blocks = 128;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < blocks; ++c) {
      while (!b.read(0, 0, 0, r, c)) b.step();
      b.step();
    }
  }
  b.drain();
  const auto& s = b.stats();
  EXPECT_EQ(s.column_accesses, std::uint64_t(rows * blocks));
  EXPECT_EQ(s.row_hits, std::uint64_t(rows * blocks - rows));
}

TEST(PagePolicyIntegration, OpenAdaptiveNeverClosesOverAPendingHit) {
  std::mt19937_64 rng(8);
  Bench b(PagePolicyKind::OpenAdaptive, SchedulerKind::FrFcfs);
  for (int cycle = 0; cycle < 20000; ++cycle) {
    if (rng() % 4 == 0) b.read(0, 0, std::uint32_t(rng() % 2), rng() % 3, std::uint32_t(rng() % 64));
    auto& ctl = b.controller();
    const auto summary = ctl.summarize();
    const Command c = b.step();
    if (c.kind != CommandKind::Precharge) continue;
    const Event& e = b.log().back();
    if (e.request_id != kNoRequest) continue;  // a scheduler precharge
    ASSERT_EQ(summary[ctl.device().bank_index(c.rank, c.bank)].pending_hits, 0u) << "cycle " << cycle;
  }
}

TEST(PagePolicyIntegration, CloseAdaptiveLeavesNothingOpenWhenIdle) {
  Bench b(PagePolicyKind::CloseAdaptive);
  for (int i = 0; i < 30; ++i) b.read(0, i % 2, i % 8, i % 3, i);
  b.drain();
  b.idle(200);
  for (std::uint32_t bank = 0; bank < b.controller().device().bank_count(); ++bank)
    EXPECT_FALSE(b.controller().device().bank(bank).active());
}

TEST(PagePolicyIntegration, AbppWithPerfectHistoryClosesAtTheLastHit) {
  // Same access pattern twice: the second time ABPP knows each row's hits.
  Bench b(PagePolicyKind::Abpp, SchedulerKind::FrFcfs, 1);
  auto pattern = [&] {
    for (std::uint64_t row = 0; row < 4; ++row) {
      for (std::uint32_t c = 0; c <= row; ++c) b.read(0, 0, 0, row, c);
      b.drain();
      b.idle(60);
    }
  };
  pattern();
  const std::size_t first_pass = b.commands().size();
  pattern();
  // Second pass: every row closes on its own right after its final access,
  // before the next row's request shows up.
  std::uint32_t precharges_after_last_access = 0;
  const auto& cmds = b.commands();
  for (std::size_t i = first_pass; i + 1 < cmds.size(); ++i) {
    if (is_column(cmds[i].second.kind) && cmds[i + 1].second.kind == CommandKind::Precharge)
      ++precharges_after_last_access;
  }
  EXPECT_EQ(precharges_after_last_access, 4u);
}

TEST(PagePolicy, ParseNames) {
  EXPECT_EQ(parse_page_policy("OA_PM"), PagePolicyKind::OpenAdaptive);
  EXPECT_EQ(parse_page_policy("OPEN_ADAPTIVE"), PagePolicyKind::OpenAdaptive);
  EXPECT_EQ(parse_page_policy("CA_PM"), PagePolicyKind::CloseAdaptive);
  EXPECT_EQ(parse_page_policy("C_PM"), PagePolicyKind::Close);
  EXPECT_EQ(parse_page_policy("O_PM"), PagePolicyKind::Open);
  EXPECT_EQ(parse_page_policy("ABPP"), PagePolicyKind::Abpp);
  EXPECT_EQ(parse_page_policy("RBPP"), PagePolicyKind::Rbpp);
  EXPECT_FALSE(parse_page_policy("TIMER"));
}

}  // namespace
}  // namespace mcsim
