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

#include <sstream>

#include "mcsim/simulator.hpp"
#include "mcsim/workload.hpp"

namespace mcsim {
namespace {

TEST(TextTrace, ParsesRecordsAndComments) {
  std::istringstream in(
      "# core,kind,addr,gap\n"
      "0,R,0x1000,10\n"
      "\n"
      "3, W ,0xdeadbeef40,0   # trailing comment\n");
  const auto recs = read_text_trace(in);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0], (TraceRecord{0, AccessKind::Read, 0x1000, 10}));
  EXPECT_EQ(recs[1], (TraceRecord{3, AccessKind::Write, 0xdeadbeef40, 0}));
}

TEST(TextTrace, RejectsMalformedLines) {
  std::istringstream a("0,R,0x10\n");
  EXPECT_THROW(read_text_trace(a), TraceFormatError);
  std::istringstream b("0,X,0x10,1\n");
  EXPECT_THROW(read_text_trace(b), TraceFormatError);
  std::istringstream c("0,R,0x10,-4\n");
  EXPECT_THROW(read_text_trace(c), TraceFormatError);
}

TEST(Trace, TextAndBinaryRoundTrip) {
  std::vector<TraceRecord> recs;
  for (std::uint32_t i = 0; i < 100; ++i)
    recs.push_back({i % 7, i % 3 ? AccessKind::Read : AccessKind::Write, 0x40ULL * i * 977, i * 13});
  std::stringstream text;
  write_text_trace(text, recs);
  EXPECT_EQ(read_text_trace(text), recs);
  std::stringstream bin;
  write_binary_trace(bin, recs);
  EXPECT_EQ(bin.str().size(), recs.size() * 15);
  EXPECT_EQ(read_binary_trace(bin), recs);
}

TEST(Trace, BinaryLayoutIsLittleEndian) {
  std::stringstream bin;
  const TraceRecord r{0x0102, AccessKind::Write, 0x1122334455667788ULL, 0xAABBCCDD};
  write_binary_trace(bin, std::span<const TraceRecord>(&r, 1));
  const std::string s = bin.str();
  const unsigned char expect[15] = {0x02, 0x01, 0x01, 0x88, 0x77, 0x66, 0x55, 0x44,
                                    0x33, 0x22, 0x11, 0xDD, 0xCC, 0xBB, 0xAA};
  ASSERT_EQ(s.size(), 15u);
  for (int i = 0; i < 15; ++i) EXPECT_EQ(static_cast<unsigned char>(s[i]), expect[i]) << i;
}

TEST(Trace, TruncatedBinaryFails) {
  std::stringstream bin;
  bin.write("\x01\x02\x03", 3);
  EXPECT_THROW(read_binary_trace(bin), TraceFormatError);
}

TEST(TraceStream, SplitsPerCoreAndEnds) {
  const std::vector<TraceRecord> recs = {{0, AccessKind::Read, 0, 1}, {1, AccessKind::Read, 64, 2},
                                         {0, AccessKind::Write, 128, 3}};
  TraceStream s(recs, 2);
  EXPECT_EQ(s.next(0)->address, 0u);
  EXPECT_EQ(s.next(0)->address, 128u);
  EXPECT_FALSE(s.next(0));
  EXPECT_EQ(s.next(1)->gap, 2u);
  EXPECT_THROW(TraceStream(recs, 1), TraceFormatError);
}

TEST(Synthetic, MeanGapFollowsMpki) {
  SyntheticProfile p;
  p.mpki = 5;
  EXPECT_DOUBLE_EQ(p.mean_gap(), 200.0);
}

TEST(Synthetic, StatisticsConvergeToProfile) {
  SyntheticProfile p;
  p.cores = 4;
  p.mpki = 5;
  p.read_fraction = 0.7;
  p.seed = 3;
  SyntheticStream s(p, DramGeometry{});
  const int n = 1'000'000;
  std::uint64_t instructions = 0, reads = 0;
  for (int i = 0; i < n; ++i) {
    const auto r = *s.next(i % p.cores);
    instructions += r.gap;
    reads += r.kind == AccessKind::Read;
  }
  const double mpki = 1000.0 * n / double(instructions);
  EXPECT_NEAR(mpki, 5.0, 0.02 * 5.0);
  EXPECT_NEAR(double(reads) / n, 0.7, 0.02 * 0.7);
}

TEST(Synthetic, LocalityLimits) {
  const DramGeometry g;
  SyntheticProfile p;
  p.cores = 1;
  p.row_locality = 1.0;
  SyntheticStream same(p, g);
  const std::uint64_t row = same.next(0)->address / g.row_buffer_bytes;
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(same.next(0)->address / g.row_buffer_bytes, row);

  p.row_locality = 0.0;
  SyntheticStream fresh(p, g);
  std::uint64_t prev = fresh.next(0)->address / g.row_buffer_bytes, repeats = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::uint64_t r = fresh.next(0)->address / g.row_buffer_bytes;
    repeats += r == prev;
    prev = r;
  }
  EXPECT_LE(repeats, 1u);  // 4M regions: a repeat is a fluke
}

TEST(Synthetic, SameSeedSameStream) {
  SyntheticProfile p;
  SyntheticStream a(p, DramGeometry{}), b(p, DramGeometry{});
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next(i % 16), b.next(i % 16));
}

TEST(Synthetic, ValidatesProbabilities) {
  SyntheticProfile p;
  p.read_fraction = 1.5;
  EXPECT_THROW(p.validate(DramGeometry{}), ConfigError);
  p.read_fraction = 0.5;
  p.mpki = 0;
  EXPECT_THROW(p.validate(DramGeometry{}), ConfigError);
}

class OneRecordStream final : public RequestStream {
 public:
  explicit OneRecordStream(TraceRecord r) : r_(r) {}
  std::uint32_t cores() const override { return 1; }
  std::optional<TraceRecord> next(std::uint32_t) override {
    if (used_) return std::nullopt;
    used_ = true;
    return r_;
  }

 private:
  TraceRecord r_;
  bool used_ = false;
};

TEST(Core, RunsAtTwoAndAHalfInstructionsPerMemoryCycle) {
  Core core(0, CoreParams{}, ClockParams{});
  OneRecordStream s({0, AccessKind::Read, 0, 1000});
  std::uint64_t total = 0;
  for (Cycle c = 0; c < 100; ++c) total += core.tick(c, s, [](const TraceRecord&, Cycle) { return true; });
  EXPECT_EQ(total, 250u);
}

TEST(Core, ReadBlocksUntilRetired) {
  Core core(0, CoreParams{}, ClockParams{});
  OneRecordStream s({0, AccessKind::Read, 0, 0});
  int issued = 0;
  auto accept = [&](const TraceRecord&, Cycle) { return ++issued, true; };
  core.tick(0, s, accept);
  EXPECT_EQ(issued, 1);
  EXPECT_EQ(core.status(), CoreStatus::Blocked);
  EXPECT_EQ(core.tick(1, s, accept), 0u);
  core.on_read_retired();
  EXPECT_NE(core.status(), CoreStatus::Blocked);
}

TEST(Core, PostedWritesKeepRunningUntilCreditsRunOut) {
  CoreParams p;
  p.write_credits = 2;
  Core core(0, p, ClockParams{});
  struct Writes final : RequestStream {
    std::uint32_t cores() const override { return 1; }
    std::optional<TraceRecord> next(std::uint32_t) override { return TraceRecord{0, AccessKind::Write, 0, 0}; }
  } s;
  int accepted = 0;
  core.tick(0, s, [&](const TraceRecord&, Cycle) { return ++accepted, true; });
  EXPECT_EQ(accepted, 2);
  EXPECT_EQ(core.write_buffer_credit(), 0u);
  core.on_write_retired();
  core.tick(1, s, [&](const TraceRecord&, Cycle) { return ++accepted, true; });
  EXPECT_EQ(accepted, 3);
}

TEST(Core, BackPressureStallsAndKeepsTheRequest) {
  Core core(0, CoreParams{}, ClockParams{});
  OneRecordStream s({0, AccessKind::Read, 0x40, 0});
  EXPECT_EQ(core.tick(0, s, [](const TraceRecord&, Cycle) { return false; }), 0u);
  Cycle gen = 99;
  core.tick(1, s, [&](const TraceRecord& r, Cycle g) {
    EXPECT_EQ(r.address, 0x40u);
    gen = g;
    return true;
  });
  EXPECT_EQ(gen, 0u);  // generated when first attempted
}

TEST(Core, IpcNeverExceedsPeak) {
  SystemConfig cfg;
  cfg.sim.measured_cycles = 200'000;
  SyntheticProfile p;
  p.mpki = 1;
  SyntheticStream s(p, cfg.geometry);
  Simulator sim(cfg, s);
  const RunStats& st = sim.run();
  for (auto n : st.core_instructions) EXPECT_LE(double(n), 2.5 * double(st.elapsed()));
}

TEST(Core, IdenticalCoresGetSymmetricIpc) {
  SystemConfig cfg;
  cfg.sim.warmup_requests = 20'000;
  cfg.sim.measured_requests = 400'000;
  SyntheticProfile p;
  SyntheticStream s(p, cfg.geometry);
  Simulator sim(cfg, s);
  const MetricsReport m = report(sim.run(), cfg.clock);
  ASSERT_TRUE(m.fairness);
  EXPECT_GE(*m.fairness, 0.95);
}

}  // namespace
}  // namespace mcsim
