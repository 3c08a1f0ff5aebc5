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

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include "mcsim/rl.hpp"
#include "mcsim/scheduler.hpp"

namespace mcsim {

/// Quantized controller state the RL scheduler conditions on.
struct RlFeatures {
  std::uint32_t read_queue = 0;
  std::uint32_t write_queue = 0;
  std::uint32_t row_hits = 0;  ///< queued requests whose next command is a column access

  friend bool operator==(const RlFeatures&, const RlFeatures&) = default;
};

inline constexpr std::uint32_t kRlBucketWidth = 4;
inline constexpr std::uint32_t kRlBuckets = 16;

inline std::uint32_t rl_quantize(std::uint32_t count) {
  return std::min(count / kRlBucketWidth, kRlBuckets - 1);
}

/// Raw counts; quantize() maps them to buckets.
inline RlFeatures rl_features(const SchedulingContext& ctx) {
  RlFeatures f;
  f.read_queue = static_cast<std::uint32_t>(ctx.reads.size());
  f.write_queue = static_cast<std::uint32_t>(ctx.writes.size());
  for (const auto& r : ctx.reads) f.row_hits += would_hit(r, ctx.device, ctx.policy);
  for (const auto& r : ctx.writes) f.row_hits += would_hit(r, ctx.device, ctx.policy);
  return f;
}

inline RlFeatures quantize(const RlFeatures& f) {
  return {rl_quantize(f.read_queue), rl_quantize(f.write_queue), rl_quantize(f.row_hits)};
}

/// Greedy tie-break order over action kinds.
inline std::uint32_t rl_kind_order(CommandKind k) {
  switch (k) {
    case CommandKind::Read: return 0;
    case CommandKind::Write: return 1;
    case CommandKind::Activate: return 2;
    case CommandKind::Precharge: return 3;
    case CommandKind::Nop: return 4;
  }
  return 5;
}

/// Packs a quantized state and an action description into one key.
inline std::uint64_t rl_key(const RlFeatures& q, CommandKind kind, bool bank_open, bool oldest) {
  const std::uint64_t state = q.read_queue | (q.write_queue << 4) | (q.row_hits << 8);
  const std::uint64_t action = static_cast<std::uint64_t>(kind) | (std::uint64_t{bank_open} << 3) |
                               (std::uint64_t{oldest} << 4);
  return (state << 8) | action;
}

/// Self-optimizing scheduler: epsilon-greedy SARSA over legal commands of
/// both queues, with a reward for every data-bus transfer.
class RlScheduler final : public Scheduler {
 public:
  RlScheduler(const rl::RlParams& p) : params_(p), learner_(p) {}

  SchedulerKind kind() const override { return SchedulerKind::Rl; }
  bool uses_phases() const override { return false; }

  Decision select(const SchedulingContext& ctx) override {
    const RlFeatures q = quantize(rl_features(ctx));
    const MemRequest* oldest = nullptr;
    for (auto* queue : {&ctx.reads, &ctx.writes}) {
      for (auto& r : *queue) {
        if (!oldest || r.older_than(*oldest)) oldest = &r;
      }
    }

    for (auto& b : by_kind_) b.clear();
    legal_.assign(std::size_t{ctx.device.bank_count()} * 5, -1);
    std::size_t total = 0;
    for (auto* queue : {&ctx.reads, &ctx.writes}) {
      for (auto& r : *queue) {
        auto cmd = next_command(r, ctx.device, ctx.policy);
        if (!cmd) continue;
        std::int8_t& ok = legal_[ctx.device.bank_index(cmd->rank, cmd->bank) * 5 + static_cast<std::size_t>(cmd->kind)];
        if (ok < 0) ok = ctx.device.can_issue(*cmd, ctx.now);
        if (ok != 1) continue;
        by_kind_[rl_kind_order(cmd->kind)].push_back({*cmd, &r});
        ++total;
      }
    }
    // Candidates in (kind order, age) order. Several requests can share one
    // command (e.g. ACT of a common row); keep the first, which is the oldest.
    auto older = [](const Decision& a, const Decision& b) { return a.request->older_than(*b.request); };
    std::size_t slots = 16;
    while (slots < 2 * total) slots *= 2;
    seen_.assign(slots, kEmptySlot);
    cands_.clear();
    for (auto& bucket : by_kind_) {
      if (!std::is_sorted(bucket.begin(), bucket.end(), older)) std::sort(bucket.begin(), bucket.end(), older);
      for (const Decision& d : bucket) {
        const Command& c = d.command;
        std::size_t h = rl::splitmix64(static_cast<std::uint64_t>(c.kind) ^ (std::uint64_t{c.rank} << 4) ^
                                   (std::uint64_t{c.bank} << 12) ^ (c.row << 24) ^
                                   (std::uint64_t{c.column} * 0x9e3779b97f4a7c15ULL)) &
                        (slots - 1);
        bool dup = false;
        for (; seen_[h] != kEmptySlot; h = (h + 1) & (slots - 1)) {
          if (cands_[seen_[h]].command == c) {
            dup = true;
            break;
          }
        }
        if (dup) continue;
        seen_[h] = static_cast<std::uint32_t>(cands_.size());
        cands_.push_back(d);
      }
    }
    cands_.push_back({Command::nop(), nullptr});

    auto key_of = [&](const Decision& d) {
      const bool open = d.command.is_nop() ? false : ctx.device.bank(d.command.rank, d.command.bank).active();
      return rl_key(q, d.command.kind, open, d.request != nullptr && d.request == oldest);
    };

    Decision chosen;
    if (oldest && ctx.now - oldest->arrival > params_.starvation_threshold) {
      chosen = {Command::nop(), nullptr};
      auto cmd = next_command(*oldest, ctx.device, ctx.policy);
      if (cmd && ctx.device.can_issue(*cmd, ctx.now)) chosen = {*cmd, oldest};
      ++forced_;
    } else {
      keys_.clear();
      for (const auto& d : cands_) keys_.push_back(key_of(d));
      chosen = cands_[learner_.choose(keys_)];
    }
    learner_.step(key_of(chosen), is_column(chosen.command.kind) ? params_.column_reward : 0.0);
    return chosen;
  }

  const rl::Learner& learner() const { return learner_; }
  rl::Learner& learner() { return learner_; }
  std::uint64_t forced_decisions() const { return forced_; }

 private:
  rl::RlParams params_;
  rl::Learner learner_;
  std::vector<Decision> cands_;
  std::vector<std::uint64_t> keys_;
  std::vector<std::int8_t> legal_;
  static constexpr std::uint32_t kEmptySlot = ~std::uint32_t{0};
  std::array<std::vector<Decision>, 4> by_kind_;
  std::vector<std::uint32_t> seen_;
  std::uint64_t forced_ = 0;
};

inline std::unique_ptr<Scheduler> make_scheduler(const SchedulerParams& p, std::uint32_t cores) {
  switch (p.kind) {
    case SchedulerKind::Fcfs: return std::make_unique<FcfsScheduler>();
    case SchedulerKind::FcfsBanks: return std::make_unique<FcfsBanksScheduler>();
    case SchedulerKind::FrFcfs: return std::make_unique<FrFcfsScheduler>();
    case SchedulerKind::ParBs: return std::make_unique<ParBsScheduler>(p.parbs, cores);
    case SchedulerKind::Atlas: return std::make_unique<AtlasScheduler>(p.atlas, cores);
    case SchedulerKind::Rl: return std::make_unique<RlScheduler>(p.rl);
  }
  return nullptr;
}

}  // namespace mcsim
