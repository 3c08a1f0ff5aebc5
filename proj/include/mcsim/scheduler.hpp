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
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mcsim/device.hpp"
#include "mcsim/page_policy.hpp"
#include "mcsim/request.hpp"
#include "mcsim/rl.hpp"

namespace mcsim {

enum class Phase : std::uint8_t { Read, Write };

enum class SchedulerKind : std::uint8_t { Fcfs, FcfsBanks, FrFcfs, ParBs, Atlas, Rl };

inline constexpr std::string_view to_string(SchedulerKind k) {
  switch (k) {
    case SchedulerKind::Fcfs: return "FCFS";
    case SchedulerKind::FcfsBanks: return "FCFS_BANKS";
    case SchedulerKind::FrFcfs: return "FR_FCFS";
    case SchedulerKind::ParBs: return "PAR_BS";
    case SchedulerKind::Atlas: return "ATLAS";
    case SchedulerKind::Rl: return "RL";
  }
  return "?";
}

inline std::optional<SchedulerKind> parse_scheduler(std::string_view name) {
  for (auto k : {SchedulerKind::Fcfs, SchedulerKind::FcfsBanks, SchedulerKind::FrFcfs, SchedulerKind::ParBs,
                 SchedulerKind::Atlas, SchedulerKind::Rl}) {
    if (name == to_string(k)) return k;
  }
  if (name == "FR-FCFS") return SchedulerKind::FrFcfs;
  if (name == "PAR-BS") return SchedulerKind::ParBs;
  if (name == "FCFS_banks") return SchedulerKind::FcfsBanks;
  return std::nullopt;
}

struct ParBsParams {
  std::uint32_t batching_cap = 5;
  bool cap_per_bank = true;  ///< cap applies per (core, bank); false: per core
};

struct AtlasParams {
  Cycle quantum = 10'000'000;
  double alpha = 0.875;
  Cycle starvation_threshold = 50'000;
  /// false: total = alpha*quantum + (1-alpha)*total; true: alpha weights history.
  bool alpha_weights_history = false;
};

struct SchedulerParams {
  SchedulerKind kind = SchedulerKind::FrFcfs;
  ParBsParams parbs;
  AtlasParams atlas;
  rl::RlParams rl;
};

/// What a scheduler sees of its channel each cycle. Queues are in arrival
/// order.
struct SchedulingContext {
  const ChannelDevice& device;
  const PagePolicy& policy;
  std::span<MemRequest> reads;
  std::span<MemRequest> writes;
  Phase phase = Phase::Read;
  Cycle now = 0;

  /// Queue the phased schedulers draw from: writes in WRITE-phase, and in
  /// READ-phase only while no read is waiting.
  std::span<MemRequest> active_queue() const {
    if (phase == Phase::Write) return writes;
    return reads.empty() ? writes : reads;
  }
};

/// A command and the request it makes progress on (none for NOP or a
/// policy-initiated PRECHARGE).
struct Decision {
  Command command;
  const MemRequest* request = nullptr;
};

/// Next command needed to serve `r` given current bank state, or none when
/// the bank will not accept a column access until the page policy closes it.
inline std::optional<Command> next_command(const MemRequest& r, const ChannelDevice& dev, const PagePolicy& policy) {
  const BankState& b = dev.bank(r.coords.rank, r.coords.bank);
  Command c;
  c.channel = r.coords.channel;
  c.rank = r.coords.rank;
  c.bank = r.coords.bank;
  if (!b.active()) {
    c.kind = CommandKind::Activate;
    c.row = r.coords.row;
  } else if (*b.open_row == r.coords.row) {
    if (policy.blocks_column_access(b)) return std::nullopt;
    c.kind = r.is_read() ? CommandKind::Read : CommandKind::Write;
    c.column = r.coords.column_block;
  } else {
    c.kind = CommandKind::Precharge;
  }
  return c;
}

inline bool would_hit(const MemRequest& r, const ChannelDevice& dev, const PagePolicy& policy) {
  const BankState& b = dev.bank(r.coords.rank, r.coords.bank);
  return b.active() && *b.open_row == r.coords.row && !policy.blocks_column_access(b);
}

/// Decision interface shared by every scheduling algorithm.
class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual SchedulerKind kind() const = 0;
  /// False when the scheduler sees both queues every cycle and ignores
  /// read/write phases.
  virtual bool uses_phases() const { return true; }
  /// Called once per cycle before select. `bank_core` holds, per bank, the
  /// core whose request the bank is currently serving.
  virtual void on_cycle(const SchedulingContext&, std::span<const std::optional<std::uint32_t>> /*bank_core*/) {}
  virtual Decision select(const SchedulingContext& ctx) = 0;
};

/// Lexicographic priority; smaller is served first.
using PriorityKey = std::array<std::uint64_t, 5>;

namespace detail {

struct Candidate {
  MemRequest* request;
  Command command;
  bool legal;
  bool hit;
};

/// Picks the best legal command among `visible` under `key(request, hit)`.
/// A PRECHARGE is withheld while a higher-priority request still wants the
/// open row it would close.
template <class KeyFn>
Decision select_by_priority(const SchedulingContext& ctx, std::span<MemRequest* const> visible, KeyFn&& key) {
  thread_local std::vector<Candidate> scratch;
  // Legality of a request's next command depends only on its bank and kind.
  thread_local std::vector<std::int8_t> legal;
  scratch.clear();
  legal.assign(std::size_t{ctx.device.bank_count()} * 5, -1);
  for (MemRequest* r : visible) {
    auto cmd = next_command(*r, ctx.device, ctx.policy);
    if (!cmd) continue;
    const bool hit = is_column(cmd->kind);
    std::int8_t& ok = legal[ctx.device.bank_index(cmd->rank, cmd->bank) * 5 + static_cast<std::size_t>(cmd->kind)];
    if (ok < 0) ok = ctx.device.can_issue(*cmd, ctx.now);
    scratch.push_back({r, *cmd, ok == 1, hit});
  }
  const std::span<const Candidate> cands(scratch);
  std::uint64_t withheld_banks = 0;  // bitmask; geometry keeps banks per channel small
  for (;;) {
    const Candidate* best = nullptr;
    PriorityKey best_key{};
    for (const Candidate& c : cands) {
      if (!c.legal) continue;
      const std::uint32_t flat = ctx.device.bank_index(c.command.rank, c.command.bank);
      if (c.command.kind == CommandKind::Precharge && flat < 64 && (withheld_banks >> flat & 1)) continue;
      PriorityKey k = key(*c.request, c.hit);
      if (!best || k < best_key) {
        best = &c;
        best_key = k;
      }
    }
    if (!best) return {};
    if (best->command.kind != CommandKind::Precharge) return {best->command, best->request};
    bool protected_row = false;
    for (const Candidate& c : cands) {
      if (c.hit && c.command.rank == best->command.rank && c.command.bank == best->command.bank &&
          key(*c.request, true) < best_key) {
        protected_row = true;
        break;
      }
    }
    if (!protected_row) return {best->command, best->request};
    const std::uint32_t flat = ctx.device.bank_index(best->command.rank, best->command.bank);
    if (flat >= 64) return {};
    withheld_banks |= std::uint64_t{1} << flat;
  }
}

inline void fill_pointers(std::vector<MemRequest*>& out, std::span<MemRequest> q) {
  out.clear();
  for (auto& r : q) out.push_back(&r);
}

inline PriorityKey age_key(const MemRequest& r) { return {r.arrival, r.id, 0, 0, 0}; }

}  // namespace detail

/// Serves the single oldest request of the active queue; never reorders.
class FcfsScheduler final : public Scheduler {
 public:
  SchedulerKind kind() const override { return SchedulerKind::Fcfs; }
  Decision select(const SchedulingContext& ctx) override {
    auto q = ctx.active_queue();
    if (q.empty()) return {};
    MemRequest* head = &q.front();
    auto cmd = next_command(*head, ctx.device, ctx.policy);
    if (!cmd || !ctx.device.can_issue(*cmd, ctx.now)) return {};
    return {*cmd, head};
  }
};

/// Per-bank FIFO: only each bank's oldest request competes; oldest ready
/// head wins.
class FcfsBanksScheduler final : public Scheduler {
 public:
  SchedulerKind kind() const override { return SchedulerKind::FcfsBanks; }
  Decision select(const SchedulingContext& ctx) override {
    auto q = ctx.active_queue();
    if (q.empty()) return {};
    heads_.clear();
    seen_.assign(ctx.device.bank_count(), false);
    for (auto& r : q) {
      const std::uint32_t b = ctx.device.bank_index(r.coords.rank, r.coords.bank);
      if (seen_[b]) continue;
      seen_[b] = true;
      heads_.push_back(&r);
    }
    return detail::select_by_priority(ctx, heads_, [](const MemRequest& r, bool) { return detail::age_key(r); });
  }

 private:
  std::vector<MemRequest*> heads_;
  std::vector<bool> seen_;
};

/// Row hits first, then oldest.
class FrFcfsScheduler final : public Scheduler {
 public:
  SchedulerKind kind() const override { return SchedulerKind::FrFcfs; }
  Decision select(const SchedulingContext& ctx) override {
    auto q = ctx.active_queue();
    if (q.empty()) return {};
    detail::fill_pointers(visible_, q);
    return detail::select_by_priority(ctx, visible_, [](const MemRequest& r, bool hit) {
      return PriorityKey{hit ? 0u : 1u, r.arrival, r.id, 0, 0};
    });
  }

 private:
  std::vector<MemRequest*> visible_;
};

/// Batches the oldest requests per core (and bank), ranks cores shortest job
/// first, and serves batched before unbatched requests. Writes are marked
/// like reads, so a batch that holds writes stays open until a drain serves
/// them.
class ParBsScheduler final : public Scheduler {
 public:
  ParBsScheduler(const ParBsParams& p, std::uint32_t cores) : params_(p), rank_(cores, 0) {}

  SchedulerKind kind() const override { return SchedulerKind::ParBs; }

  Decision select(const SchedulingContext& ctx) override {
    maybe_form_batch(ctx);
    auto q = ctx.active_queue();
    if (q.empty()) return {};
    detail::fill_pointers(visible_, q);
    return detail::select_by_priority(ctx, visible_, [this](const MemRequest& r, bool hit) {
      return PriorityKey{r.batched ? 0u : 1u, core_rank(r.core), hit ? 0u : 1u, r.arrival, r.id};
    });
  }

  /// Rank position of `core` in the current batch; 0 is served first.
  std::uint32_t core_rank(std::uint32_t core) const { return core < rank_.size() ? rank_[core] : 0; }
  std::uint64_t batches_formed() const { return batches_; }
  Cycle max_batch_duration() const { return max_batch_duration_; }
  std::size_t batch_size() const { return batch_size_; }

  /// Forms a new batch when no queued request is batched. Exposed for tests;
  /// select() calls it every cycle.
  void maybe_form_batch(const SchedulingContext& ctx) {
    auto marked = [](const MemRequest& r) { return r.batched; };
    if (std::any_of(ctx.reads.begin(), ctx.reads.end(), marked) ||
        std::any_of(ctx.writes.begin(), ctx.writes.end(), marked))
      return;
    if (open_batch_) {
      max_batch_duration_ = std::max(max_batch_duration_, ctx.now - batch_start_);
      open_batch_ = false;
    }
    if (ctx.reads.empty() && ctx.writes.empty()) return;

    // Both queues are in arrival order; merge them so the oldest are marked first.
    by_age_.clear();
    for (auto& r : ctx.reads) by_age_.push_back(&r);
    for (auto& r : ctx.writes) by_age_.push_back(&r);
    std::inplace_merge(by_age_.begin(), by_age_.begin() + std::ptrdiff_t(ctx.reads.size()), by_age_.end(),
                       [](const MemRequest* a, const MemRequest* b) { return detail::age_key(*a) < detail::age_key(*b); });

    const std::uint32_t banks = ctx.device.bank_count();
    const std::size_t cores = rank_.size();
    std::vector<std::uint32_t> per_core_bank(cores * banks, 0);
    std::vector<std::uint32_t> per_core(cores, 0);
    batch_size_ = 0;
    for (MemRequest* p : by_age_) {
      MemRequest& r = *p;
      if (r.core >= cores) continue;
      const std::uint32_t b = ctx.device.bank_index(r.coords.rank, r.coords.bank);
      std::uint32_t& slot = params_.cap_per_bank ? per_core_bank[r.core * banks + b] : per_core[r.core];
      if (slot >= params_.batching_cap) continue;
      ++slot;
      if (!params_.cap_per_bank) ++per_core_bank[r.core * banks + b];
      r.batched = true;
      ++batch_size_;
    }
    // Shortest job first: lower max per-bank load, then lower total load.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> load(cores, {0, 0});
    for (std::size_t c = 0; c < cores; ++c) {
      for (std::uint32_t b = 0; b < banks; ++b) {
        load[c].first = std::max(load[c].first, per_core_bank[c * banks + b]);
        load[c].second += per_core_bank[c * banks + b];
      }
    }
    std::vector<std::size_t> order(cores);
    for (std::size_t i = 0; i < cores; ++i) order[i] = i;
    auto empty = [&](std::size_t c) { return load[c].second == 0; };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (empty(a) != empty(b)) return !empty(a);
      return load[a] < load[b];
    });
    std::uint32_t pos = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (i > 0 && load[order[i]] != load[order[i - 1]]) pos = static_cast<std::uint32_t>(i);
      rank_[order[i]] = pos;
    }
    ++batches_;
    batch_start_ = ctx.now;
    open_batch_ = true;
  }

 private:
  ParBsParams params_;
  std::vector<std::uint32_t> rank_;
  std::vector<MemRequest*> visible_;
  std::vector<MemRequest*> by_age_;
  std::uint64_t batches_ = 0;
  std::size_t batch_size_ = 0;
  bool open_batch_ = false;
  Cycle batch_start_ = 0;
  Cycle max_batch_duration_ = 0;
};

/// Least-attained-service ranking recomputed every quantum, with a
/// starvation override.
class AtlasScheduler final : public Scheduler {
 public:
  AtlasScheduler(const AtlasParams& p, std::uint32_t cores)
      : params_(p), attained_(cores, 0), total_(cores, 0.0), rank_(cores, 0) {}

  SchedulerKind kind() const override { return SchedulerKind::Atlas; }

  void on_cycle(const SchedulingContext& ctx, std::span<const std::optional<std::uint32_t>> bank_core) override {
    tick(ctx.now, bank_core);
  }

  /// Adds one cycle of bank service and closes the quantum on its boundary.
  void tick(Cycle now, std::span<const std::optional<std::uint32_t>> bank_core) {
    if (now > 0 && params_.quantum > 0 && now % params_.quantum == 0) end_quantum(now);
    for (const auto& c : bank_core) {
      if (c && *c < attained_.size()) ++attained_[*c];
    }
  }

  void end_quantum(Cycle now) {
    const double a = params_.alpha;
    for (std::size_t c = 0; c < total_.size(); ++c) {
      const double cur = double(attained_[c]);
      total_[c] = params_.alpha_weights_history ? (1 - a) * cur + a * total_[c] : a * cur + (1 - a) * total_[c];
      attained_[c] = 0;
    }
    std::vector<std::size_t> order(total_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return total_[x] < total_[y]; });
    std::vector<std::uint32_t> next(rank_.size(), 0);
    std::uint32_t pos = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (i > 0 && total_[order[i]] != total_[order[i - 1]]) pos = static_cast<std::uint32_t>(i);
      next[order[i]] = pos;
    }
    if (next != rank_) {
      rank_ = std::move(next);
      rank_changes_.push_back(now);
    }
  }

  Decision select(const SchedulingContext& ctx) override {
    auto q = ctx.active_queue();
    if (q.empty()) return {};
    detail::fill_pointers(visible_, q);
    const Cycle now = ctx.now;
    const Cycle limit = params_.starvation_threshold;
    return detail::select_by_priority(ctx, visible_, [this, now, limit](const MemRequest& r, bool hit) {
      if (now - r.arrival > limit) return PriorityKey{0, r.arrival, r.id, 0, 0};
      return PriorityKey{1, core_rank(r.core), hit ? 0u : 1u, r.arrival, r.id};
    });
  }

  std::uint32_t core_rank(std::uint32_t core) const { return core < rank_.size() ? rank_[core] : 0; }
  const std::vector<std::uint64_t>& attained_service() const { return attained_; }
  const std::vector<double>& total_service() const { return total_; }
  const std::vector<std::uint32_t>& rank_order() const { return rank_; }
  /// Cycles at which the ranking actually changed.
  const std::vector<Cycle>& rank_changes() const { return rank_changes_; }

 private:
  AtlasParams params_;
  std::vector<std::uint64_t> attained_;
  std::vector<double> total_;
  std::vector<std::uint32_t> rank_;
  std::vector<Cycle> rank_changes_;
  std::vector<MemRequest*> visible_;
};

}  // namespace mcsim
