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
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "mcsim/device.hpp"
#include "mcsim/page_policy.hpp"
#include "mcsim/request.hpp"
#include "mcsim/rl_scheduler.hpp"
#include "mcsim/scheduler.hpp"
#include "mcsim/stats.hpp"

namespace mcsim {

struct ControllerParams {
  std::uint32_t read_queue_size = 64;
  std::uint32_t write_queue_size = 64;
  std::uint32_t write_drain_high = 32;
  std::uint32_t write_drain_low = 16;
};

/// Per-channel front end: read/write queues, write-drain phases, scheduler
/// and page-policy arbitration, and data-burst completion.
class ChannelController {
 public:
  struct Completed {
    MemRequest request;
    Cycle completion;
  };

  ChannelController(std::uint32_t channel, const DramGeometry& geom, const TimingParams& timing,
                    const ControllerParams& params, const SchedulerParams& sched, const PagePolicyParams& page,
                    std::uint32_t cores)
      : channel_(channel),
        params_(params),
        device_(channel, geom, timing),
        policy_(page, geom.banks_per_channel()),
        scheduler_(make_scheduler(sched, cores)),
        bank_core_(geom.banks_per_channel()),
        bank_request_(geom.banks_per_channel(), kNoRequest),
        summary_(geom.banks_per_channel()) {
    reads_.reserve(params.read_queue_size);
    writes_.reserve(params.write_queue_size);
  }

  std::uint32_t channel() const { return channel_; }
  const ChannelDevice& device() const { return device_; }
  const PagePolicy& policy() const { return policy_; }
  Scheduler& scheduler() { return *scheduler_; }
  const Scheduler& scheduler() const { return *scheduler_; }
  const std::vector<MemRequest>& reads() const { return reads_; }
  const std::vector<MemRequest>& writes() const { return writes_; }
  Phase phase() const { return phase_; }
  std::size_t in_flight() const { return in_flight_.size(); }
  std::size_t pending() const { return reads_.size() + writes_.size() + in_flight_.size(); }
  std::uint64_t commands_issued() const { return commands_issued_; }

  /// Counters go to `stats` while it is non-null (the measurement window).
  void set_stats(ChannelStats* stats) { stats_ = stats; }
  void set_event_sink(EventSink* sink) { sink_ = sink; }

  bool can_accept(AccessKind kind) const {
    return kind == AccessKind::Read ? reads_.size() < params_.read_queue_size
                                    : writes_.size() < params_.write_queue_size;
  }

  /// Appends `r` with arrival = now. False means back-pressure.
  bool enqueue(MemRequest r, Cycle now) {
    if (!can_accept(r.kind)) return false;
    r.arrival = now;
    if (sink_) {
      Event e;
      e.kind = EventKind::Enqueue;
      e.cycle = now;
      e.channel = channel_;
      e.request_id = r.id;
      e.core = r.core;
      e.access = r.kind;
      e.address = r.address;
      sink_->on_event(e);
    }
    (r.is_read() ? reads_ : writes_).push_back(std::move(r));
    return true;
  }

  /// Write-drain hysteresis: enter WRITE-phase at the high mark, leave it at
  /// the low mark.
  Phase select_phase() {
    if (!scheduler_->uses_phases()) return phase_ = Phase::Read;
    if (phase_ == Phase::Read && writes_.size() >= params_.write_drain_high) phase_ = Phase::Write;
    else if (phase_ == Phase::Write && writes_.size() <= params_.write_drain_low) phase_ = Phase::Read;
    return phase_;
  }

  /// One memory cycle: issues at most one command. Column accesses chosen
  /// by the scheduler go first, then any PRECHARGE the page policy owes,
  /// then the scheduler's ACTIVATE/PRECHARGE.
  Command tick(Cycle now) {
    const Phase phase = select_phase();
    SchedulingContext ctx{device_, policy_, reads_, writes_, phase, now};
    scheduler_->on_cycle(ctx, bank_core_);
    Decision d = scheduler_->select(ctx);
    if (!is_column(d.command.kind)) {
      if (auto pre = policy_precharge(now)) d = {*pre, nullptr};
    }
    if (d.command.is_nop()) return d.command;
    apply(d, now);
    return d.command;
  }

  /// Moves requests whose data burst ends at or before `now` into `out`.
  void collect_completed(Cycle now, std::vector<Completed>& out) {
    while (!in_flight_.empty() && in_flight_.front().completion <= now) {
      Completed c = std::move(in_flight_.front());
      in_flight_.pop_front();
      const std::uint32_t b = device_.bank_index(c.request.coords.rank, c.request.coords.bank);
      if (bank_request_[b] == c.request.id) {
        bank_core_[b].reset();
        bank_request_[b] = kNoRequest;
      }
      out.push_back(std::move(c));
    }
  }

  /// End-of-cycle sampling of queue occupancy and data-bus activity.
  void sample(Cycle now) {
    while (!bursts_.empty() && bursts_.front().second <= now) bursts_.pop_front();
    if (!stats_) return;
    stats_->read_queue_integral += reads_.size();
    stats_->write_queue_integral += writes_.size();
    if (!bursts_.empty() && bursts_.front().first <= now) ++stats_->bus_busy_cycles;
  }

  /// Per-bank pending hit/conflict counts over the requests the scheduler
  /// may serve this cycle: the active queue of a phased scheduler, both
  /// queues otherwise. A write parked until the next drain does not hold a
  /// row open.
  const std::vector<BankQueueSummary>& summarize() {
    std::fill(summary_.begin(), summary_.end(), BankQueueSummary{});
    auto add = [&](const MemRequest& r) {
      const std::uint32_t b = device_.bank_index(r.coords.rank, r.coords.bank);
      const BankState& bs = device_.bank(b);
      if (!bs.active()) return;
      if (*bs.open_row == r.coords.row) ++summary_[b].pending_hits;
      else ++summary_[b].pending_conflicts;
    };
    const bool phased = scheduler_->uses_phases();
    if (!phased || phase_ == Phase::Read)
      for (const auto& r : reads_) add(r);
    if (!phased || phase_ == Phase::Write || reads_.empty())
      for (const auto& r : writes_) add(r);
    return summary_;
  }

 private:
  std::optional<Command> policy_precharge(Cycle now) {
    if (policy_.kind() == PagePolicyKind::Open) return std::nullopt;
    bool any_active = false;
    for (std::uint32_t b = 0; b < device_.bank_count() && !any_active; ++b) any_active = device_.bank(b).active();
    if (!any_active) return std::nullopt;
    const auto& summary = summarize();
    const std::uint32_t per_rank = device_.geometry().banks_per_rank;
    for (std::uint32_t b = 0; b < device_.bank_count(); ++b) {
      const BankState& bs = device_.bank(b);
      if (!bs.active()) continue;
      if (policy_.decide(b, bs, summary[b]) != PageDecision::PrechargeNow) continue;
      Command pre;
      pre.kind = CommandKind::Precharge;
      pre.channel = channel_;
      pre.rank = b / per_rank;
      pre.bank = b % per_rank;
      if (device_.can_issue(pre, now)) return pre;
    }
    return std::nullopt;
  }

  void apply(const Decision& d, Cycle now) {
    const Command& cmd = d.command;
    const IssueResult res = device_.issue(cmd, now);
    ++commands_issued_;
    const std::uint32_t b = device_.bank_index(cmd.rank, cmd.bank);
    if (sink_) {
      Event e;
      e.kind = EventKind::Command;
      e.cycle = now;
      e.channel = channel_;
      e.command = cmd;
      e.request_id = d.request ? d.request->id : kNoRequest;
      sink_->on_event(e);
    }
    if (cmd.kind == CommandKind::Activate && stats_) ++stats_->activations;
    if (cmd.kind == CommandKind::Precharge) {
      if (stats_) {
        ++stats_->precharges;
        if (res.closed_accesses > 0) ++stats_->activation_histogram[res.closed_accesses];
      }
      policy_.on_precharge(b, res.closed_row, res.closed_hits);
    }
    if (!d.request) return;

    auto& queue = d.request->is_read() ? reads_ : writes_;
    auto it = std::find_if(queue.begin(), queue.end(), [&](const MemRequest& r) { return r.id == d.request->id; });
    if (it == queue.end()) throw SimulationFault("issued command for a request not in its queue");
    MemRequest& r = *it;
    if (r.outcome == RowOutcome::Unknown) {
      r.outcome = is_column(cmd.kind) ? RowOutcome::Hit
                  : cmd.kind == CommandKind::Activate ? RowOutcome::Miss
                                                      : RowOutcome::Conflict;
    }
    bank_core_[b] = r.core;
    bank_request_[b] = r.id;
    if (!is_column(cmd.kind)) return;

    if (stats_) {
      ++stats_->column_accesses;
      switch (r.outcome) {
        case RowOutcome::Hit: ++stats_->row_hits; break;
        case RowOutcome::Miss: ++stats_->row_misses; break;
        case RowOutcome::Conflict: ++stats_->row_conflicts; break;
        case RowOutcome::Unknown: break;
      }
    }
    r.issue_complete = res.data_complete;
    const Cycle start = res.data_complete - device_.timing().burst_cycles;
    bursts_.emplace_back(start, res.data_complete);
    in_flight_.push_back({std::move(r), res.data_complete});
    queue.erase(it);
  }

  std::uint32_t channel_;
  ControllerParams params_;
  ChannelDevice device_;
  PagePolicy policy_;
  std::unique_ptr<Scheduler> scheduler_;
  std::vector<MemRequest> reads_;
  std::vector<MemRequest> writes_;
  std::deque<Completed> in_flight_;
  std::deque<std::pair<Cycle, Cycle>> bursts_;
  Phase phase_ = Phase::Read;
  std::vector<std::optional<std::uint32_t>> bank_core_;
  std::vector<std::uint64_t> bank_request_;
  std::vector<BankQueueSummary> summary_;
  ChannelStats* stats_ = nullptr;
  EventSink* sink_ = nullptr;
  std::uint64_t commands_issued_ = 0;
};

}  // namespace mcsim
