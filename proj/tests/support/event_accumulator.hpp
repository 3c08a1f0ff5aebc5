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
#include <map>
#include <unordered_map>
#include <vector>

#include "mcsim/geometry.hpp"
#include "mcsim/stats.hpp"

namespace mcsim::testing {

/// Rebuilds the measurement-window counters from an event log alone.
/// Core instruction counts are not in the log and are left at zero.
class EventAccumulator {
 public:
  EventAccumulator(std::uint32_t channels, std::uint32_t cores, const TimingParams& t)
      : t_(t), stats_(channels, cores), queues_(channels), bursts_(channels), bank_accesses_(channels) {}

  void consume(const std::vector<Event>& log) {
    for (const Event& e : log) step(e);
  }

  /// Counters as the simulator should have reported them.
  RunStats result() const {
    RunStats s = stats_;
    const Cycle start = s.window_start, end = s.window_end;
    for (std::size_t ch = 0; ch < queues_.size(); ++ch) {
      // Occupancy after the last event of cycle c is what cycle c samples.
      auto integrate = [&](const std::vector<std::pair<Cycle, int>>& deltas) {
        std::map<Cycle, long> at;
        for (auto [c, d] : deltas) at[c] += d;
        std::uint64_t sum = 0;
        long level = 0;
        auto it = at.begin();
        for (Cycle c = 0; c < end; ++c) {
          while (it != at.end() && it->first <= c) level += (it++)->second;
          if (c >= start) sum += static_cast<std::uint64_t>(level);
        }
        return sum;
      };
      s.channels[ch].read_queue_integral = integrate(queues_[ch].reads);
      s.channels[ch].write_queue_integral = integrate(queues_[ch].writes);
      std::vector<bool> busy(end > start ? end - start : 0, false);
      for (const auto& [b0, b1] : bursts_[ch]) {
        for (Cycle c = std::max(b0, start); c < std::min(b1, end); ++c) busy[c - start] = true;
      }
      s.channels[ch].bus_busy_cycles = static_cast<std::uint64_t>(std::count(busy.begin(), busy.end(), true));
    }
    return s;
  }

 private:
  struct Queues {
    std::vector<std::pair<Cycle, int>> reads, writes;
  };

  void step(const Event& e) {
    switch (e.kind) {
      case EventKind::WindowStart:
        in_window_ = true;
        stats_.window_start = e.cycle;
        return;
      case EventKind::WindowEnd:
        in_window_ = false;
        stats_.window_end = e.cycle;
        return;
      case EventKind::Enqueue:
        kind_[e.request_id] = e.access;
        (e.access == AccessKind::Read ? queues_[e.channel].reads : queues_[e.channel].writes)
            .emplace_back(e.cycle, +1);
        return;
      case EventKind::Retire: {
        if (!in_window_) return;
        ChannelStats& s = stats_.channels[e.channel];
        const Cycle latency = e.cycle - e.arrival;
        if (e.access == AccessKind::Read) {
          ++s.reads_retired;
          s.read_latency_sum += latency;
          s.max_read_latency = std::max(s.max_read_latency, latency);
        } else {
          ++s.writes_retired;
          s.write_drain_latency_sum += latency;
          s.write_posted_latency_sum += e.arrival - e.generated;
        }
        stats_.core_max_wait[e.core] = std::max(stats_.core_max_wait[e.core], latency);
        return;
      }
      case EventKind::Command:
        command(e);
        return;
    }
  }

  void command(const Event& e) {
    const Command& c = e.command;
    ChannelStats& s = stats_.channels[e.channel];
    const std::uint64_t bank = (std::uint64_t{c.rank} << 32) | c.bank;
    if (e.request_id != kNoRequest && !first_.count(e.request_id)) first_[e.request_id] = c.kind;
    switch (c.kind) {
      case CommandKind::Activate:
        bank_accesses_[e.channel][bank] = 0;
        if (in_window_) ++s.activations;
        break;
      case CommandKind::Precharge: {
        const std::uint32_t n = bank_accesses_[e.channel][bank];
        if (in_window_) {
          ++s.precharges;
          if (n > 0) ++s.activation_histogram[n];
        }
        break;
      }
      case CommandKind::Read:
      case CommandKind::Write: {
        ++bank_accesses_[e.channel][bank];
        const Cycle start = e.cycle + t_.tCAS;
        bursts_[e.channel].emplace_back(start, start + t_.burst_cycles);
        auto& q = kind_.at(e.request_id) == AccessKind::Read ? queues_[e.channel].reads : queues_[e.channel].writes;
        q.emplace_back(e.cycle, -1);
        if (in_window_) {
          ++s.column_accesses;
          const CommandKind first = first_.at(e.request_id);
          if (first == CommandKind::Activate) ++s.row_misses;
          else if (first == CommandKind::Precharge) ++s.row_conflicts;
          else ++s.row_hits;
        }
        first_.erase(e.request_id);
        break;
      }
      case CommandKind::Nop:
        break;
    }
  }

  TimingParams t_;
  RunStats stats_;
  bool in_window_ = false;
  std::vector<Queues> queues_;
  std::vector<std::vector<std::pair<Cycle, Cycle>>> bursts_;
  std::vector<std::map<std::uint64_t, std::uint32_t>> bank_accesses_;
  std::unordered_map<std::uint64_t, AccessKind> kind_;
  std::unordered_map<std::uint64_t, CommandKind> first_;
};

}  // namespace mcsim::testing
