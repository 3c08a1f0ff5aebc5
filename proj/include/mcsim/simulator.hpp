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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mcsim/addressing.hpp"
#include "mcsim/controller.hpp"
#include "mcsim/stats.hpp"
#include "mcsim/workload.hpp"

namespace mcsim {

/// Measurement window and livelock guard.
struct SimParams {
  std::uint64_t warmup_requests = 0;
  /// The window closes at the retirement that reaches this count.
  std::optional<std::uint64_t> measured_requests;
  /// The window closes this many cycles after it opens.
  std::optional<Cycle> measured_cycles;
  /// Fault if requests are pending but nothing issues or retires for this long.
  Cycle watchdog_cycles = 1'000'000;
};

/// Everything that shapes the simulated machine, minus the workload.
struct SystemConfig {
  DramGeometry geometry;
  TimingParams timing;
  ClockParams clock;
  MappingScheme mapping = MappingScheme::RoRaBaCoCh;
  ControllerParams controller;
  SchedulerParams scheduler;
  PagePolicyParams page_policy;
  CoreParams core;
  SimParams sim;

  void validate() const {
    geometry.validate();
    timing.validate();
    clock.validate();
    core.validate();
    if (controller.read_queue_size == 0) throw ConfigError("controller.read_queue_size", "must be positive");
    if (controller.write_queue_size == 0) throw ConfigError("controller.write_queue_size", "must be positive");
    if (controller.write_drain_high > controller.write_queue_size)
      throw ConfigError("controller.write_drain_high", "must not exceed write_queue_size");
    if (controller.write_drain_low >= controller.write_drain_high)
      throw ConfigError("controller.write_drain_low", "must be below write_drain_high");
    if (scheduler.parbs.batching_cap == 0) throw ConfigError("scheduler.batching_cap", "must be positive");
    if (scheduler.atlas.quantum == 0) throw ConfigError("scheduler.quantum", "must be positive");
    if (!(scheduler.atlas.alpha >= 0 && scheduler.atlas.alpha <= 1))
      throw ConfigError("scheduler.alpha", "must be in [0,1]");
    const auto& rl = scheduler.rl;
    if (rl.num_tables == 0) throw ConfigError("scheduler.rl_tables", "must be positive");
    if (rl.table_size == 0) throw ConfigError("scheduler.rl_table_size", "must be positive");
    if (!(rl.epsilon >= 0 && rl.epsilon <= 1)) throw ConfigError("scheduler.rl_epsilon", "must be in [0,1]");
    if (page_policy.abpp_entries == 0) throw ConfigError("page_policy.abpp_entries", "must be positive");
    if (page_policy.rbpp_registers == 0) throw ConfigError("page_policy.rbpp_registers", "must be positive");
    if (sim.measured_requests && *sim.measured_requests == 0)
      throw ConfigError("run.measured_requests", "must be positive");
    if (sim.measured_cycles && *sim.measured_cycles == 0) throw ConfigError("run.measured_cycles", "must be positive");
    if (sim.watchdog_cycles == 0) throw ConfigError("run.watchdog_cycles", "must be positive");
  }
};

/// Cycle loop tying cores, controllers and the measurement window together.
///
/// Each memory cycle: retire finished bursts (channel order), tick cores
/// (core order), tick controllers (channel order), then sample occupancy.
/// Warmup counts retirements; the window opens at the retirement that
/// completes warmup and closes when the measurement budget is spent or
/// every core has finished its stream and all queues are empty.
class Simulator {
 public:
  Simulator(const SystemConfig& cfg, RequestStream& stream)
      : cfg_(cfg), stream_(stream), stats_(cfg.geometry.channels, stream.cores()) {
    cfg_.validate();
    for (std::uint32_t ch = 0; ch < cfg.geometry.channels; ++ch) {
      SchedulerParams sp = cfg.scheduler;
      sp.rl.seed = rl::splitmix64(cfg.scheduler.rl.seed + ch);
      controllers_.emplace_back(ch, cfg.geometry, cfg.timing, cfg.controller, sp, cfg.page_policy, stream.cores());
    }
    for (std::uint32_t c = 0; c < stream.cores(); ++c) cores_.emplace_back(c, cfg.core, cfg.clock);
  }

  void set_event_sink(EventSink* sink) {
    sink_ = sink;
    for (auto& c : controllers_) c.set_event_sink(sink);
  }

  /// Runs to the end of the window. Throws SimulationFault on livelock.
  const RunStats& run() {
    if (cfg_.sim.warmup_requests == 0) open_window(0);
    Cycle last_progress = 0;
    std::vector<ChannelController::Completed> done;
    for (now_ = 0;; ++now_) {
      if (window_open_ && cfg_.sim.measured_cycles && now_ - stats_.window_start >= *cfg_.sim.measured_cycles) {
        close_window(now_);
        break;
      }
      bool progress = false;
      for (auto& ctl : controllers_) {
        done.clear();
        ctl.collect_completed(now_, done);
        for (auto& c : done) {
          progress = true;
          retire(ctl.channel(), c);
          if (finished_) return stats_;
        }
      }
      for (auto& core : cores_) {
        const std::uint64_t n = core.tick(now_, stream_, [&](const TraceRecord& r, Cycle generated) {
          return issue(r, generated);
        });
        if (window_open_) stats_.core_instructions[core.id()] += n;
      }
      for (auto& ctl : controllers_) {
        if (!ctl.tick(now_).is_nop()) progress = true;
      }
      for (auto& ctl : controllers_) ctl.sample(now_);

      if (progress || !any_pending()) last_progress = now_;
      if (all_idle()) {
        if (!window_open_) open_window(now_ + 1);
        close_window(now_ + 1);
        break;
      }
      if (now_ - last_progress > cfg_.sim.watchdog_cycles) {
        throw SimulationFault("no command issued or request retired for " + std::to_string(cfg_.sim.watchdog_cycles) +
                              " cycles at cycle " + std::to_string(now_));
      }
    }
    return stats_;
  }

  const RunStats& stats() const { return stats_; }
  const std::vector<ChannelController>& controllers() const { return controllers_; }
  std::vector<ChannelController>& controllers() { return controllers_; }
  const std::vector<Core>& cores() const { return cores_; }
  std::uint64_t retired() const { return retired_; }
  std::uint64_t requests_issued() const { return next_id_; }
  Cycle now() const { return now_; }

 private:
  bool issue(const TraceRecord& rec, Cycle generated) {
    const DramCoordinates coords = decode(rec.address, cfg_.mapping, cfg_.geometry);
    auto& ctl = controllers_[coords.channel];
    if (!ctl.can_accept(rec.kind)) return false;
    MemRequest r;
    r.id = next_id_++;
    r.core = rec.core;
    r.kind = rec.kind;
    r.address = rec.address;
    r.coords = coords;
    r.generated = generated;
    ctl.enqueue(std::move(r), now_);
    return true;
  }

  void retire(std::uint32_t channel, const ChannelController::Completed& c) {
    const MemRequest& r = c.request;
    if (r.is_read()) cores_[r.core].on_read_retired();
    else cores_[r.core].on_write_retired();
    if (sink_) {
      Event e;
      e.kind = EventKind::Retire;
      e.cycle = now_;
      e.channel = channel;
      e.request_id = r.id;
      e.core = r.core;
      e.access = r.kind;
      e.arrival = r.arrival;
      e.generated = r.generated;
      sink_->on_event(e);
    }
    ++retired_;
    if (!window_open_) {
      if (retired_ == cfg_.sim.warmup_requests) open_window(now_);
      return;
    }
    ChannelStats& s = stats_.channels[channel];
    const Cycle latency = c.completion - r.arrival;
    if (r.is_read()) {
      ++s.reads_retired;
      s.read_latency_sum += latency;
      s.max_read_latency = std::max(s.max_read_latency, latency);
    } else {
      ++s.writes_retired;
      s.write_drain_latency_sum += latency;
      s.write_posted_latency_sum += r.arrival - r.generated;
    }
    stats_.core_max_wait[r.core] = std::max(stats_.core_max_wait[r.core], latency);
    ++measured_;
    if (cfg_.sim.measured_requests && measured_ == *cfg_.sim.measured_requests) {
      close_window(now_);
      finished_ = true;
    }
  }

  void open_window(Cycle at) {
    window_open_ = true;
    stats_.window_start = at;
    for (std::uint32_t ch = 0; ch < controllers_.size(); ++ch) controllers_[ch].set_stats(&stats_.channels[ch]);
    mark(EventKind::WindowStart, at);
  }

  void close_window(Cycle at) {
    stats_.window_end = at;
    for (auto& ctl : controllers_) ctl.set_stats(nullptr);
    mark(EventKind::WindowEnd, at);
  }

  void mark(EventKind k, Cycle at) {
    if (!sink_) return;
    Event e;
    e.kind = k;
    e.cycle = at;
    sink_->on_event(e);
  }

  bool any_pending() const {
    for (const auto& ctl : controllers_)
      if (ctl.pending() != 0) return true;
    return false;
  }

  bool all_idle() const {
    for (const auto& c : cores_)
      if (c.status() != CoreStatus::Finished) return false;
    for (const auto& ctl : controllers_)
      if (ctl.pending() != 0) return false;
    return true;
  }

  SystemConfig cfg_;
  RequestStream& stream_;
  RunStats stats_;
  std::vector<ChannelController> controllers_;
  std::vector<Core> cores_;
  EventSink* sink_ = nullptr;
  Cycle now_ = 0;
  std::uint64_t next_id_ = 0;
  std::uint64_t retired_ = 0;
  std::uint64_t measured_ = 0;
  bool window_open_ = false;
  bool finished_ = false;
};

}  // namespace mcsim
