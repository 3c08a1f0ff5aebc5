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
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <vector>

#include "mcsim/geometry.hpp"
#include "mcsim/request.hpp"
#include "mcsim/types.hpp"

namespace mcsim {

inline constexpr std::uint64_t kNoRequest = ~std::uint64_t{0};

enum class EventKind : std::uint8_t { Enqueue, Command, Retire, WindowStart, WindowEnd };

/// Everything the controller does that a metric depends on. Streams as one
/// CSV-ish line per event (see write_event).
struct Event {
  EventKind kind = EventKind::Command;
  Cycle cycle = 0;
  std::uint32_t channel = 0;
  Command command;                      ///< Command
  std::uint64_t request_id = kNoRequest;  ///< Enqueue/Retire, Command on behalf of a request
  std::uint32_t core = 0;
  AccessKind access = AccessKind::Read;
  std::uint64_t address = 0;
  Cycle arrival = 0;    ///< Retire
  Cycle generated = 0;  ///< Retire
};

class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void on_event(const Event& e) = 0;
};

class VectorEventSink final : public EventSink {
 public:
  void on_event(const Event& e) override { events.push_back(e); }
  std::vector<Event> events;
};

/// Event log line format:
///   E,cycle,channel,request_id,core,R|W,address_hex
///   C,cycle,channel,ACT|PRE|RD|WR,rank,bank,row,column,request_id|-
///   X,cycle,channel,request_id,core,R|W,arrival,generated
///   M,cycle          measurement window opens
///   F,cycle          measurement window closes
inline void write_event(std::ostream& os, const Event& e) {
  const char* rw = e.access == AccessKind::Read ? "R" : "W";
  switch (e.kind) {
    case EventKind::Enqueue:
      os << "E," << e.cycle << ',' << e.channel << ',' << e.request_id << ',' << e.core << ',' << rw << ",0x"
         << std::hex << e.address << std::dec << '\n';
      break;
    case EventKind::Command:
      os << "C," << e.cycle << ',' << e.channel << ',' << to_string(e.command.kind) << ',' << e.command.rank << ','
         << e.command.bank << ',' << e.command.row << ',' << e.command.column << ',';
      if (e.request_id == kNoRequest) os << '-';
      else os << e.request_id;
      os << '\n';
      break;
    case EventKind::Retire:
      os << "X," << e.cycle << ',' << e.channel << ',' << e.request_id << ',' << e.core << ',' << rw << ','
         << e.arrival << ',' << e.generated << '\n';
      break;
    case EventKind::WindowStart: os << "M," << e.cycle << '\n'; break;
    case EventKind::WindowEnd: os << "F," << e.cycle << '\n'; break;
  }
}

class StreamEventSink final : public EventSink {
 public:
  explicit StreamEventSink(std::ostream& os) : os_(os) {}
  void on_event(const Event& e) override { write_event(os_, e); }

 private:
  std::ostream& os_;
};

/// Raw counters for one channel over the measurement window.
struct ChannelStats {
  std::uint64_t column_accesses = 0;
  std::uint64_t row_hits = 0;
  std::uint64_t row_misses = 0;
  std::uint64_t row_conflicts = 0;
  std::uint64_t activations = 0;
  std::uint64_t precharges = 0;
  /// accesses-per-activation -> number of closed activations with that count
  std::map<std::uint32_t, std::uint64_t> activation_histogram;
  std::uint64_t reads_retired = 0;
  std::uint64_t writes_retired = 0;
  std::uint64_t read_latency_sum = 0;
  std::uint64_t write_drain_latency_sum = 0;
  std::uint64_t write_posted_latency_sum = 0;
  Cycle max_read_latency = 0;
  std::uint64_t read_queue_integral = 0;
  std::uint64_t write_queue_integral = 0;
  std::uint64_t bus_busy_cycles = 0;

  void merge(const ChannelStats& o) {
    column_accesses += o.column_accesses;
    row_hits += o.row_hits;
    row_misses += o.row_misses;
    row_conflicts += o.row_conflicts;
    activations += o.activations;
    precharges += o.precharges;
    for (auto [k, v] : o.activation_histogram) activation_histogram[k] += v;
    reads_retired += o.reads_retired;
    writes_retired += o.writes_retired;
    read_latency_sum += o.read_latency_sum;
    write_drain_latency_sum += o.write_drain_latency_sum;
    write_posted_latency_sum += o.write_posted_latency_sum;
    max_read_latency = std::max(max_read_latency, o.max_read_latency);
    read_queue_integral += o.read_queue_integral;
    write_queue_integral += o.write_queue_integral;
    bus_busy_cycles += o.bus_busy_cycles;
  }
};

/// Accumulated counters behind every reported metric.
struct RunStats {
  std::vector<ChannelStats> channels;
  std::vector<std::uint64_t> core_instructions;
  std::vector<Cycle> core_max_wait;
  Cycle window_start = 0;
  Cycle window_end = 0;

  RunStats() = default;
  RunStats(std::size_t n_channels, std::size_t n_cores)
      : channels(n_channels), core_instructions(n_cores, 0), core_max_wait(n_cores, 0) {}

  Cycle elapsed() const { return window_end - window_start; }

  ChannelStats aggregate() const {
    ChannelStats all;
    for (const auto& c : channels) all.merge(c);
    return all;
  }
};

/// Derived metrics of one channel, or of all channels together. Metrics
/// with an empty denominator are absent rather than zero.
struct ChannelReport {
  ChannelStats raw;
  std::optional<double> hit_rate;
  std::optional<double> avg_read_latency;         ///< memory cycles
  std::optional<double> avg_write_posted_latency;  ///< memory cycles
  std::optional<double> avg_write_drain_latency;   ///< memory cycles
  std::optional<double> single_access_fraction;
  std::optional<double> avg_read_queue;
  std::optional<double> avg_write_queue;
  std::optional<double> bus_utilization;
  std::optional<double> bandwidth_gbps;
};

struct MetricsReport {
  Cycle elapsed_cycles = 0;
  double cpu_per_mem_cycle = 2.5;
  double ns_per_mem_cycle = 1.25;
  std::vector<ChannelReport> channels;
  ChannelReport aggregate;
  std::optional<double> user_ipc;
  std::vector<std::optional<double>> core_ipc;
  std::optional<double> ipc_min;
  std::optional<double> ipc_max;
  std::optional<double> fairness;  ///< min / max per-core IPC
  Cycle max_wait = 0;
};

namespace detail {

inline std::optional<double> ratio(double num, double den) {
  if (den == 0) return std::nullopt;
  return num / den;
}

inline ChannelReport channel_report(const ChannelStats& s, Cycle elapsed, std::uint32_t channel_count,
                                    double peak_gbps_per_channel) {
  ChannelReport r;
  r.raw = s;
  r.hit_rate = ratio(double(s.row_hits), double(s.column_accesses));
  r.avg_read_latency = ratio(double(s.read_latency_sum), double(s.reads_retired));
  r.avg_write_posted_latency = ratio(double(s.write_posted_latency_sum), double(s.writes_retired));
  r.avg_write_drain_latency = ratio(double(s.write_drain_latency_sum), double(s.writes_retired));
  std::uint64_t closed = 0;
  for (auto [k, v] : s.activation_histogram) closed += v;
  auto one = s.activation_histogram.find(1);
  r.single_access_fraction = ratio(one == s.activation_histogram.end() ? 0.0 : double(one->second), double(closed));
  r.avg_read_queue = ratio(double(s.read_queue_integral), double(elapsed));
  r.avg_write_queue = ratio(double(s.write_queue_integral), double(elapsed));
  r.bus_utilization = ratio(double(s.bus_busy_cycles), double(elapsed) * channel_count);
  if (r.bus_utilization) r.bandwidth_gbps = *r.bus_utilization * peak_gbps_per_channel * channel_count;
  return r;
}

}  // namespace detail

/// Turns raw counters into the reported metrics. Utilization is the busy
/// fraction of the data bus; bandwidth is that fraction of the nominal peak.
inline MetricsReport report(const RunStats& stats, const ClockParams& clock) {
  MetricsReport m;
  const Cycle elapsed = stats.elapsed();
  m.elapsed_cycles = elapsed;
  m.cpu_per_mem_cycle = clock.cpu_per_mem_cycle();
  m.ns_per_mem_cycle = 1000.0 / clock.mem_clock_mhz;
  for (const auto& c : stats.channels)
    m.channels.push_back(detail::channel_report(c, elapsed, 1, clock.peak_bandwidth_gbps));
  m.aggregate = detail::channel_report(stats.aggregate(), elapsed, static_cast<std::uint32_t>(stats.channels.size()),
                                       clock.peak_bandwidth_gbps);
  // Aggregate queue lengths are totals across channels.
  const double cpu_cycles = double(elapsed) * m.cpu_per_mem_cycle;
  std::uint64_t total_instr = 0;
  for (std::size_t i = 0; i < stats.core_instructions.size(); ++i) {
    total_instr += stats.core_instructions[i];
    m.core_ipc.push_back(detail::ratio(double(stats.core_instructions[i]), cpu_cycles));
  }
  m.user_ipc = detail::ratio(double(total_instr), cpu_cycles);
  if (!m.core_ipc.empty() && m.core_ipc.front()) {
    double lo = *m.core_ipc.front(), hi = lo;
    for (const auto& v : m.core_ipc) {
      lo = std::min(lo, *v);
      hi = std::max(hi, *v);
    }
    m.ipc_min = lo;
    m.ipc_max = hi;
    m.fairness = detail::ratio(lo, hi);
  }
  for (Cycle w : stats.core_max_wait) m.max_wait = std::max(m.max_wait, w);
  return m;
}

}  // namespace mcsim
