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

#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "mcsim/config.hpp"
#include "mcsim/simulator.hpp"
#include "mcsim/stats.hpp"
#include "mcsim/workload.hpp"

namespace mcsim {

/// Owns whatever backs a run's request stream.
struct Workload {
  std::vector<TraceRecord> records;
  std::unique_ptr<RequestStream> stream;
};

inline Workload make_workload(const RunConfig& cfg) {
  Workload w;
  if (cfg.trace_path) {
    w.records = load_trace(*cfg.trace_path);
    std::uint32_t cores = 1;
    for (const auto& r : w.records) cores = std::max(cores, r.core + 1);
    w.stream = std::make_unique<TraceStream>(w.records, cores);
  } else {
    w.stream = std::make_unique<SyntheticStream>(cfg.synthetic, cfg.system.geometry);
  }
  return w;
}

/// Outcome of one configuration: metrics, or the error that stopped it.
struct CellResult {
  std::string cell;
  std::vector<std::pair<std::string, std::string>> axes;
  ConfigMap config;
  std::string config_hash;
  std::optional<MetricsReport> report;
  std::string error;
};

inline MetricsReport run_config(const RunConfig& cfg, EventSink* sink = nullptr) {
  Workload w = make_workload(cfg);
  Simulator sim(cfg.system, *w.stream);
  sim.set_event_sink(sink);
  return report(sim.run(), cfg.system.clock);
}

/// Resolves and runs one configuration, capturing failures in the result.
inline CellResult run_cell(const ConfigMap& m, std::string cell, const std::string& event_log = "") {
  CellResult r;
  r.cell = std::move(cell);
  r.config = m;
  r.config_hash = config_hash(m);
  try {
    const RunConfig cfg = m.resolve();
    if (event_log.empty()) {
      r.report = run_config(cfg);
    } else {
      std::ofstream log(event_log);
      if (!log) throw std::runtime_error("cannot open event log " + event_log);
      StreamEventSink sink(log);
      r.report = run_config(cfg, &sink);
    }
  } catch (const ConfigError& e) {
    r.error = "config error [" + e.key() + "]: " + e.what();
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

namespace csv {

/// Column names of the metrics CSV. This list is the contract with
/// downstream tooling: append new columns, never rename or reorder.
inline constexpr std::array kHeader = {
    "cell",
    "config_hash",
    "workload",
    "scheduler",
    "page_policy",
    "channels",
    "mapping",
    "seed",
    "scope",
    "status",
    "error",
    "elapsed_cycles",
    "column_accesses",
    "row_hits",
    "row_misses",
    "row_conflicts",
    "hit_rate",
    "activations",
    "closed_activations",
    "single_access_activations",
    "single_access_fraction",
    "reads_retired",
    "writes_retired",
    "avg_read_latency_mem_cycles",
    "avg_read_latency_cpu_cycles",
    "avg_read_latency_ns",
    "max_read_latency_mem_cycles",
    "avg_write_posted_latency_mem_cycles",
    "avg_write_drain_latency_mem_cycles",
    "avg_read_queue",
    "avg_write_queue",
    "bus_busy_cycles",
    "bus_utilization",
    "bandwidth_gbps",
    "user_ipc",
    "ipc_min",
    "ipc_max",
    "fairness",
    "max_wait_mem_cycles",
    "norm_user_ipc",
    "norm_hit_rate",
    "norm_avg_read_latency",
    "norm_avg_read_queue",
    "norm_avg_write_queue",
    "norm_bus_utilization",
    "norm_single_access_fraction",
};

inline std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

inline std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

inline std::optional<double> norm(const std::optional<double>& v, const std::optional<double>& base) {
  if (!v || !base || *base == 0) return std::nullopt;
  return *v / *base;
}

inline std::string workload_label(const ConfigMap& m) {
  const std::string& trace = m.get("workload.trace");
  if (!trace.empty()) return "trace:" + std::filesystem::path(trace).filename().string();
  return "synthetic";
}

/// Aggregate row first, then one row per channel. `baseline` supplies the
/// normalized columns and may be the cell itself.
inline void write_cell(std::ostream& os, const CellResult& r, const CellResult* baseline) {
  const std::vector<std::string> id = {quote(r.cell),
                                       r.config_hash,
                                       quote(workload_label(r.config)),
                                       r.config.get("scheduler.name"),
                                       r.config.get("page_policy.name"),
                                       r.config.get("dram.channels"),
                                       r.config.get("dram.mapping"),
                                       r.config.get("run.seed")};
  auto emit = [&](const std::string& scope, const ChannelReport* ch, const ChannelReport* base_ch, bool aggregate) {
    std::vector<std::string> f = id;
    f.push_back(scope);
    f.push_back(r.report ? "ok" : "error");
    f.push_back(quote(r.error));
    if (!r.report) {
      f.resize(kHeader.size());
    } else {
      const MetricsReport& m = *r.report;
      const ChannelStats& s = ch->raw;
      std::uint64_t closed = 0;
      for (auto [k, v] : s.activation_histogram) closed += v;
      const auto single = s.activation_histogram.count(1) ? s.activation_histogram.at(1) : 0;
      auto scaled = [](const std::optional<double>& v, double k) {
        return v ? std::optional<double>(*v * k) : std::nullopt;
      };
      f.push_back(std::to_string(m.elapsed_cycles));
      f.push_back(std::to_string(s.column_accesses));
      f.push_back(std::to_string(s.row_hits));
      f.push_back(std::to_string(s.row_misses));
      f.push_back(std::to_string(s.row_conflicts));
      f.push_back(fmt(ch->hit_rate));
      f.push_back(std::to_string(s.activations));
      f.push_back(std::to_string(closed));
      f.push_back(std::to_string(single));
      f.push_back(fmt(ch->single_access_fraction));
      f.push_back(std::to_string(s.reads_retired));
      f.push_back(std::to_string(s.writes_retired));
      f.push_back(fmt(ch->avg_read_latency));
      f.push_back(fmt(scaled(ch->avg_read_latency, m.cpu_per_mem_cycle)));
      f.push_back(fmt(scaled(ch->avg_read_latency, m.ns_per_mem_cycle)));
      f.push_back(std::to_string(s.max_read_latency));
      f.push_back(fmt(ch->avg_write_posted_latency));
      f.push_back(fmt(ch->avg_write_drain_latency));
      f.push_back(fmt(ch->avg_read_queue));
      f.push_back(fmt(ch->avg_write_queue));
      f.push_back(std::to_string(s.bus_busy_cycles));
      f.push_back(fmt(ch->bus_utilization));
      f.push_back(fmt(ch->bandwidth_gbps));
      const MetricsReport* b = baseline && baseline->report ? &*baseline->report : nullptr;
      if (aggregate) {
        f.push_back(fmt(m.user_ipc));
        f.push_back(fmt(m.ipc_min));
        f.push_back(fmt(m.ipc_max));
        f.push_back(fmt(m.fairness));
        f.push_back(std::to_string(m.max_wait));
        f.push_back(fmt(b ? norm(m.user_ipc, b->user_ipc) : std::nullopt));
      } else {
        f.resize(f.size() + 6);
      }
      if (base_ch) {
        f.push_back(fmt(norm(ch->hit_rate, base_ch->hit_rate)));
        f.push_back(fmt(norm(ch->avg_read_latency, base_ch->avg_read_latency)));
        f.push_back(fmt(norm(ch->avg_read_queue, base_ch->avg_read_queue)));
        f.push_back(fmt(norm(ch->avg_write_queue, base_ch->avg_write_queue)));
        f.push_back(fmt(norm(ch->bus_utilization, base_ch->bus_utilization)));
        f.push_back(fmt(norm(ch->single_access_fraction, base_ch->single_access_fraction)));
      }
      f.resize(kHeader.size());
    }
    for (std::size_t i = 0; i < f.size(); ++i) os << (i ? "," : "") << f[i];
    os << '\n';
  };
  const MetricsReport* b = baseline && baseline->report ? &*baseline->report : nullptr;
  if (!r.report) {
    emit("aggregate", nullptr, nullptr, true);
    return;
  }
  emit("aggregate", &r.report->aggregate, b ? &b->aggregate : nullptr, true);
  for (std::size_t ch = 0; ch < r.report->channels.size(); ++ch) {
    const ChannelReport* bc = b && ch < b->channels.size() ? &b->channels[ch] : nullptr;
    emit("ch" + std::to_string(ch), &r.report->channels[ch], bc, false);
  }
}

inline void write_header(std::ostream& os) {
  for (std::size_t i = 0; i < kHeader.size(); ++i) os << (i ? "," : "") << kHeader[i];
  os << '\n';
}

}  // namespace csv

/// One sweep dimension: a configuration key and the values it takes.
struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

/// Parses `key=v1,v2,...`.
inline SweepAxis parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(spec, "axis must be key=v1,v2,...");
  SweepAxis a;
  a.key = ConfigMap::canonical_key(spec.substr(0, eq));
  std::string rest = spec.substr(eq + 1);
  std::size_t start = 0;
  while (start <= rest.size()) {
    const auto comma = rest.find(',', start);
    std::string v = rest.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (v.empty()) throw ConfigError(a.key, "empty axis value");
    a.values.push_back(ConfigMap::canonical_value(a.key, v));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return a;
}

/// Parses `key=value[,key=value...]` naming the baseline cell.
inline std::vector<std::pair<std::string, std::string>> parse_baseline(const std::string& spec) {
  std::vector<std::pair<std::string, std::string>> out;
  if (spec.empty()) return out;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto comma = spec.find(',', start);
    const std::string part = spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw ConfigError(part, "baseline must be key=value[,key=value]");
    const std::string key = ConfigMap::canonical_key(part.substr(0, eq));
    out.emplace_back(key, ConfigMap::canonical_value(key, part.substr(eq + 1)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string cell_name(const std::vector<std::pair<std::string, std::string>>& axes) {
  if (axes.empty()) return "baseline";
  std::string out;
  for (const auto& [k, v] : axes) out += (out.empty() ? "" : ",") + k + "=" + v;
  return out;
}

struct SweepResult {
  std::vector<CellResult> cells;
  /// For each cell, the index of the cell it is normalized against.
  std::vector<std::optional<std::size_t>> baseline_of;

  void write_csv(std::ostream& os) const {
    csv::write_header(os);
    for (std::size_t i = 0; i < cells.size(); ++i)
      csv::write_cell(os, cells[i], baseline_of[i] ? &cells[*baseline_of[i]] : nullptr);
  }
};

/// Runs the Cartesian product of `axes` over `base`. A cell's baseline is
/// the cell that agrees with it on every axis except those fixed by
/// `baseline` (axis key -> value). Cells run on `jobs` threads; results do
/// not depend on the thread count.
inline SweepResult sweep(const ConfigMap& base, const std::vector<SweepAxis>& axes,
                         const std::vector<std::pair<std::string, std::string>>& baseline, unsigned jobs = 1) {
  for (const auto& [k, v] : baseline) {
    bool known = false;
    for (const auto& a : axes) {
      if (a.key != k) continue;
      known = true;
      if (std::find(a.values.begin(), a.values.end(), v) == a.values.end())
        throw ConfigError(k, "baseline value '" + v + "' is not on the axis");
    }
    if (!known) throw ConfigError(k, "baseline names a key that is not a sweep axis");
  }
  for (const auto& a : axes) base.get(a.key);

  std::vector<std::vector<std::size_t>> combos(1);
  for (const auto& a : axes) {
    std::vector<std::vector<std::size_t>> next;
    for (const auto& c : combos) {
      for (std::size_t i = 0; i < a.values.size(); ++i) {
        next.push_back(c);
        next.back().push_back(i);
      }
    }
    combos = std::move(next);
  }

  SweepResult out;
  out.cells.resize(combos.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < combos.size();) {
      ConfigMap m = base;
      std::vector<std::pair<std::string, std::string>> assigned;
      for (std::size_t a = 0; a < axes.size(); ++a) {
        const std::string& v = axes[a].values[combos[i][a]];
        assigned.emplace_back(axes[a].key, v);
      }
      try {
        for (const auto& [k, v] : assigned) m.set(k, v);
        out.cells[i] = run_cell(m, cell_name(assigned));
      } catch (const ConfigError& e) {
        out.cells[i].cell = cell_name(assigned);
        out.cells[i].config = base;
        out.cells[i].error = "config error [" + e.key() + "]: " + e.what();
      }
      out.cells[i].axes = assigned;
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(combos.size())));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  out.baseline_of.resize(out.cells.size());
  for (std::size_t i = 0; i < out.cells.size(); ++i) {
    auto want = out.cells[i].axes;
    for (auto& [k, v] : want) {
      for (const auto& [bk, bv] : baseline)
        if (bk == k) v = bv;
    }
    for (std::size_t j = 0; j < out.cells.size(); ++j) {
      if (out.cells[j].axes == want) {
        out.baseline_of[i] = j;
        break;
      }
    }
  }
  return out;
}

struct CalibrationResult {
  double row_locality = 0;
  double achieved = 0;  ///< measured single-access activation fraction
  bool within_tolerance = false;
  std::vector<std::pair<double, double>> probes;  ///< (row_locality, fraction)
};

/// Single-access activation fraction of `m` with the given locality under
/// the open-adaptive policy.
inline double single_access_fraction(ConfigMap m, double row_locality) {
  m.set("page_policy.name", "OA_PM");
  m.set("workload.row_locality", csv::fmt(row_locality));
  const MetricsReport r = run_config(m.resolve());
  return r.aggregate.single_access_fraction.value_or(0.0);
}

/// Bisects row_locality until the single-access fraction is within
/// `tolerance` of `target`. The fraction falls as locality rises. An
/// unreachable target yields the nearest probe.
inline CalibrationResult calibrate(const ConfigMap& base, double target, double tolerance = 0.02,
                                   int max_iterations = 24) {
  if (!(target > 0 && target < 1)) throw ConfigError("target_single_access", "must be in (0,1)");
  CalibrationResult best;
  double best_err = INFINITY;
  auto probe = [&](double loc) {
    const double f = single_access_fraction(base, loc);
    best.probes.emplace_back(loc, f);
    if (std::abs(f - target) < best_err) {
      best_err = std::abs(f - target);
      best.row_locality = loc;
      best.achieved = f;
    }
    return f;
  };
  double lo = 0.0, hi = 1.0;
  const double f_lo = probe(lo);
  const double f_hi = probe(hi);
  if (target <= f_lo && target >= f_hi) {
    for (int i = 0; i < max_iterations && best_err > tolerance / 4; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (probe(mid) > target) lo = mid;
      else hi = mid;
    }
  }
  best.within_tolerance = best_err <= tolerance;
  return best;
}

}  // namespace mcsim
