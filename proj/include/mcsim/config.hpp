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

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mcsim/addressing.hpp"
#include "mcsim/page_policy.hpp"
#include "mcsim/scheduler.hpp"
#include "mcsim/simulator.hpp"
#include "mcsim/workload.hpp"

namespace mcsim {

/// A fully resolved run: machine, workload and seed.
struct RunConfig {
  SystemConfig system;
  /// When set, the workload is this trace; otherwise `synthetic`.
  std::optional<std::string> trace_path;
  SyntheticProfile synthetic;
  std::uint64_t seed = 1;
};

/// Flat `section.key -> value` view of a configuration. Every key has a
/// default, so the canonical form (and its hash) always lists the complete
/// resolved configuration.
class ConfigMap {
 public:
  ConfigMap() { reset_defaults(); }

  static ConfigMap from_file(const std::string& path) {
    ConfigMap m;
    boost::property_tree::ptree pt;
    try {
      boost::property_tree::ini_parser::read_ini(path, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError("", std::string("cannot read config: ") + e.what());
    }
    for (const auto& [section, body] : pt) {
      if (body.empty()) throw ConfigError(section, "top-level keys must live inside a [section]");
      for (const auto& [key, value] : body) m.set(section + "." + key, value.data());
    }
    if (auto it = m.values_.find("workload.trace"); it != m.values_.end() && !it->second.empty()) {
      std::filesystem::path p(it->second);
      if (p.is_relative()) it->second = (std::filesystem::path(path).parent_path() / p).lexically_normal().string();
    }
    return m;
  }

  /// Applies `section.key=value`. Sweep shorthands `scheduler`,
  /// `page_policy`, `channels` and `mapping` are accepted as keys.
  void apply_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw ConfigError(std::string(assignment), "override must be key=value");
    set(std::string(assignment.substr(0, eq)), std::string(assignment.substr(eq + 1)));
  }

  void set(std::string key, std::string value) {
    key = canonical_key(trim(key));
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(key, "unknown configuration key");
    it->second = canonical_value(key, trim(value));
  }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(canonical_key(key));
    if (it == values_.end()) throw ConfigError(key, "unknown configuration key");
    return it->second;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

  /// Sorted `key=value` lines.
  std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
  }

  static std::string canonical_key(const std::string& key) {
    if (key == "scheduler") return "scheduler.name";
    if (key == "page_policy") return "page_policy.name";
    if (key == "channels") return "dram.channels";
    if (key == "mapping") return "dram.mapping";
    return key;
  }

  RunConfig resolve() const;

  /// Spelling-normalized value, so aliases hash and compare equal.
  static std::string canonical_value(const std::string& key, const std::string& v) {
    if (key == "scheduler.name") {
      if (auto k = parse_scheduler(v)) return std::string(to_string(*k));
    } else if (key == "page_policy.name") {
      if (auto k = parse_page_policy(v)) return std::string(to_string(*k));
    }
    return v;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\"");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r\"") - b + 1);
  }

  void reset_defaults();

  std::map<std::string, std::string> values_;
};

namespace detail {

template <class T>
std::string num(T v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

inline std::uint64_t parse_u64(const ConfigMap& m, const std::string& key) {
  const std::string& s = m.get(key);
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw ConfigError(key, "expected a non-negative integer, got '" + s + "'");
  return v;
}

inline std::uint32_t parse_u32(const ConfigMap& m, const std::string& key) {
  const std::uint64_t v = parse_u64(m, key);
  if (v > UINT32_MAX) throw ConfigError(key, "value too large");
  return static_cast<std::uint32_t>(v);
}

inline std::optional<std::uint64_t> parse_opt_u64(const ConfigMap& m, const std::string& key) {
  if (m.get(key).empty()) return std::nullopt;
  return parse_u64(m, key);
}

inline double parse_double(const ConfigMap& m, const std::string& key) {
  const std::string& s = m.get(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw ConfigError(key, "expected a number, got '" + s + "'");
}

inline bool parse_bool(const ConfigMap& m, const std::string& key) {
  const std::string& s = m.get(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + s + "'");
}

}  // namespace detail

inline void ConfigMap::reset_defaults() {
  using detail::num;
  const RunConfig d;
  const auto& s = d.system;
  values_ = {
      {"run.seed", num(d.seed)},
      {"run.warmup_requests", num(s.sim.warmup_requests)},
      {"run.measured_requests", ""},
      {"run.measured_cycles", ""},
      {"run.watchdog_cycles", num(s.sim.watchdog_cycles)},
      {"dram.channels", num(s.geometry.channels)},
      {"dram.ranks_per_channel", num(s.geometry.ranks_per_channel)},
      {"dram.banks_per_rank", num(s.geometry.banks_per_rank)},
      {"dram.rows_per_bank", num(s.geometry.rows_per_bank)},
      {"dram.row_buffer_bytes", num(s.geometry.row_buffer_bytes)},
      {"dram.cache_block_bytes", num(s.geometry.cache_block_bytes)},
      {"dram.data_bus_bytes_per_mem_cycle", num(s.geometry.data_bus_bytes_per_mem_cycle)},
      {"dram.mapping", std::string(to_string(s.mapping))},
      {"dram.mem_clock_mhz", num(s.clock.mem_clock_mhz)},
      {"dram.cpu_clock_mhz", num(s.clock.cpu_clock_mhz)},
      {"dram.peak_bandwidth_gbps", num(s.clock.peak_bandwidth_gbps)},
      {"timing.tCAS", num(s.timing.tCAS)},
      {"timing.tRCD", num(s.timing.tRCD)},
      {"timing.tRP", num(s.timing.tRP)},
      {"timing.tRAS", num(s.timing.tRAS)},
      {"timing.tRC", num(s.timing.tRC)},
      {"timing.tWR", num(s.timing.tWR)},
      {"timing.tWTR", num(s.timing.tWTR)},
      {"timing.tRTP", num(s.timing.tRTP)},
      {"timing.tRRD", num(s.timing.tRRD)},
      {"timing.tFAW", num(s.timing.tFAW)},
      {"timing.burst_cycles", num(s.timing.burst_cycles)},
      {"timing.bus_turnaround_cycles", num(s.timing.bus_turnaround_cycles)},
      {"controller.read_queue_size", num(s.controller.read_queue_size)},
      {"controller.write_queue_size", num(s.controller.write_queue_size)},
      {"controller.write_drain_high", num(s.controller.write_drain_high)},
      {"controller.write_drain_low", num(s.controller.write_drain_low)},
      {"scheduler.name", std::string(to_string(s.scheduler.kind))},
      {"scheduler.batching_cap", num(s.scheduler.parbs.batching_cap)},
      {"scheduler.batching_cap_per_bank", s.scheduler.parbs.cap_per_bank ? "true" : "false"},
      {"scheduler.quantum", num(s.scheduler.atlas.quantum)},
      {"scheduler.alpha", num(s.scheduler.atlas.alpha)},
      {"scheduler.starvation_threshold", num(s.scheduler.atlas.starvation_threshold)},
      {"scheduler.alpha_weights_history", s.scheduler.atlas.alpha_weights_history ? "true" : "false"},
      {"scheduler.rl_tables", num(s.scheduler.rl.num_tables)},
      {"scheduler.rl_table_size", num(s.scheduler.rl.table_size)},
      {"scheduler.rl_alpha", num(s.scheduler.rl.alpha)},
      {"scheduler.rl_gamma", num(s.scheduler.rl.gamma)},
      {"scheduler.rl_epsilon", num(s.scheduler.rl.epsilon)},
      {"scheduler.rl_starvation_threshold", num(s.scheduler.rl.starvation_threshold)},
      {"scheduler.rl_column_reward", num(s.scheduler.rl.column_reward)},
      {"page_policy.name", std::string(to_string(s.page_policy.kind))},
      {"page_policy.abpp_entries", num(s.page_policy.abpp_entries)},
      {"page_policy.rbpp_registers", num(s.page_policy.rbpp_registers)},
      {"page_policy.rbpp_cumulative", s.page_policy.rbpp_cumulative ? "true" : "false"},
      {"core.ipc_peak", num(s.core.ipc_peak)},
      {"core.max_outstanding_reads", num(s.core.max_outstanding_reads)},
      {"core.write_credits", num(s.core.write_credits)},
      {"workload.trace", ""},
      {"workload.cores", num(d.synthetic.cores)},
      {"workload.mpki", num(d.synthetic.mpki)},
      {"workload.read_fraction", num(d.synthetic.read_fraction)},
      {"workload.row_locality", num(d.synthetic.row_locality)},
      {"workload.address_space_bytes", num(d.synthetic.address_space_bytes)},
  };
}

/// Builds and validates a RunConfig. Errors name the offending key.
inline RunConfig ConfigMap::resolve() const {
  using namespace detail;
  RunConfig c;
  auto& s = c.system;
  c.seed = parse_u64(*this, "run.seed");
  s.sim.warmup_requests = parse_u64(*this, "run.warmup_requests");
  s.sim.measured_requests = parse_opt_u64(*this, "run.measured_requests");
  s.sim.measured_cycles = parse_opt_u64(*this, "run.measured_cycles");
  s.sim.watchdog_cycles = parse_u64(*this, "run.watchdog_cycles");

  auto& g = s.geometry;
  g.channels = parse_u32(*this, "dram.channels");
  g.ranks_per_channel = parse_u32(*this, "dram.ranks_per_channel");
  g.banks_per_rank = parse_u32(*this, "dram.banks_per_rank");
  g.rows_per_bank = parse_u64(*this, "dram.rows_per_bank");
  g.row_buffer_bytes = parse_u32(*this, "dram.row_buffer_bytes");
  g.cache_block_bytes = parse_u32(*this, "dram.cache_block_bytes");
  g.data_bus_bytes_per_mem_cycle = parse_u32(*this, "dram.data_bus_bytes_per_mem_cycle");
  if (auto m = parse_mapping(get("dram.mapping"))) s.mapping = *m;
  else throw ConfigError("dram.mapping", "unknown mapping '" + get("dram.mapping") + "'");
  s.clock.mem_clock_mhz = parse_u32(*this, "dram.mem_clock_mhz");
  s.clock.cpu_clock_mhz = parse_u32(*this, "dram.cpu_clock_mhz");
  s.clock.peak_bandwidth_gbps = parse_double(*this, "dram.peak_bandwidth_gbps");

  auto& t = s.timing;
  t.tCAS = parse_u32(*this, "timing.tCAS");
  t.tRCD = parse_u32(*this, "timing.tRCD");
  t.tRP = parse_u32(*this, "timing.tRP");
  t.tRAS = parse_u32(*this, "timing.tRAS");
  t.tRC = parse_u32(*this, "timing.tRC");
  t.tWR = parse_u32(*this, "timing.tWR");
  t.tWTR = parse_u32(*this, "timing.tWTR");
  t.tRTP = parse_u32(*this, "timing.tRTP");
  t.tRRD = parse_u32(*this, "timing.tRRD");
  t.tFAW = parse_u32(*this, "timing.tFAW");
  t.burst_cycles = parse_u32(*this, "timing.burst_cycles");
  t.bus_turnaround_cycles = parse_u32(*this, "timing.bus_turnaround_cycles");

  s.controller.read_queue_size = parse_u32(*this, "controller.read_queue_size");
  s.controller.write_queue_size = parse_u32(*this, "controller.write_queue_size");
  s.controller.write_drain_high = parse_u32(*this, "controller.write_drain_high");
  s.controller.write_drain_low = parse_u32(*this, "controller.write_drain_low");

  auto& sp = s.scheduler;
  if (auto k = parse_scheduler(get("scheduler.name"))) sp.kind = *k;
  else throw ConfigError("scheduler.name", "unknown scheduler '" + get("scheduler.name") + "'");
  sp.parbs.batching_cap = parse_u32(*this, "scheduler.batching_cap");
  sp.parbs.cap_per_bank = parse_bool(*this, "scheduler.batching_cap_per_bank");
  sp.atlas.quantum = parse_u64(*this, "scheduler.quantum");
  sp.atlas.alpha = parse_double(*this, "scheduler.alpha");
  sp.atlas.starvation_threshold = parse_u64(*this, "scheduler.starvation_threshold");
  sp.atlas.alpha_weights_history = parse_bool(*this, "scheduler.alpha_weights_history");
  sp.rl.num_tables = parse_u32(*this, "scheduler.rl_tables");
  sp.rl.table_size = parse_u32(*this, "scheduler.rl_table_size");
  sp.rl.alpha = parse_double(*this, "scheduler.rl_alpha");
  sp.rl.gamma = parse_double(*this, "scheduler.rl_gamma");
  sp.rl.epsilon = parse_double(*this, "scheduler.rl_epsilon");
  sp.rl.starvation_threshold = parse_u64(*this, "scheduler.rl_starvation_threshold");
  sp.rl.column_reward = parse_double(*this, "scheduler.rl_column_reward");
  sp.rl.seed = rl::splitmix64(c.seed ^ 0x5eed);

  auto& pp = s.page_policy;
  if (auto k = parse_page_policy(get("page_policy.name"))) pp.kind = *k;
  else throw ConfigError("page_policy.name", "unknown page policy '" + get("page_policy.name") + "'");
  pp.abpp_entries = parse_u32(*this, "page_policy.abpp_entries");
  pp.rbpp_registers = parse_u32(*this, "page_policy.rbpp_registers");
  pp.rbpp_cumulative = parse_bool(*this, "page_policy.rbpp_cumulative");

  s.core.ipc_peak = parse_u32(*this, "core.ipc_peak");
  s.core.max_outstanding_reads = parse_u32(*this, "core.max_outstanding_reads");
  s.core.write_credits = parse_u32(*this, "core.write_credits");

  if (!get("workload.trace").empty()) c.trace_path = get("workload.trace");
  auto& w = c.synthetic;
  w.cores = parse_u32(*this, "workload.cores");
  w.mpki = parse_double(*this, "workload.mpki");
  w.read_fraction = parse_double(*this, "workload.read_fraction");
  w.row_locality = parse_double(*this, "workload.row_locality");
  w.address_space_bytes = parse_u64(*this, "workload.address_space_bytes");
  w.seed = c.seed;

  s.validate();
  w.validate(g);
  if (!c.trace_path && !s.sim.measured_requests && !s.sim.measured_cycles)
    throw ConfigError("run.measured_requests", "a synthetic workload needs measured_requests or measured_cycles");
  return c;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const ConfigMap& m) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << fnv1a(m.canonical());
  return os.str();
}

}  // namespace mcsim
