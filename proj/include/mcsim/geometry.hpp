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

#include <bit>
#include <cstdint>
#include <string>

#include "mcsim/types.hpp"

namespace mcsim {

/// DRAM organization. Counts are per channel unless named otherwise.
struct DramGeometry {
  std::uint32_t channels = 1;
  std::uint32_t ranks_per_channel = 2;
  std::uint32_t banks_per_rank = 8;
  std::uint64_t rows_per_bank = 1u << 18;  ///< 32GB per channel
  std::uint32_t row_buffer_bytes = 8192;
  std::uint32_t cache_block_bytes = 64;
  std::uint32_t data_bus_bytes_per_mem_cycle = 16;  ///< x64 DDR, 2 beats/cycle

  std::uint32_t banks_per_channel() const { return ranks_per_channel * banks_per_rank; }
  std::uint32_t blocks_per_row() const { return row_buffer_bytes / cache_block_bytes; }
  std::uint64_t channel_capacity_bytes() const {
    return std::uint64_t{ranks_per_channel} * banks_per_rank * rows_per_bank * row_buffer_bytes;
  }
  std::uint64_t capacity_bytes() const { return channel_capacity_bytes() * channels; }

  /// Throws ConfigError naming the first field that breaks an invariant.
  void validate() const {
    auto pow2 = [](const char* key, std::uint64_t v) {
      if (v == 0 || !std::has_single_bit(v)) throw ConfigError(key, "must be a power of two");
    };
    pow2("dram.channels", channels);
    pow2("dram.ranks_per_channel", ranks_per_channel);
    pow2("dram.banks_per_rank", banks_per_rank);
    pow2("dram.rows_per_bank", rows_per_bank);
    pow2("dram.row_buffer_bytes", row_buffer_bytes);
    pow2("dram.cache_block_bytes", cache_block_bytes);
    pow2("dram.data_bus_bytes_per_mem_cycle", data_bus_bytes_per_mem_cycle);
    if (row_buffer_bytes % cache_block_bytes != 0 || row_buffer_bytes < cache_block_bytes)
      throw ConfigError("dram.row_buffer_bytes", "must be a multiple of cache_block_bytes");
    if (std::bit_width(capacity_bytes() - 1) > 63 || capacity_bytes() / channels != channel_capacity_bytes())
      throw ConfigError("dram.rows_per_bank", "capacity exceeds 64-bit address space");
  }
};

/// DDR3 timing constraints in memory-clock cycles. Defaults are the
/// DDR3-1600 11-11-11-28 part.
struct TimingParams {
  std::uint32_t tCAS = 11;  ///< column command to first data beat
  std::uint32_t tRCD = 11;  ///< ACT to READ/WRITE
  std::uint32_t tRP = 11;   ///< PRE to ACT
  std::uint32_t tRAS = 28;  ///< ACT to PRE
  std::uint32_t tRC = 39;   ///< ACT to ACT, same bank
  std::uint32_t tWR = 12;   ///< end of write data to PRE
  std::uint32_t tWTR = 6;   ///< end of write data to READ, same rank
  std::uint32_t tRTP = 6;   ///< READ to PRE
  std::uint32_t tRRD = 5;   ///< ACT to ACT, same rank
  std::uint32_t tFAW = 24;  ///< window holding at most four ACTs per rank
  std::uint32_t burst_cycles = 4;
  std::uint32_t bus_turnaround_cycles = 2;

  void validate() const {
    auto positive = [](const char* key, std::uint32_t v) {
      if (v == 0) throw ConfigError(key, "must be positive");
    };
    positive("timing.tCAS", tCAS);
    positive("timing.tRCD", tRCD);
    positive("timing.tRP", tRP);
    positive("timing.tRAS", tRAS);
    positive("timing.tRC", tRC);
    positive("timing.tWR", tWR);
    positive("timing.tWTR", tWTR);
    positive("timing.tRTP", tRTP);
    positive("timing.tRRD", tRRD);
    positive("timing.tFAW", tFAW);
    positive("timing.burst_cycles", burst_cycles);
    if (tRC < tRAS + tRP) throw ConfigError("timing.tRC", "must be >= tRAS + tRP");
  }
};

/// Clock relationship between cores and the memory bus.
struct ClockParams {
  std::uint32_t mem_clock_mhz = 800;
  std::uint32_t cpu_clock_mhz = 2000;
  double peak_bandwidth_gbps = 11.9;  ///< per channel, used for utilization reporting

  double cpu_per_mem_cycle() const { return double(cpu_clock_mhz) / mem_clock_mhz; }

  void validate() const {
    if (mem_clock_mhz == 0) throw ConfigError("dram.mem_clock_mhz", "must be positive");
    if (cpu_clock_mhz == 0) throw ConfigError("dram.cpu_clock_mhz", "must be positive");
    if (!(peak_bandwidth_gbps > 0)) throw ConfigError("dram.peak_bandwidth_gbps", "must be positive");
  }
};

/// Closed-form service times of an isolated request, from the cycle its
/// first command issues to the end of its data burst.
namespace latency {
inline Cycle row_hit(const TimingParams& t) { return t.tCAS + t.burst_cycles; }
inline Cycle row_miss(const TimingParams& t) { return t.tRCD + t.tCAS + t.burst_cycles; }
inline Cycle row_conflict(const TimingParams& t) { return t.tRP + t.tRCD + t.tCAS + t.burst_cycles; }
}  // namespace latency

}  // namespace mcsim
