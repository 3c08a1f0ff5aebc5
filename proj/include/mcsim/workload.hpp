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
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcsim/geometry.hpp"
#include "mcsim/rl.hpp"
#include "mcsim/types.hpp"

namespace mcsim {

/// One post-LLC access of a core, preceded by `gap` non-memory instructions.
struct TraceRecord {
  std::uint32_t core = 0;
  AccessKind kind = AccessKind::Read;
  std::uint64_t address = 0;
  std::uint32_t gap = 0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

class TraceFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Text traces: `core,kind,hex_address,gap` per line, kind R or W, `#`
/// starts a comment.
inline std::vector<TraceRecord> read_text_trace(std::istream& in) {
  std::vector<TraceRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string core, kind, addr, gap;
    if (!std::getline(ls, core, ',') || !std::getline(ls, kind, ',') || !std::getline(ls, addr, ',') ||
        !std::getline(ls, gap)) {
      throw TraceFormatError("trace line " + std::to_string(lineno) + ": expected core,kind,hex_address,gap");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kind = trim(kind);
    TraceRecord r;
    try {
      r.core = static_cast<std::uint32_t>(std::stoul(trim(core)));
      r.address = std::stoull(trim(addr), nullptr, 16);
      const long long g = std::stoll(trim(gap));
      if (g < 0) throw TraceFormatError("negative gap");
      r.gap = static_cast<std::uint32_t>(g);
    } catch (const std::logic_error&) {
      throw TraceFormatError("trace line " + std::to_string(lineno) + ": malformed number");
    }
    if (kind == "R" || kind == "READ" || kind == "r") r.kind = AccessKind::Read;
    else if (kind == "W" || kind == "WRITE" || kind == "w") r.kind = AccessKind::Write;
    else throw TraceFormatError("trace line " + std::to_string(lineno) + ": kind must be R or W");
    out.push_back(r);
  }
  return out;
}

inline void write_text_trace(std::ostream& os, std::span<const TraceRecord> recs) {
  os << "# core,kind,hex_address,gap\n";
  for (const auto& r : recs) {
    os << r.core << ',' << (r.kind == AccessKind::Read ? 'R' : 'W') << ",0x" << std::hex << r.address << std::dec
       << ',' << r.gap << '\n';
  }
}

inline constexpr std::size_t kBinaryRecordBytes = 15;

/// Packed little-endian records: u16 core, u8 kind (0 read, 1 write),
/// u64 address, u32 gap.
inline void write_binary_trace(std::ostream& os, std::span<const TraceRecord> recs) {
  unsigned char buf[kBinaryRecordBytes];
  for (const auto& r : recs) {
    auto put = [&](std::size_t off, std::uint64_t v, std::size_t n) {
      for (std::size_t i = 0; i < n; ++i) buf[off + i] = static_cast<unsigned char>(v >> (8 * i));
    };
    put(0, r.core, 2);
    put(2, r.kind == AccessKind::Read ? 0 : 1, 1);
    put(3, r.address, 8);
    put(11, r.gap, 4);
    os.write(reinterpret_cast<const char*>(buf), sizeof buf);
  }
}

inline std::vector<TraceRecord> read_binary_trace(std::istream& in) {
  std::vector<TraceRecord> out;
  unsigned char buf[kBinaryRecordBytes];
  for (;;) {
    in.read(reinterpret_cast<char*>(buf), sizeof buf);
    const auto got = in.gcount();
    if (got == 0) break;
    if (got != static_cast<std::streamsize>(sizeof buf)) throw TraceFormatError("truncated binary trace record");
    auto get = [&](std::size_t off, std::size_t n) {
      std::uint64_t v = 0;
      for (std::size_t i = 0; i < n; ++i) v |= std::uint64_t{buf[off + i]} << (8 * i);
      return v;
    };
    TraceRecord r;
    r.core = static_cast<std::uint32_t>(get(0, 2));
    const auto kind = get(2, 1);
    if (kind > 1) throw TraceFormatError("binary trace: kind byte must be 0 or 1");
    r.kind = kind == 0 ? AccessKind::Read : AccessKind::Write;
    r.address = get(3, 8);
    r.gap = static_cast<std::uint32_t>(get(11, 4));
    out.push_back(r);
  }
  return out;
}

/// Reads a trace file; `.bin` selects the packed binary format.
inline std::vector<TraceRecord> load_trace(const std::string& path) {
  const bool binary = path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0;
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw TraceFormatError("cannot open trace " + path);
  return binary ? read_binary_trace(in) : read_text_trace(in);
}

/// Per-core source of memory accesses.
class RequestStream {
 public:
  virtual ~RequestStream() = default;
  virtual std::uint32_t cores() const = 0;
  /// Next record of `core`, or none once its stream is exhausted.
  virtual std::optional<TraceRecord> next(std::uint32_t core) = 0;
};

class TraceStream final : public RequestStream {
 public:
  TraceStream(std::span<const TraceRecord> recs, std::uint32_t cores) : per_core_(cores), cursor_(cores, 0) {
    for (const auto& r : recs) {
      if (r.core >= cores) throw TraceFormatError("trace core " + std::to_string(r.core) + " >= configured cores");
      per_core_[r.core].push_back(r);
    }
  }

  std::uint32_t cores() const override { return static_cast<std::uint32_t>(per_core_.size()); }

  std::optional<TraceRecord> next(std::uint32_t core) override {
    if (cursor_[core] >= per_core_[core].size()) return std::nullopt;
    return per_core_[core][cursor_[core]++];
  }

 private:
  std::vector<std::vector<TraceRecord>> per_core_;
  std::vector<std::size_t> cursor_;
};

/// Parameters of the synthetic multi-core miss stream.
struct SyntheticProfile {
  std::uint32_t cores = 16;
  double mpki = 5.0;
  double read_fraction = 0.7;
  /// Probability the next access of a core stays in the row-sized region of
  /// its previous access.
  double row_locality = 0.5;
  /// New regions are drawn uniformly from [0, address_space_bytes).
  std::uint64_t address_space_bytes = std::uint64_t{1} << 35;
  std::uint64_t seed = 1;

  double mean_gap() const { return 1000.0 / mpki; }

  void validate(const DramGeometry& g) const {
    if (cores == 0) throw ConfigError("workload.cores", "must be positive");
    if (!(mpki > 0)) throw ConfigError("workload.mpki", "must be positive");
    if (!(read_fraction >= 0 && read_fraction <= 1)) throw ConfigError("workload.read_fraction", "must be in [0,1]");
    if (!(row_locality >= 0 && row_locality <= 1)) throw ConfigError("workload.row_locality", "must be in [0,1]");
    if (address_space_bytes < g.row_buffer_bytes || address_space_bytes > g.capacity_bytes())
      throw ConfigError("workload.address_space_bytes", "must lie within DRAM capacity");
  }
};

/// Address stream with geometric inter-miss gaps and row-region locality.
/// Regions are aligned row_buffer_bytes chunks of the physical address
/// space, so the stream is the same under every mapping scheme.
class SyntheticStream final : public RequestStream {
 public:
  SyntheticStream(const SyntheticProfile& p, const DramGeometry& g)
      : profile_(p),
        region_bytes_(g.row_buffer_bytes),
        block_bytes_(g.cache_block_bytes),
        regions_(p.address_space_bytes / g.row_buffer_bytes),
        per_core_(p.cores) {
    for (std::uint32_t c = 0; c < p.cores; ++c) per_core_[c].rng.seed(rl::splitmix64(p.seed * 0x100000001b3ULL + c));
  }

  std::uint32_t cores() const override { return profile_.cores; }

  std::optional<TraceRecord> next(std::uint32_t core) override {
    auto& st = per_core_[core];
    TraceRecord r;
    r.core = core;
    std::geometric_distribution<std::uint32_t> gap(1.0 / (profile_.mean_gap() + 1.0));
    r.gap = gap(st.rng);
    r.kind = unit(st.rng) < profile_.read_fraction ? AccessKind::Read : AccessKind::Write;
    const bool stay = st.region.has_value() && unit(st.rng) < profile_.row_locality;
    if (!stay) st.region = std::uniform_int_distribution<std::uint64_t>(0, regions_ - 1)(st.rng);
    const std::uint32_t blocks = region_bytes_ / block_bytes_;
    const auto col = std::uniform_int_distribution<std::uint32_t>(0, blocks - 1)(st.rng);
    r.address = *st.region * region_bytes_ + std::uint64_t{col} * block_bytes_;
    return r;
  }

 private:
  struct CoreRng {
    std::mt19937_64 rng;
    std::optional<std::uint64_t> region;
  };
  static inline std::uniform_real_distribution<double> unit{0.0, 1.0};

  SyntheticProfile profile_;
  std::uint32_t region_bytes_;
  std::uint32_t block_bytes_;
  std::uint64_t regions_;
  std::vector<CoreRng> per_core_;
};

struct CoreParams {
  std::uint32_t ipc_peak = 1;
  std::uint32_t max_outstanding_reads = 1;  ///< MLP
  std::uint32_t write_credits = 8;

  void validate() const {
    if (ipc_peak == 0) throw ConfigError("core.ipc_peak", "must be positive");
    if (max_outstanding_reads == 0) throw ConfigError("core.max_outstanding_reads", "must be positive");
    if (write_credits == 0) throw ConfigError("core.write_credits", "must be positive");
  }
};

enum class CoreStatus : std::uint8_t { Running, Blocked, Finished };

/// Blocking in-order core. Executes one instruction per CPU cycle between
/// misses; reads stall it once `max_outstanding_reads` are in flight, writes
/// are posted against a credit pool.
class Core {
 public:
  Core(std::uint32_t id, const CoreParams& p, const ClockParams& clock)
      : id_(id), params_(p), credit_per_cycle_(std::uint64_t{clock.cpu_clock_mhz} * p.ipc_peak),
        cost_per_instruction_(clock.mem_clock_mhz), write_credit_(p.write_credits) {}

  std::uint32_t id() const { return id_; }
  std::uint64_t instructions_retired() const { return instructions_; }
  std::uint32_t outstanding_reads() const { return outstanding_reads_; }
  std::uint32_t write_buffer_credit() const { return write_credit_; }
  bool exhausted() const { return exhausted_; }

  CoreStatus status() const {
    if (exhausted_ && !pending_) return CoreStatus::Finished;
    if (outstanding_reads_ >= params_.max_outstanding_reads) return CoreStatus::Blocked;
    return CoreStatus::Running;
  }

  /// Advances one memory cycle; returns instructions retired.
  template <class Issue>
  std::uint64_t tick(Cycle now, RequestStream& stream, Issue&& issue) {
    if (status() != CoreStatus::Running) return 0;
    std::uint64_t retired = 0;
    credit_ += credit_per_cycle_;
    for (;;) {
      if (!pending_) {
        if (exhausted_) break;
        pending_ = stream.next(id_);
        if (!pending_) {
          exhausted_ = true;
          break;
        }
        gap_left_ = pending_->gap;
        generated_.reset();
      }
      if (gap_left_ > 0) {
        const std::uint64_t n = std::min<std::uint64_t>(gap_left_, credit_ / cost_per_instruction_);
        retired += n;
        credit_ -= n * cost_per_instruction_;
        gap_left_ -= n;
        if (gap_left_ > 0) break;
      }
      if (!generated_) generated_ = now;
      const bool write = pending_->kind == AccessKind::Write;
      if ((write && write_credit_ == 0) || !issue(*pending_, *generated_)) {
        credit_ = 0;  // stalled
        break;
      }
      if (write) --write_credit_;
      else ++outstanding_reads_;
      pending_.reset();
      if (outstanding_reads_ >= params_.max_outstanding_reads) {
        credit_ = 0;
        break;
      }
    }
    instructions_ += retired;
    return retired;
  }

  void on_read_retired() {
    if (outstanding_reads_ == 0) throw SimulationFault("read retired with none outstanding");
    --outstanding_reads_;
  }
  void on_write_retired() { ++write_credit_; }

 private:
  std::uint32_t id_;
  CoreParams params_;
  std::uint64_t credit_per_cycle_;
  std::uint64_t cost_per_instruction_;
  std::uint64_t credit_ = 0;
  std::uint64_t instructions_ = 0;
  std::uint32_t outstanding_reads_ = 0;
  std::uint32_t write_credit_;
  std::optional<TraceRecord> pending_;
  std::uint64_t gap_left_ = 0;
  std::optional<Cycle> generated_;
  bool exhausted_ = false;
};

}  // namespace mcsim
