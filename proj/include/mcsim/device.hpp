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
#include <optional>
#include <string>
#include <vector>

#include "mcsim/geometry.hpp"
#include "mcsim/types.hpp"

namespace mcsim {

/// Row-buffer state and earliest-issue timestamps of one bank.
struct BankState {
  std::optional<std::uint64_t> open_row;
  Cycle next_activate = 0;
  Cycle next_precharge = 0;
  Cycle next_read = 0;
  Cycle next_write = 0;
  std::uint32_t activation_hit_count = 0;     ///< column accesses after the first
  std::uint32_t activation_access_count = 0;  ///< all column accesses this activation

  bool active() const { return open_row.has_value(); }
};

/// Rank-scoped constraints: tRRD, tFAW, tWTR.
struct RankState {
  /// Newest first; only the first `activate_count` entries are meaningful.
  std::array<Cycle, 4> activate_history{};
  std::uint32_t activate_count = 0;
  Cycle next_activate = 0;  ///< tRRD
  Cycle next_read = 0;      ///< tWTR

  void record_activate(Cycle at) {
    for (std::size_t i = activate_history.size() - 1; i > 0; --i) activate_history[i] = activate_history[i - 1];
    activate_history[0] = at;
    activate_count = std::min<std::uint32_t>(activate_count + 1, 4);
  }
};

/// The channel's shared data bus.
struct DataBus {
  Cycle busy_until = 0;
  std::optional<AccessKind> last_direction;
};

/// What `ChannelDevice::issue` reports back to the controller.
struct IssueResult {
  /// READ/WRITE: cycle the data burst ends.
  Cycle data_complete = 0;
  /// PRECHARGE: the activation that just closed.
  std::uint64_t closed_row = 0;
  std::uint32_t closed_accesses = 0;
  std::uint32_t closed_hits = 0;
};

/// Timing state machine of one channel: its ranks, banks and data bus.
class ChannelDevice {
 public:
  ChannelDevice(std::uint32_t channel, const DramGeometry& geom, const TimingParams& timing)
      : channel_(channel),
        geom_(geom),
        timing_(timing),
        banks_(geom.banks_per_channel()),
        ranks_(geom.ranks_per_channel) {}

  std::uint32_t channel() const { return channel_; }
  const DramGeometry& geometry() const { return geom_; }
  const TimingParams& timing() const { return timing_; }
  const DataBus& bus() const { return bus_; }

  std::uint32_t bank_index(std::uint32_t rank, std::uint32_t bank) const {
    return rank * geom_.banks_per_rank + bank;
  }
  const BankState& bank(std::uint32_t rank, std::uint32_t bank) const { return banks_[bank_index(rank, bank)]; }
  const BankState& bank(std::uint32_t flat) const { return banks_[flat]; }
  const RankState& rank(std::uint32_t r) const { return ranks_[r]; }
  std::uint32_t bank_count() const { return static_cast<std::uint32_t>(banks_.size()); }

  /// Earliest cycle >= now at which `cmd` violates no timing constraint.
  /// Throws IllegalCommand for structurally impossible commands.
  Cycle legal_issue_time(const Command& cmd, Cycle now) const {
    if (cmd.kind == CommandKind::Nop) return now;
    check_structure(cmd);
    const BankState& b = bank(cmd.rank, cmd.bank);
    const RankState& r = ranks_[cmd.rank];
    Cycle t = now;
    switch (cmd.kind) {
      case CommandKind::Activate:
        t = std::max({t, b.next_activate, r.next_activate});
        if (r.activate_count == 4) t = std::max(t, r.activate_history[3] + timing_.tFAW);
        break;
      case CommandKind::Precharge:
        t = std::max(t, b.next_precharge);
        break;
      case CommandKind::Read:
        t = std::max({t, b.next_read, r.next_read, bus_ready(AccessKind::Read)});
        break;
      case CommandKind::Write:
        t = std::max({t, b.next_write, bus_ready(AccessKind::Write)});
        break;
      case CommandKind::Nop:
        break;
    }
    return t;
  }

  bool can_issue(const Command& cmd, Cycle now) const { return legal_issue_time(cmd, now) == now; }

  /// Applies `cmd` at `now`. Issuing before the legal time is a hard fault.
  IssueResult issue(const Command& cmd, Cycle now) {
    IssueResult out;
    if (cmd.kind == CommandKind::Nop) return out;
    const Cycle legal = legal_issue_time(cmd, now);
    if (legal != now) {
      throw TimingViolation(std::string(to_string(cmd.kind)) + " on ch" + std::to_string(cmd.channel) + " rank" +
                            std::to_string(cmd.rank) + " bank" + std::to_string(cmd.bank) + " at cycle " +
                            std::to_string(now) + ", legal at " + std::to_string(legal));
    }
    BankState& b = banks_[bank_index(cmd.rank, cmd.bank)];
    RankState& r = ranks_[cmd.rank];
    const TimingParams& t = timing_;
    switch (cmd.kind) {
      case CommandKind::Activate:
        b.open_row = cmd.row;
        b.activation_access_count = 0;
        b.activation_hit_count = 0;
        raise(b.next_read, now + t.tRCD);
        raise(b.next_write, now + t.tRCD);
        raise(b.next_precharge, now + t.tRAS);
        raise(b.next_activate, now + t.tRC);
        raise(r.next_activate, now + t.tRRD);
        r.record_activate(now);
        break;
      case CommandKind::Precharge:
        out.closed_row = *b.open_row;
        out.closed_accesses = b.activation_access_count;
        out.closed_hits = b.activation_hit_count;
        b.open_row.reset();
        b.activation_access_count = 0;
        b.activation_hit_count = 0;
        raise(b.next_activate, now + t.tRP);
        break;
      case CommandKind::Read:
      case CommandKind::Write: {
        const bool write = cmd.kind == CommandKind::Write;
        const Cycle data_end = now + t.tCAS + t.burst_cycles;
        bus_.busy_until = data_end;
        bus_.last_direction = write ? AccessKind::Write : AccessKind::Read;
        if (write) {
          raise(b.next_precharge, data_end + t.tWR);
          raise(r.next_read, data_end + t.tWTR);
        } else {
          raise(b.next_precharge, now + t.tRTP);
        }
        if (b.activation_access_count > 0) ++b.activation_hit_count;
        ++b.activation_access_count;
        out.data_complete = data_end;
        break;
      }
      case CommandKind::Nop:
        break;
    }
    return out;
  }

  /// Completion cycle of the data burst of a column command issued at `issued`.
  Cycle data_completion(Cycle issued) const { return issued + timing_.tCAS + timing_.burst_cycles; }

 private:
  static void raise(Cycle& slot, Cycle v) { slot = std::max(slot, v); }

  /// Earliest issue cycle for a column command whose burst must start after
  /// the bus frees (plus a turnaround when direction flips).
  Cycle bus_ready(AccessKind dir) const {
    Cycle free_at = bus_.busy_until;
    if (bus_.last_direction && *bus_.last_direction != dir) free_at += timing_.bus_turnaround_cycles;
    return free_at > timing_.tCAS ? free_at - timing_.tCAS : 0;
  }

  void check_structure(const Command& cmd) const {
    if (cmd.channel != channel_ || cmd.rank >= geom_.ranks_per_channel || cmd.bank >= geom_.banks_per_rank)
      throw IllegalCommand("command addresses a bank outside the channel geometry");
    const BankState& b = bank(cmd.rank, cmd.bank);
    switch (cmd.kind) {
      case CommandKind::Activate:
        if (b.active()) throw IllegalCommand("ACTIVATE on an active bank");
        if (cmd.row >= geom_.rows_per_bank) throw IllegalCommand("ACTIVATE row out of range");
        break;
      case CommandKind::Precharge:
        if (!b.active()) throw IllegalCommand("PRECHARGE on an idle bank");
        break;
      case CommandKind::Read:
      case CommandKind::Write:
        if (!b.active()) throw IllegalCommand("column access on an idle bank");
        if (cmd.column >= geom_.blocks_per_row()) throw IllegalCommand("column out of range");
        break;
      case CommandKind::Nop:
        break;
    }
  }

  std::uint32_t channel_;
  DramGeometry geom_;
  TimingParams timing_;
  std::vector<BankState> banks_;
  std::vector<RankState> ranks_;
  DataBus bus_;
};

}  // namespace mcsim
