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
#include <optional>
#include <string_view>
#include <vector>

#include "mcsim/device.hpp"

namespace mcsim {

enum class PagePolicyKind : std::uint8_t { Open, Close, OpenAdaptive, CloseAdaptive, Abpp, Rbpp };

inline constexpr std::string_view to_string(PagePolicyKind k) {
  switch (k) {
    case PagePolicyKind::Open: return "O_PM";
    case PagePolicyKind::Close: return "C_PM";
    case PagePolicyKind::OpenAdaptive: return "OA_PM";
    case PagePolicyKind::CloseAdaptive: return "CA_PM";
    case PagePolicyKind::Abpp: return "ABPP";
    case PagePolicyKind::Rbpp: return "RBPP";
  }
  return "?";
}

inline std::optional<PagePolicyKind> parse_page_policy(std::string_view name) {
  for (auto k : {PagePolicyKind::Open, PagePolicyKind::Close, PagePolicyKind::OpenAdaptive,
                 PagePolicyKind::CloseAdaptive, PagePolicyKind::Abpp, PagePolicyKind::Rbpp}) {
    if (name == to_string(k)) return k;
  }
  if (name == "OPEN") return PagePolicyKind::Open;
  if (name == "CLOSE") return PagePolicyKind::Close;
  if (name == "OPEN_ADAPTIVE") return PagePolicyKind::OpenAdaptive;
  if (name == "CLOSE_ADAPTIVE") return PagePolicyKind::CloseAdaptive;
  return std::nullopt;
}

enum class PageDecision : std::uint8_t { KeepOpen, PrechargeNow };

/// Queued requests to one bank, split by whether they target its open row.
struct BankQueueSummary {
  std::uint32_t pending_hits = 0;
  std::uint32_t pending_conflicts = 0;
};

struct PagePolicyParams {
  PagePolicyKind kind = PagePolicyKind::OpenAdaptive;
  std::uint32_t abpp_entries = 16;   ///< per bank
  std::uint32_t rbpp_registers = 4;  ///< MARRs per bank
  bool rbpp_cumulative = false;      ///< accumulate hits across activations
};

/// Small LRU table of {row, hit count}. Backs both ABPP's per-bank history
/// and RBPP's most-accessed-row registers.
class RowHitTable {
 public:
  struct Entry {
    std::uint64_t row = 0;
    std::uint32_t hits = 0;
    std::uint64_t last_use = 0;
  };

  explicit RowHitTable(std::uint32_t capacity = 0) : capacity_(capacity) {}

  std::optional<std::uint32_t> lookup(std::uint64_t row) const {
    auto it = find(row);
    if (it == entries_.end()) return std::nullopt;
    return it->hits;
  }

  /// Sets (or with `accumulate`, adds to) the entry for `row`, evicting the
  /// least recently written entry when full.
  void record(std::uint64_t row, std::uint32_t hits, bool accumulate = false) {
    if (capacity_ == 0) return;
    ++stamp_;
    auto it = find(row);
    if (it != entries_.end()) {
      it->hits = accumulate ? it->hits + hits : hits;
      it->last_use = stamp_;
      return;
    }
    if (entries_.size() == capacity_) {
      auto lru = std::min_element(entries_.begin(), entries_.end(),
                                  [](const Entry& a, const Entry& b) { return a.last_use < b.last_use; });
      entries_.erase(lru);
    }
    entries_.push_back({row, hits, stamp_});
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::uint32_t capacity() const { return capacity_; }

 private:
  std::vector<Entry>::const_iterator find(std::uint64_t row) const {
    return std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.row == row; });
  }
  std::vector<Entry>::iterator find(std::uint64_t row) {
    return std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.row == row; });
  }

  std::uint32_t capacity_;
  std::uint64_t stamp_ = 0;
  std::vector<Entry> entries_;
};

using AbppTable = RowHitTable;
using RbppMarrs = RowHitTable;

/// Row-buffer management for one channel. Decides, for each open bank,
/// whether to keep the row or precharge it now.
class PagePolicy {
 public:
  PagePolicy(const PagePolicyParams& params, std::uint32_t banks) : params_(params) {
    if (params.kind == PagePolicyKind::Abpp) tables_.assign(banks, RowHitTable(params.abpp_entries));
    if (params.kind == PagePolicyKind::Rbpp) tables_.assign(banks, RowHitTable(params.rbpp_registers));
  }

  PagePolicyKind kind() const { return params_.kind; }
  const PagePolicyParams& params() const { return params_; }

  /// O_PM never closes a row on its own; the scheduler's PRECHARGE for a
  /// conflicting request does.
  PageDecision decide(std::uint32_t bank, const BankState& state, const BankQueueSummary& q) const {
    if (!state.active()) return PageDecision::KeepOpen;
    const bool hit_pending = q.pending_hits > 0;
    switch (params_.kind) {
      case PagePolicyKind::Open:
        return PageDecision::KeepOpen;
      case PagePolicyKind::Close:
        return state.activation_access_count >= 1 ? PageDecision::PrechargeNow : PageDecision::KeepOpen;
      case PagePolicyKind::OpenAdaptive:
        return !hit_pending && q.pending_conflicts > 0 ? PageDecision::PrechargeNow : PageDecision::KeepOpen;
      case PagePolicyKind::CloseAdaptive:
        return hit_pending ? PageDecision::KeepOpen : PageDecision::PrechargeNow;
      case PagePolicyKind::Abpp: {
        if (hit_pending) return PageDecision::KeepOpen;
        auto predicted = tables_[bank].lookup(*state.open_row);
        if (!predicted) return PageDecision::KeepOpen;
        return state.activation_hit_count >= *predicted ? PageDecision::PrechargeNow : PageDecision::KeepOpen;
      }
      case PagePolicyKind::Rbpp: {
        if (hit_pending) return PageDecision::KeepOpen;
        auto recorded = tables_[bank].lookup(*state.open_row);
        if (!recorded) return PageDecision::PrechargeNow;
        return state.activation_hit_count >= *recorded ? PageDecision::PrechargeNow : PageDecision::KeepOpen;
      }
    }
    return PageDecision::KeepOpen;
  }

  /// C_PM allows exactly one column access per activation.
  bool blocks_column_access(const BankState& state) const {
    return params_.kind == PagePolicyKind::Close && state.activation_access_count >= 1;
  }

  /// Called for every PRECHARGE, whoever initiated it.
  void on_precharge(std::uint32_t bank, std::uint64_t row, std::uint32_t hits) {
    if (params_.kind == PagePolicyKind::Abpp) {
      tables_[bank].record(row, hits);
    } else if (params_.kind == PagePolicyKind::Rbpp && hits >= 1) {
      tables_[bank].record(row, hits, params_.rbpp_cumulative);
    }
  }

  const RowHitTable& table(std::uint32_t bank) const { return tables_.at(bank); }

 private:
  PagePolicyParams params_;
  std::vector<RowHitTable> tables_;
};

}  // namespace mcsim
