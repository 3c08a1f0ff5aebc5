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

#include "mcsim/addressing.hpp"
#include "mcsim/types.hpp"

namespace mcsim {

/// Row-buffer state a request found when its first command issued.
enum class RowOutcome : std::uint8_t { Unknown, Hit, Miss, Conflict };

/// One post-LLC memory access as the controller sees it.
struct MemRequest {
  std::uint64_t id = 0;
  std::uint32_t core = 0;
  AccessKind kind = AccessKind::Read;
  std::uint64_t address = 0;
  DramCoordinates coords;
  Cycle generated = 0;  ///< cycle the core first tried to issue it
  Cycle arrival = 0;    ///< cycle it entered the queue
  std::optional<Cycle> issue_complete;
  bool batched = false;
  RowOutcome outcome = RowOutcome::Unknown;

  bool is_read() const { return kind == AccessKind::Read; }

  /// Age order: (arrival, id).
  bool older_than(const MemRequest& o) const {
    return arrival != o.arrival ? arrival < o.arrival : id < o.id;
  }
};

}  // namespace mcsim
