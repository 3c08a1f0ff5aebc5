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
#include <stdexcept>
#include <string>
#include <string_view>

namespace mcsim {

/// Memory-controller clock cycles (the DRAM bus clock).
using Cycle = std::uint64_t;

inline constexpr Cycle kNever = ~Cycle{0};

enum class AccessKind : std::uint8_t { Read = 0, Write = 1 };

enum class CommandKind : std::uint8_t { Nop, Activate, Precharge, Read, Write };

inline constexpr std::string_view to_string(AccessKind k) {
  return k == AccessKind::Read ? "READ" : "WRITE";
}

inline constexpr std::string_view to_string(CommandKind k) {
  switch (k) {
    case CommandKind::Nop: return "NOP";
    case CommandKind::Activate: return "ACT";
    case CommandKind::Precharge: return "PRE";
    case CommandKind::Read: return "RD";
    case CommandKind::Write: return "WR";
  }
  return "?";
}

inline constexpr bool is_column(CommandKind k) {
  return k == CommandKind::Read || k == CommandKind::Write;
}

/// One DRAM command. `row` is meaningful for ACTIVATE only, `column` for
/// READ/WRITE only.
struct Command {
  CommandKind kind = CommandKind::Nop;
  std::uint32_t channel = 0;
  std::uint32_t rank = 0;
  std::uint32_t bank = 0;
  std::uint64_t row = 0;
  std::uint32_t column = 0;

  static constexpr Command nop() { return {}; }
  bool is_nop() const { return kind == CommandKind::Nop; }
  friend bool operator==(const Command&, const Command&) = default;
};

/// Raised when a scheduler or policy hands the device a command that is
/// structurally impossible (READ on an idle bank, ACTIVATE on an open bank).
class IllegalCommand : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when a command is issued before its earliest legal cycle.
class TimingViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Bad or inconsistent configuration. `key()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Simulator invariant broken at run time (livelock watchdog, duplicate
/// retirement).
class SimulationFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mcsim
