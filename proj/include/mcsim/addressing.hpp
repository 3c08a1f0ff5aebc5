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
#include <bit>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "mcsim/geometry.hpp"
#include "mcsim/types.hpp"

namespace mcsim {

/// Physical-address interleaving. The name lists fields from the most to
/// the least significant bits above the cache-block offset.
enum class MappingScheme : std::uint8_t { RoRaBaCoCh, RoRaBaChCo, RoRaChBaCo, RoChRaBaCo };

inline constexpr std::string_view to_string(MappingScheme s) {
  switch (s) {
    case MappingScheme::RoRaBaCoCh: return "RoRaBaCoCh";
    case MappingScheme::RoRaBaChCo: return "RoRaBaChCo";
    case MappingScheme::RoRaChBaCo: return "RoRaChBaCo";
    case MappingScheme::RoChRaBaCo: return "RoChRaBaCo";
  }
  return "?";
}

inline std::optional<MappingScheme> parse_mapping(std::string_view name) {
  for (auto s : {MappingScheme::RoRaBaCoCh, MappingScheme::RoRaBaChCo, MappingScheme::RoRaChBaCo,
                 MappingScheme::RoChRaBaCo}) {
    if (name == to_string(s)) return s;
  }
  return std::nullopt;
}

struct DramCoordinates {
  std::uint32_t channel = 0;
  std::uint32_t rank = 0;
  std::uint32_t bank = 0;
  std::uint64_t row = 0;
  std::uint32_t column_block = 0;

  friend bool operator==(const DramCoordinates&, const DramCoordinates&) = default;
};

class AddressRangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

namespace detail {

enum class Field : std::uint8_t { Channel, Rank, Bank, Row, Column };

/// Fields least significant first.
inline constexpr std::array<Field, 5> lsb_first(MappingScheme s) {
  using F = Field;
  switch (s) {
    case MappingScheme::RoRaBaCoCh: return {F::Channel, F::Column, F::Bank, F::Rank, F::Row};
    case MappingScheme::RoRaBaChCo: return {F::Column, F::Channel, F::Bank, F::Rank, F::Row};
    case MappingScheme::RoRaChBaCo: return {F::Column, F::Bank, F::Channel, F::Rank, F::Row};
    case MappingScheme::RoChRaBaCo: return {F::Column, F::Bank, F::Rank, F::Channel, F::Row};
  }
  return {};
}

inline unsigned log2(std::uint64_t v) { return static_cast<unsigned>(std::countr_zero(v)); }

inline unsigned width(Field f, const DramGeometry& g) {
  switch (f) {
    case Field::Channel: return log2(g.channels);
    case Field::Rank: return log2(g.ranks_per_channel);
    case Field::Bank: return log2(g.banks_per_rank);
    case Field::Row: return log2(g.rows_per_bank);
    case Field::Column: return log2(g.blocks_per_row());
  }
  return 0;
}

}  // namespace detail

/// Splits a byte address into DRAM coordinates under `scheme`.
inline DramCoordinates decode(std::uint64_t addr, MappingScheme scheme, const DramGeometry& geom) {
  if (addr >= geom.capacity_bytes()) throw AddressRangeError("address " + std::to_string(addr) + " beyond capacity");
  std::uint64_t bits = addr >> detail::log2(geom.cache_block_bytes);
  DramCoordinates c;
  for (detail::Field f : detail::lsb_first(scheme)) {
    const unsigned w = detail::width(f, geom);
    const std::uint64_t v = bits & ((std::uint64_t{1} << w) - 1);
    bits >>= w;
    switch (f) {
      case detail::Field::Channel: c.channel = static_cast<std::uint32_t>(v); break;
      case detail::Field::Rank: c.rank = static_cast<std::uint32_t>(v); break;
      case detail::Field::Bank: c.bank = static_cast<std::uint32_t>(v); break;
      case detail::Field::Row: c.row = v; break;
      case detail::Field::Column: c.column_block = static_cast<std::uint32_t>(v); break;
    }
  }
  return c;
}

/// Inverse of decode. Coordinates must be in range.
inline std::uint64_t encode(const DramCoordinates& c, MappingScheme scheme, const DramGeometry& geom) {
  std::uint64_t addr = 0;
  unsigned shift = 0;
  for (detail::Field f : detail::lsb_first(scheme)) {
    std::uint64_t v = 0;
    switch (f) {
      case detail::Field::Channel: v = c.channel; break;
      case detail::Field::Rank: v = c.rank; break;
      case detail::Field::Bank: v = c.bank; break;
      case detail::Field::Row: v = c.row; break;
      case detail::Field::Column: v = c.column_block; break;
    }
    addr |= v << shift;
    shift += detail::width(f, geom);
  }
  return addr << detail::log2(geom.cache_block_bytes);
}

}  // namespace mcsim
