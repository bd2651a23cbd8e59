#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>

namespace memlog {

using NodeId = std::uint32_t;
using TxnId = std::uint64_t;
using TableId = std::uint32_t;
using Value = std::int64_t;

// Simulated time. One tick is one simulated microsecond.
using Tick = std::int64_t;
inline constexpr Tick kTicksPerSecond = 1'000'000;

struct TupleId {
  TableId table = 0;
  std::int64_t key = 0;

  auto operator<=>(const TupleId&) const = default;
};

struct AttrId {
  TupleId tuple;
  std::uint32_t column = 0;

  auto operator<=>(const AttrId&) const = default;
};

enum class AccessMode : std::uint8_t { Read = 1, Write = 2, ReadWrite = 3 };

inline bool writes(AccessMode m) { return (static_cast<std::uint8_t>(m) & 2U) != 0; }
inline bool reads(AccessMode m) { return (static_cast<std::uint8_t>(m) & 1U) != 0; }
inline AccessMode merge(AccessMode a, AccessMode b) {
  return static_cast<AccessMode>(static_cast<std::uint8_t>(a) | static_cast<std::uint8_t>(b));
}

struct Access {
  AttrId attr;
  AccessMode mode = AccessMode::Read;

  bool operator==(const Access&) const = default;
};

inline std::ostream& operator<<(std::ostream& os, const TupleId& t) {
  return os << t.table << ':' << t.key;
}
inline std::ostream& operator<<(std::ostream& os, const AttrId& a) {
  return os << a.tuple << '.' << a.column;
}

}  // namespace memlog

template <>
struct std::hash<memlog::TupleId> {
  std::size_t operator()(const memlog::TupleId& t) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(t.key) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(t.table) + 0x632BE59BD9B4E019ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

template <>
struct std::hash<memlog::AttrId> {
  std::size_t operator()(const memlog::AttrId& a) const noexcept {
    std::size_t h = std::hash<memlog::TupleId>{}(a.tuple);
    return h ^ (static_cast<std::size_t>(a.column) * 0xC2B2AE3D27D4EB4FULL + (h << 6) + (h >> 2));
  }
};
