#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "memlog/store.hpp"

namespace memlog {

class IoFaults;

// On-disk checkpoint. One file per node:
//   "MLSNAP01" | u64 snapshot id | i64 tick | u32 node | u32 table count
//   per table (ascending id): u32 table id | u32 arity | u64 n
//     n × (i64 key | arity × i64 value), ascending key
//   u32 crc32 of all preceding bytes
// A snapshot is complete once its manifest ("snap-<id>.manifest": magic,
// id, tick, node count, crc) exists; it is written last.
namespace snapshot {

inline constexpr char kMagic[8] = {'M', 'L', 'S', 'N', 'A', 'P', '0', '1'};

std::filesystem::path node_file(const std::filesystem::path& dir, std::uint64_t id, NodeId node);
std::filesystem::path manifest_file(const std::filesystem::path& dir, std::uint64_t id);

void write_node(const std::filesystem::path& dir, std::uint64_t id, Tick tick, NodeId node,
                const Schema& schema, const Partition& rows, IoFaults* faults = nullptr);
void write_manifest(const std::filesystem::path& dir, std::uint64_t id, Tick tick,
                    std::uint32_t node_count, IoFaults* faults = nullptr);

struct Manifest {
  std::uint64_t id = 0;
  Tick tick = 0;
  std::uint32_t node_count = 0;
};

Manifest read_manifest(const std::filesystem::path& dir, std::uint64_t id);
Partition read_node(const std::filesystem::path& dir, std::uint64_t id, NodeId node,
                    const Schema& schema);

// Highest snapshot id with a manifest, if any.
std::optional<std::uint64_t> latest(const std::filesystem::path& dir);

}  // namespace snapshot
}  // namespace memlog
