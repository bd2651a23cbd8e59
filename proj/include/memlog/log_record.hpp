#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "memlog/io.hpp"
#include "memlog/store.hpp"
#include "memlog/types.hpp"

namespace memlog {

enum class LogKind : std::uint8_t { Aries = 1, Command = 2, Footprint = 3 };

std::string_view to_string(LogKind kind);

struct AriesWrite {
  NodeId node = 0;
  std::string table;  // table name, as a data log would carry it
  AttrId attr;
  Value old_value = 0;
  Value new_value = 0;

  bool operator==(const AriesWrite&) const = default;
};

struct AriesRecord {
  TxnId txn_id = 0;
  Tick timestamp = 0;
  std::vector<AriesWrite> writes;

  bool operator==(const AriesRecord&) const = default;
};

struct CommandRecord {
  TxnId txn_id = 0;
  Tick timestamp = 0;
  bool multi_partition = false;
  std::string proc;
  std::vector<Value> params;

  bool operator==(const CommandRecord&) const = default;
};

struct FootprintRecord {
  TxnId txn_id = 0;
  Tick submit = 0;
  Tick commit = 0;
  NodeId coordinator = 0;
  bool aries = false;  // adaptive logging chose a data record for this txn
  std::vector<Access> accesses;  // sorted by attr

  bool operator==(const FootprintRecord&) const = default;
};

using LogRecord = std::variant<AriesRecord, CommandRecord, FootprintRecord>;

LogKind kind_of(const LogRecord& r);

// Builders from a committed transaction. `only_node` restricts an ARIES
// record to the writes landing on one partition.
AriesRecord make_aries(const Transaction& t, const Schema& schema, const ClusterState& state,
                       std::optional<NodeId> only_node = std::nullopt);
CommandRecord make_command(const Transaction& t);
FootprintRecord make_footprint(const Transaction& t, bool aries = false);

// Framing: [u32 payload len][u8 kind][payload][u32 crc32(kind + payload)].
inline constexpr std::size_t kFrameOverhead = 4 + 1 + 4;

std::vector<std::uint8_t> encode(const LogRecord& r);
std::size_t encoded_size(const LogRecord& r);

struct ReadResult {
  std::vector<LogRecord> records;
  bool truncated = false;      // the tail held an incomplete record
  std::uint64_t bytes_read = 0;
};

// Reads every complete record. A torn or checksum-failing final record is
// dropped and flagged; damage before the tail, or a record of another kind,
// raises MalformedLogError.
ReadResult read_all(const std::filesystem::path& path, LogKind kind);
ReadResult decode_all(std::span<const std::uint8_t> bytes, LogKind kind);

template <typename R>
std::vector<R> records_as(const ReadResult& r) {
  std::vector<R> out;
  out.reserve(r.records.size());
  for (const auto& rec : r.records) out.push_back(std::get<R>(rec));
  return out;
}

struct FlushPolicy {
  std::size_t group_size = 32;  // 1 = flush on every commit
};

// Buffered single-writer log stream. Records are durable only after flush();
// the group-commit policy flushes every `group_size` records.
class LogWriter {
 public:
  LogWriter(std::filesystem::path path, LogKind kind, FlushPolicy policy = {},
            IoFaults* faults = nullptr);

  // Returns the encoded size. Throws IoError if a triggered flush fails.
  std::size_t append(const LogRecord& r);
  void flush();

  LogKind kind() const { return kind_; }
  const std::filesystem::path& path() const { return path_; }
  std::size_t pending() const { return pending_records_; }
  std::uint64_t durable_records() const { return durable_records_; }
  std::uint64_t durable_bytes() const { return sink_.size(); }
  std::uint64_t appended_bytes() const { return appended_bytes_; }

 private:
  std::filesystem::path path_;
  LogKind kind_;
  FlushPolicy policy_;
  FileSink sink_;
  std::vector<std::uint8_t> buffer_;
  std::size_t pending_records_ = 0;
  std::uint64_t durable_records_ = 0;
  std::uint64_t appended_bytes_ = 0;
};

}  // namespace memlog
