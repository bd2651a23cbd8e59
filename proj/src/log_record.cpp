#include "memlog/log_record.hpp"

#include <algorithm>

#include "memlog/error.hpp"

namespace memlog {

std::string_view to_string(LogKind kind) {
  switch (kind) {
    case LogKind::Aries: return "aries";
    case LogKind::Command: return "command";
    case LogKind::Footprint: return "footprint";
  }
  return "unknown";
}

LogKind kind_of(const LogRecord& r) {
  return std::visit(
      [](const auto& rec) {
        using T = std::decay_t<decltype(rec)>;
        if constexpr (std::is_same_v<T, AriesRecord>) return LogKind::Aries;
        else if constexpr (std::is_same_v<T, CommandRecord>) return LogKind::Command;
        else return LogKind::Footprint;
      },
      r);
}

AriesRecord make_aries(const Transaction& t, const Schema& schema, const ClusterState& state,
                       std::optional<NodeId> only_node) {
  AriesRecord r;
  r.txn_id = t.id;
  r.timestamp = t.commit.value_or(0);
  for (const auto& w : t.writes) {
    const NodeId node = state.node_of(w.attr.tuple).value_or(0);
    if (only_node && node != *only_node) continue;
    r.writes.push_back({node, schema.table(w.attr.tuple.table).name, w.attr, w.old_value, w.new_value});
  }
  return r;
}

CommandRecord make_command(const Transaction& t) {
  return {t.id, t.commit.value_or(0), t.distributed(), t.proc, t.params};
}

FootprintRecord make_footprint(const Transaction& t, bool aries) {
  return {t.id, t.submit, t.commit.value_or(0), t.coordinator, aries, t.accesses()};
}

namespace {

void encode_payload(ByteWriter& w, const AriesRecord& r) {
  w.u64(r.txn_id);
  w.i64(r.timestamp);
  w.u32(static_cast<std::uint32_t>(r.writes.size()));
  for (const auto& x : r.writes) {
    w.u32(x.node);
    w.str(x.table);
    w.u32(x.attr.tuple.table);
    w.i64(x.attr.tuple.key);
    w.u16(static_cast<std::uint16_t>(x.attr.column));
    w.i64(x.old_value);
    w.i64(x.new_value);
  }
}

void encode_payload(ByteWriter& w, const CommandRecord& r) {
  w.u64(r.txn_id);
  w.i64(r.timestamp);
  w.u8(r.multi_partition ? 1 : 0);
  w.str(r.proc);
  w.u16(static_cast<std::uint16_t>(r.params.size()));
  for (Value v : r.params) w.i64(v);
}

void encode_payload(ByteWriter& w, const FootprintRecord& r) {
  w.u64(r.txn_id);
  w.i64(r.submit);
  w.i64(r.commit);
  w.u32(r.coordinator);
  w.u8(r.aries ? 1 : 0);
  w.u16(static_cast<std::uint16_t>(r.accesses.size()));
  for (const auto& a : r.accesses) {
    w.u32(a.attr.tuple.table);
    w.i64(a.attr.tuple.key);
    w.u16(static_cast<std::uint16_t>(a.attr.column));
    w.u8(static_cast<std::uint8_t>(a.mode));
  }
}

AriesRecord decode_aries(ByteReader& r) {
  AriesRecord out;
  out.txn_id = r.u64();
  out.timestamp = r.i64();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    AriesWrite x;
    x.node = r.u32();
    x.table = r.str();
    x.attr.tuple.table = r.u32();
    x.attr.tuple.key = r.i64();
    x.attr.column = r.u16();
    x.old_value = r.i64();
    x.new_value = r.i64();
    out.writes.push_back(std::move(x));
  }
  return out;
}

CommandRecord decode_command(ByteReader& r) {
  CommandRecord out;
  out.txn_id = r.u64();
  out.timestamp = r.i64();
  out.multi_partition = r.u8() != 0;
  out.proc = r.str();
  const std::uint16_t n = r.u16();
  out.params.reserve(n);
  for (std::uint16_t i = 0; i < n; ++i) out.params.push_back(r.i64());
  return out;
}

FootprintRecord decode_footprint(ByteReader& r) {
  FootprintRecord out;
  out.txn_id = r.u64();
  out.submit = r.i64();
  out.commit = r.i64();
  out.coordinator = r.u32();
  out.aries = r.u8() != 0;
  const std::uint16_t n = r.u16();
  out.accesses.reserve(n);
  for (std::uint16_t i = 0; i < n; ++i) {
    Access a;
    a.attr.tuple.table = r.u32();
    a.attr.tuple.key = r.i64();
    a.attr.column = r.u16();
    const std::uint8_t m = r.u8();
    if (m < 1 || m > 3) throw MalformedLogError("bad access mode");
    a.mode = static_cast<AccessMode>(m);
    out.accesses.push_back(a);
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode(const LogRecord& r) {
  ByteWriter payload;
  std::visit([&](const auto& rec) { encode_payload(payload, rec); }, r);
  const auto kind = static_cast<std::uint8_t>(kind_of(r));

  ByteWriter crc_input;
  crc_input.u8(kind);
  crc_input.bytes(payload.buffer());

  ByteWriter frame;
  frame.u32(static_cast<std::uint32_t>(payload.buffer().size()));
  frame.bytes(crc_input.buffer());
  frame.u32(crc32(crc_input.buffer()));
  return std::move(frame.buffer());
}

std::size_t encoded_size(const LogRecord& r) { return encode(r).size(); }

ReadResult decode_all(std::span<const std::uint8_t> bytes, LogKind kind) {
  ReadResult out;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t left = bytes.size() - pos;
    if (left < kFrameOverhead) {
      out.truncated = true;
      break;
    }
    ByteReader head(bytes.subspan(pos, 4));
    const std::size_t len = head.u32();
    if (left < kFrameOverhead + len) {
      out.truncated = true;
      break;
    }
    const auto body = bytes.subspan(pos + 4, 1 + len);
    ByteReader tail(bytes.subspan(pos + 5 + len, 4));
    const bool last = pos + kFrameOverhead + len == bytes.size();
    if (tail.u32() != crc32(body)) {
      if (last) {
        out.truncated = true;
        break;
      }
      throw MalformedLogError("checksum mismatch at offset " + std::to_string(pos));
    }
    if (body[0] != static_cast<std::uint8_t>(kind)) {
      throw MalformedLogError("unexpected record kind at offset " + std::to_string(pos));
    }
    ByteReader r(body.subspan(1));
    switch (kind) {
      case LogKind::Aries: out.records.emplace_back(decode_aries(r)); break;
      case LogKind::Command: out.records.emplace_back(decode_command(r)); break;
      case LogKind::Footprint: out.records.emplace_back(decode_footprint(r)); break;
    }
    if (!r.done()) throw MalformedLogError("payload length mismatch at offset " + std::to_string(pos));
    pos += kFrameOverhead + len;
  }
  out.bytes_read = bytes.size();
  return out;
}

ReadResult read_all(const std::filesystem::path& path, LogKind kind) {
  if (!std::filesystem::exists(path)) throw IoError("missing log " + path.string());
  const auto bytes = read_file(path);
  return decode_all(bytes, kind);
}

LogWriter::LogWriter(std::filesystem::path path, LogKind kind, FlushPolicy policy, IoFaults* faults)
    : path_(std::move(path)), kind_(kind), policy_(policy), sink_(path_, true, faults) {
  if (policy_.group_size == 0) policy_.group_size = 1;
}

std::size_t LogWriter::append(const LogRecord& r) {
  if (kind_of(r) != kind_) throw MalformedLogError("record kind does not match stream");
  const auto bytes = encode(r);
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
  ++pending_records_;
  appended_bytes_ += bytes.size();
  if (pending_records_ >= policy_.group_size) flush();
  return bytes.size();
}

void LogWriter::flush() {
  if (buffer_.empty()) return;
  sink_.write(buffer_);
  sink_.flush();
  durable_records_ += pending_records_;
  pending_records_ = 0;
  buffer_.clear();
}

}  // namespace memlog
