#include "memlog/snapshot.hpp"

#include <algorithm>
#include <string>

#include "memlog/error.hpp"
#include "memlog/io.hpp"

namespace memlog::snapshot {

namespace fs = std::filesystem;

namespace {

constexpr char kManifestMagic[8] = {'M', 'L', 'S', 'M', 'A', 'N', '0', '1'};

void write_atomically(const fs::path& path, const ByteWriter& w, IoFaults* faults) {
  const fs::path tmp = path.string() + ".tmp";
  try {
    FileSink sink(tmp, true, faults);
    sink.write(w.buffer());
    sink.flush();
    sink.close();
  } catch (const IoError&) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
  fs::rename(tmp, path);
}

void seal(ByteWriter& w) {
  const std::uint32_t c = crc32(w.buffer());
  w.u32(c);
}

std::vector<std::uint8_t> load_checked(const fs::path& path) {
  if (!fs::exists(path)) throw SnapshotError("missing snapshot file " + path.string());
  std::vector<std::uint8_t> bytes = read_file(path);
  if (bytes.size() < 12) throw SnapshotError("truncated snapshot file " + path.string());
  const std::span<const std::uint8_t> body(bytes.data(), bytes.size() - 4);
  ByteReader tail(std::span<const std::uint8_t>(bytes.data() + body.size(), 4));
  if (tail.u32() != crc32(body)) throw SnapshotError("checksum mismatch in " + path.string());
  bytes.resize(body.size());
  return bytes;
}

void expect_magic(ByteReader& r, const char (&magic)[8], const fs::path& path) {
  for (char c : magic) {
    if (r.u8() != static_cast<std::uint8_t>(c)) throw SnapshotError("bad magic in " + path.string());
  }
}

}  // namespace

fs::path node_file(const fs::path& dir, std::uint64_t id, NodeId node) {
  return dir / ("snap-" + std::to_string(id) + "-node-" + std::to_string(node) + ".bin");
}

fs::path manifest_file(const fs::path& dir, std::uint64_t id) {
  return dir / ("snap-" + std::to_string(id) + ".manifest");
}

void write_node(const fs::path& dir, std::uint64_t id, Tick tick, NodeId node, const Schema& schema,
                const Partition& rows, IoFaults* faults) {
  ByteWriter w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u64(id);
  w.i64(tick);
  w.u32(node);
  w.u32(static_cast<std::uint32_t>(schema.size()));
  // Partition is ordered by (table, key), so each table is a contiguous run.
  auto it = rows.begin();
  for (TableId t = 0; t < schema.size(); ++t) {
    const std::uint32_t arity = schema.table(t).arity;
    auto end = std::find_if(it, rows.end(), [t](const auto& kv) { return kv.first.table != t; });
    w.u32(t);
    w.u32(arity);
    w.u64(static_cast<std::uint64_t>(std::distance(it, end)));
    for (; it != end; ++it) {
      w.i64(it->first.key);
      for (std::uint32_t c = 0; c < arity; ++c) w.i64(it->second.at(c));
    }
  }
  seal(w);
  write_atomically(node_file(dir, id, node), w, faults);
}

void write_manifest(const fs::path& dir, std::uint64_t id, Tick tick, std::uint32_t node_count,
                    IoFaults* faults) {
  ByteWriter w;
  for (char c : kManifestMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u64(id);
  w.i64(tick);
  w.u32(node_count);
  seal(w);
  write_atomically(manifest_file(dir, id), w, faults);
}

Manifest read_manifest(const fs::path& dir, std::uint64_t id) {
  const fs::path path = manifest_file(dir, id);
  const auto bytes = load_checked(path);
  ByteReader r(bytes);
  expect_magic(r, kManifestMagic, path);
  Manifest m;
  m.id = r.u64();
  m.tick = r.i64();
  m.node_count = r.u32();
  if (m.id != id) throw SnapshotError("manifest id mismatch in " + path.string());
  return m;
}

Partition read_node(const fs::path& dir, std::uint64_t id, NodeId node, const Schema& schema) {
  const fs::path path = node_file(dir, id, node);
  const auto bytes = load_checked(path);
  try {
    ByteReader r(bytes);
    expect_magic(r, kMagic, path);
    if (r.u64() != id) throw SnapshotError("snapshot id mismatch in " + path.string());
    (void)r.i64();
    if (r.u32() != node) throw SnapshotError("node mismatch in " + path.string());
    const std::uint32_t tables = r.u32();
    if (tables != schema.size()) throw SnapshotError("schema mismatch in " + path.string());
    Partition rows;
    for (std::uint32_t i = 0; i < tables; ++i) {
      const TableId t = r.u32();
      const std::uint32_t arity = r.u32();
      if (t != i || arity != schema.table(t).arity) throw SnapshotError("table layout mismatch in " + path.string());
      const std::uint64_t n = r.u64();
      for (std::uint64_t k = 0; k < n; ++k) {
        const std::int64_t key = r.i64();
        Row row(arity);
        for (auto& v : row) v = r.i64();
        rows.emplace_hint(rows.end(), TupleId{t, key}, std::move(row));
      }
    }
    if (!r.done()) throw SnapshotError("trailing bytes in " + path.string());
    return rows;
  } catch (const MalformedLogError& e) {
    throw SnapshotError(std::string("corrupt snapshot: ") + e.what());
  }
}

std::optional<std::uint64_t> latest(const fs::path& dir) {
  std::optional<std::uint64_t> best;
  if (!fs::exists(dir)) return best;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("snap-", 0) != 0 || entry.path().extension() != ".manifest") continue;
    const std::uint64_t id = std::stoull(name.substr(5, name.size() - 5 - 9));
    if (!best || id > *best) best = id;
  }
  return best;
}

}  // namespace memlog::snapshot
