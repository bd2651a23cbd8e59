#include "memlog/store.hpp"

#include <algorithm>
#include <sstream>

#include "memlog/error.hpp"
#include "memlog/io.hpp"
#include "memlog/snapshot.hpp"

namespace memlog {

TableId Schema::add_table(std::string name, std::uint32_t arity) {
  if (arity == 0) throw ConfigError("table arity must be positive");
  if (find(name)) throw ConfigError("duplicate table " + name);
  tables_.push_back({std::move(name), arity});
  return static_cast<TableId>(tables_.size() - 1);
}

const TableDef& Schema::table(TableId id) const {
  if (id >= tables_.size()) throw ConfigError("unknown table id " + std::to_string(id));
  return tables_[id];
}

std::optional<TableId> Schema::find(std::string_view name) const {
  for (std::size_t i = 0; i < tables_.size(); ++i) {
    if (tables_[i].name == name) return static_cast<TableId>(i);
  }
  return std::nullopt;
}

void ProcedureRegistry::add(std::string name, Procedure body) {
  if (!body) throw RegistrationError("empty procedure body for " + name);
  if (procs_.contains(name)) throw RegistrationError("procedure already registered: " + name);
  procs_.emplace(std::move(name), std::move(body));
}

const Procedure* ProcedureRegistry::find(std::string_view name) const {
  auto it = procs_.find(name);
  return it == procs_.end() ? nullptr : &it->second;
}

std::vector<std::string> ProcedureRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : procs_) out.push_back(name);
  return out;
}

namespace {

class RecordingContext final : public ProcContext {
 public:
  explicit RecordingContext(const AttrSource& source) : source_(source) {}

  Value read(const AttrId& attr) override {
    reads_.push_back(attr);
    if (auto it = pending_.find(attr); it != pending_.end()) return it->second.new_value;
    return fetch(attr);
  }

  void write(const AttrId& attr, Value v) override {
    auto it = pending_.find(attr);
    if (it == pending_.end()) {
      pending_.emplace(attr, WriteEntry{attr, fetch(attr), v});
    } else {
      it->second.new_value = v;
    }
  }

  Execution finish() && {
    Execution e;
    std::sort(reads_.begin(), reads_.end());
    reads_.erase(std::unique(reads_.begin(), reads_.end()), reads_.end());
    e.reads = std::move(reads_);
    e.writes.reserve(pending_.size());
    for (auto& [_, w] : pending_) e.writes.push_back(w);
    return e;
  }

 private:
  Value fetch(const AttrId& attr) const {
    auto v = source_.load(attr);
    if (!v) {
      std::ostringstream os;
      os << "missing attribute " << attr;
      throw AbortError(os.str());
    }
    return *v;
  }

  const AttrSource& source_;
  std::vector<AttrId> reads_;
  std::map<AttrId, WriteEntry> pending_;
};

class ClusterSource final : public AttrSource {
 public:
  explicit ClusterSource(const ClusterState& s) : state_(s) {}
  std::optional<Value> load(const AttrId& attr) const override { return state_.value(attr); }

 private:
  const ClusterState& state_;
};

}  // namespace

Execution run_procedure(const ProcedureRegistry& registry, std::string_view proc,
                        std::span<const Value> params, const AttrSource& source) {
  const Procedure* body = registry.find(proc);
  if (!body) throw AbortError("unknown procedure " + std::string(proc));
  RecordingContext ctx(source);
  (*body)(ctx, params);
  return std::move(ctx).finish();
}

std::vector<Access> Transaction::accesses() const {
  std::map<AttrId, AccessMode> modes;
  for (const auto& a : reads) modes[a] = AccessMode::Read;
  for (const auto& w : writes) {
    auto [it, fresh] = modes.try_emplace(w.attr, AccessMode::Write);
    if (!fresh) it->second = merge(it->second, AccessMode::Write);
  }
  std::vector<Access> out;
  out.reserve(modes.size());
  for (const auto& [attr, mode] : modes) out.push_back({attr, mode});
  return out;
}

std::vector<TupleId> Transaction::tuples() const {
  std::vector<TupleId> out;
  for (const auto& a : reads) out.push_back(a.tuple);
  for (const auto& w : writes) out.push_back(w.attr.tuple);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::optional<NodeId> ClusterState::node_of(const TupleId& t) const {
  auto it = partition_map.find(t);
  if (it == partition_map.end()) return std::nullopt;
  return it->second;
}

std::optional<Value> ClusterState::value(const AttrId& a) const {
  auto node = node_of(a.tuple);
  if (!node || *node >= store.size()) return std::nullopt;
  const auto& part = store[*node];
  auto it = part.find(a.tuple);
  if (it == part.end() || a.column >= it->second.size()) return std::nullopt;
  return it->second[a.column];
}

std::vector<TxnId> ClusterState::transactions_of(NodeId node) const {
  std::vector<TxnId> out;
  for (const auto& t : committed_log) {
    if (std::binary_search(t.participants.begin(), t.participants.end(), node)) out.push_back(t.id);
  }
  return out;
}

bool same_data(const ClusterState& a, const ClusterState& b) {
  return a.store == b.store;
}

std::string diff_data(const ClusterState& a, const ClusterState& b, std::size_t limit) {
  std::ostringstream os;
  std::size_t shown = 0;
  const std::size_t nodes = std::max(a.store.size(), b.store.size());
  static const Partition kEmpty;
  for (std::size_t n = 0; n < nodes && shown < limit; ++n) {
    const Partition& pa = n < a.store.size() ? a.store[n] : kEmpty;
    const Partition& pb = n < b.store.size() ? b.store[n] : kEmpty;
    auto ia = pa.begin();
    auto ib = pb.begin();
    while ((ia != pa.end() || ib != pb.end()) && shown < limit) {
      if (ib == pb.end() || (ia != pa.end() && ia->first < ib->first)) {
        os << "node " << n << " tuple " << ia->first << " only on left\n";
        ++ia;
        ++shown;
      } else if (ia == pa.end() || ib->first < ia->first) {
        os << "node " << n << " tuple " << ib->first << " only on right\n";
        ++ib;
        ++shown;
      } else {
        for (std::size_t c = 0; c < std::max(ia->second.size(), ib->second.size()) && shown < limit; ++c) {
          const Value va = c < ia->second.size() ? ia->second[c] : 0;
          const Value vb = c < ib->second.size() ? ib->second[c] : 0;
          if (va != vb) {
            os << "node " << n << " attr " << ia->first << '.' << c << ": " << va << " != " << vb << '\n';
            ++shown;
          }
        }
        ++ia;
        ++ib;
      }
    }
  }
  return os.str();
}

NodeId choose_coordinator(const std::vector<TupleId>& tuples, const ClusterState& state) {
  std::map<NodeId, std::size_t> counts;
  for (const auto& t : tuples) {
    if (auto n = state.node_of(t)) ++counts[*n];
  }
  NodeId best = 0;
  std::size_t best_count = 0;
  for (const auto& [node, count] : counts) {  // ascending node id keeps ties on the lowest
    if (count > best_count) {
      best = node;
      best_count = count;
    }
  }
  return best;
}

Engine::Engine(Schema schema, std::uint32_t node_count, std::filesystem::path snapshot_dir)
    : schema_(std::move(schema)), snapshot_dir_(std::move(snapshot_dir)) {
  if (node_count == 0) throw ConfigError("cluster needs at least one node");
  state_.node_count = node_count;
  state_.store.resize(node_count);
  std::filesystem::create_directories(snapshot_dir_);
}

void Engine::register_procedure(std::string name, Procedure body) {
  registry_.add(std::move(name), std::move(body));
}

void Engine::insert(NodeId node, const TupleId& tuple, Row row) {
  if (node >= state_.node_count) throw ConfigError("unknown node " + std::to_string(node));
  if (tuple.key < 0) throw ConfigError("tuple keys must be non-negative");
  if (row.size() != schema_.table(tuple.table).arity) throw ConfigError("row arity mismatch");
  auto [it, fresh] = state_.partition_map.try_emplace(tuple, node);
  if (!fresh && it->second != node) throw ConfigError("tuple already placed on another node");
  state_.store[node][tuple] = std::move(row);
}

PreparedTxn Engine::prepare(std::string_view proc, std::span<const Value> params, Tick submit) {
  ClusterSource source(state_);
  Execution exec = run_procedure(registry_, proc, params, source);

  PreparedTxn p;
  Transaction& t = p.txn;
  t.id = next_txn_++;
  t.proc = std::string(proc);
  t.params.assign(params.begin(), params.end());
  t.submit = submit;
  t.reads = std::move(exec.reads);
  t.writes = std::move(exec.writes);
  const auto tuples = t.tuples();
  for (const auto& tu : tuples) {
    if (auto n = state_.node_of(tu)) t.participants.push_back(*n);
  }
  std::sort(t.participants.begin(), t.participants.end());
  t.participants.erase(std::unique(t.participants.begin(), t.participants.end()), t.participants.end());
  t.coordinator = choose_coordinator(tuples, state_);
  return p;
}

const Transaction& Engine::commit(PreparedTxn prepared, Tick commit_tick) {
  Transaction& t = prepared.txn;
  if (commit_tick <= last_commit_) throw Error("commit ticks must be strictly increasing");
  if (commit_tick <= t.submit) throw Error("commit tick must follow submit tick");
  for (const auto& w : t.writes) {
    const NodeId n = state_.partition_map.at(w.attr.tuple);
    state_.store[n].at(w.attr.tuple).at(w.attr.column) = w.new_value;
  }
  t.commit = commit_tick;
  last_commit_ = commit_tick;
  state_.committed_log.push_back(std::move(t));
  return state_.committed_log.back();
}

Transaction Engine::execute(std::string_view proc, std::span<const Value> params, Tick submit) {
  PreparedTxn p = prepare(proc, params, submit);
  const Tick c = std::max(last_commit_, submit) + 1;
  return commit(std::move(p), c);
}

std::uint64_t Engine::checkpoint(IoFaults* faults) {
  const std::uint64_t id = state_.last_checkpoint.snapshot_id + 1;
  const Tick tick = last_commit_;
  for (NodeId n = 0; n < state_.node_count; ++n) {
    snapshot::write_node(snapshot_dir_, id, tick, n, schema_, state_.store[n], faults);
  }
  snapshot::write_manifest(snapshot_dir_, id, tick, state_.node_count, faults);
  state_.last_checkpoint = {id, tick};
  state_.committed_log.clear();
  return id;
}

ClusterState Engine::restore_snapshot(std::uint64_t snapshot_id) const {
  const auto m = snapshot::read_manifest(snapshot_dir_, snapshot_id);
  if (m.node_count != state_.node_count) throw SnapshotError("snapshot node count mismatch");
  ClusterState s;
  s.node_count = m.node_count;
  s.store.resize(m.node_count);
  for (NodeId n = 0; n < m.node_count; ++n) {
    s.store[n] = snapshot::read_node(snapshot_dir_, snapshot_id, n, schema_);
    for (const auto& [tuple, _] : s.store[n]) s.partition_map.emplace(tuple, n);
  }
  s.last_checkpoint = {m.id, m.tick};
  return s;
}

void Engine::crash(NodeId node) {
  if (node >= state_.node_count) throw ConfigError("unknown node " + std::to_string(node));
  state_.store[node].clear();
}

void Engine::install_partition(NodeId node, Partition rows) {
  if (node >= state_.node_count) throw ConfigError("unknown node " + std::to_string(node));
  state_.store[node] = std::move(rows);
}

}  // namespace memlog
