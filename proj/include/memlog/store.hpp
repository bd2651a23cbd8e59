#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "memlog/types.hpp"

namespace memlog {

struct TableDef {
  std::string name;
  std::uint32_t arity = 1;
};

class Schema {
 public:
  TableId add_table(std::string name, std::uint32_t arity);
  const TableDef& table(TableId id) const;
  std::optional<TableId> find(std::string_view name) const;
  std::size_t size() const { return tables_.size(); }

 private:
  std::vector<TableDef> tables_;
};

using Row = std::vector<Value>;
using Partition = std::map<TupleId, Row>;

// The only view of the database a stored procedure gets. All reads and
// writes go through it so that read/write sets are captured exactly.
class ProcContext {
 public:
  virtual ~ProcContext() = default;
  virtual Value read(const AttrId& attr) = 0;
  virtual void write(const AttrId& attr, Value v) = 0;
};

// A stored procedure must be a pure function of (params, values read).
using Procedure = std::function<void(ProcContext&, std::span<const Value>)>;

class ProcedureRegistry {
 public:
  void add(std::string name, Procedure body);
  const Procedure* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }
  std::vector<std::string> names() const;

 private:
  std::map<std::string, Procedure, std::less<>> procs_;
};

// Backing store a procedure executes against: the live cluster during
// processing, a recovery workspace during replay.
class AttrSource {
 public:
  virtual ~AttrSource() = default;
  virtual std::optional<Value> load(const AttrId& attr) const = 0;
};

struct WriteEntry {
  AttrId attr;
  Value old_value = 0;
  Value new_value = 0;

  bool operator==(const WriteEntry&) const = default;
};

struct Execution {
  std::vector<AttrId> reads;        // sorted, unique
  std::vector<WriteEntry> writes;   // sorted by attr, one entry per attribute
};

// Runs `proc` against `source` without touching it. Throws AbortError for
// an unknown procedure or a missing tuple/column.
Execution run_procedure(const ProcedureRegistry& registry, std::string_view proc,
                        std::span<const Value> params, const AttrSource& source);

struct Transaction {
  TxnId id = 0;
  std::string proc;
  std::vector<Value> params;
  Tick submit = 0;
  std::optional<Tick> commit;
  NodeId coordinator = 0;
  std::vector<NodeId> participants;  // f(t), sorted
  std::vector<AttrId> reads;
  std::vector<WriteEntry> writes;

  bool distributed() const { return participants.size() > 1; }
  // read_set ∪ write_set with merged modes, sorted by attribute.
  std::vector<Access> accesses() const;
  std::vector<TupleId> tuples() const;
};

struct CheckpointInfo {
  std::uint64_t snapshot_id = 0;
  Tick tick = 0;
};

struct ClusterState {
  std::uint32_t node_count = 0;
  std::unordered_map<TupleId, NodeId> partition_map;
  std::vector<Partition> store;  // indexed by node
  CheckpointInfo last_checkpoint;
  std::vector<Transaction> committed_log;  // since last checkpoint, commit order

  std::optional<NodeId> node_of(const TupleId& t) const;
  std::optional<Value> value(const AttrId& a) const;
  std::vector<TxnId> transactions_of(NodeId node) const;  // f^{-1}(node)
};

// Exact data equality over every partition.
bool same_data(const ClusterState& a, const ClusterState& b);
// Human-readable list of the first `limit` differing attributes.
std::string diff_data(const ClusterState& a, const ClusterState& b, std::size_t limit = 10);

struct PreparedTxn {
  Transaction txn;
};

class IoFaults;

class Engine {
 public:
  Engine(Schema schema, std::uint32_t node_count, std::filesystem::path snapshot_dir);

  void register_procedure(std::string name, Procedure body);
  const ProcedureRegistry& procedures() const { return registry_; }
  const Schema& schema() const { return schema_; }

  void insert(NodeId node, const TupleId& tuple, Row row);

  // Runs the procedure and computes read/write sets, participants and
  // coordinator. Nothing is applied until commit().
  PreparedTxn prepare(std::string_view proc, std::span<const Value> params, Tick submit);
  const Transaction& commit(PreparedTxn prepared, Tick commit_tick);
  // prepare + commit at the next free commit tick.
  Transaction execute(std::string_view proc, std::span<const Value> params, Tick submit);

  std::uint64_t checkpoint(IoFaults* faults = nullptr);
  ClusterState restore_snapshot(std::uint64_t snapshot_id) const;

  // Drops the node's volatile partition.
  void crash(NodeId node);
  void install_partition(NodeId node, Partition rows);

  const ClusterState& state() const { return state_; }
  ClusterState& mutable_state() { return state_; }
  Tick last_commit() const { return last_commit_; }
  const std::filesystem::path& snapshot_dir() const { return snapshot_dir_; }

 private:
  Schema schema_;
  ProcedureRegistry registry_;
  ClusterState state_;
  std::filesystem::path snapshot_dir_;
  TxnId next_txn_ = 1;
  Tick last_commit_ = 0;
};

// Coordinator choice: participant holding the most accessed tuples, lowest
// node id on ties.
NodeId choose_coordinator(const std::vector<TupleId>& tuples, const ClusterState& state);

}  // namespace memlog
