#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "memlog/cost_model.hpp"
#include "memlog/dependency.hpp"
#include "memlog/log_set.hpp"
#include "memlog/store.hpp"

namespace memlog {

enum class Strategy { Aries, Command, DisCommand, Adaptive };

std::string_view to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view s);

// How recovery steps are applied to the workspace. Simulated timings come
// from the plan and do not depend on this.
struct ExecOptions {
  enum class Order { Commit, Random, Threaded };
  Order order = Order::Commit;
  std::uint64_t seed = 0;  // Random
  unsigned threads = 4;    // Threaded
};

struct RecoveryInputs {
  const Schema* schema = nullptr;
  const ProcedureRegistry* procedures = nullptr;
  std::filesystem::path snapshot_dir;
  std::uint64_t snapshot_id = 0;
  LogLayout logs;
  CostModel cost;
  SimCosts sim;
  ExecOptions exec;
};

struct RecoveryStep {
  TxnId txn = 0;
  Tick commit = 0;
  NodeId node = 0;          // executing node; the replacement keeps the failed id
  bool reexecute = true;    // false: install the data record's images
  Tick cost = 0;
  std::vector<std::size_t> waits;  // steps that must finish first
  std::uint32_t lane = 0;
  Tick start = 0;
  Tick finish = 0;
};

struct RecoveryPlan {
  Strategy strategy = Strategy::Aries;
  std::uint32_t lanes_per_node = 1;
  std::vector<RecoveryStep> steps;  // commit order
  Tick makespan = 0;
};

struct RecoveryMetrics {
  Strategy strategy = Strategy::Aries;
  NodeId failed = 0;
  std::uint64_t reprocessed = 0;     // re-executed + image-applied
  std::uint64_t reexecuted = 0;
  std::uint64_t images_applied = 0;
  Tick recovery_ticks = 0;           // read + graph build + replay makespan
  Tick graph_build_ticks = 0;
  std::uint64_t bytes_read = 0;
};

struct RecoveryResult {
  ClusterState state;
  RecoveryMetrics metrics;
  RecoveryPlan plan;
  std::vector<TxnId> execution_order;  // as applied to the workspace
};

// Replay target: snapshot values plus every replayed write, versioned by
// commit tick. A read at tick c sees the latest version before c.
class VersionedWorkspace {
 public:
  explicit VersionedWorkspace(ClusterState base) : base_(std::move(base)) {}

  std::optional<Value> read_before(const AttrId& a, Tick tick) const;
  void put(const AttrId& a, Tick tick, Value v);
  // Snapshot rows of `node` with the latest version of each attribute.
  Partition materialize(NodeId node) const;
  const ClusterState& base() const { return base_; }

 private:
  ClusterState base_;
  mutable std::shared_mutex mu_;
  std::unordered_map<AttrId, std::map<Tick, Value>> versions_;
};

// Loads every node's snapshot file. Adds the bytes read to `bytes`.
ClusterState load_snapshot(const Schema& schema, const std::filesystem::path& dir, std::uint64_t id,
                           std::uint64_t* bytes = nullptr);

// Every node's footprints for the epoch, merged into commit order.
std::vector<FootprintRecord> load_footprints(const LogLayout& logs, std::uint32_t node_count,
                                             std::uint64_t* bytes = nullptr);

// The survivors' live state plus the failed node's rebuilt partition.
RecoveryResult recover_aries(const RecoveryInputs& in, const ClusterState& survivors, NodeId failed);
RecoveryResult recover_command_serial(const RecoveryInputs& in, const ClusterState& survivors, NodeId failed);
RecoveryResult recover_dis_command(const RecoveryInputs& in, const ClusterState& survivors, NodeId failed);
RecoveryResult recover_dis_command(const RecoveryInputs& in, const ClusterState& survivors, NodeId failed,
                                   const DependencyGraph& g, std::uint64_t footprint_bytes);
// `aries_set` overrides the decision flags carried by the footprints.
// prune=false keeps expanding through data-logged transactions.
RecoveryResult recover_adaptive(const RecoveryInputs& in, const ClusterState& survivors, NodeId failed,
                                std::optional<std::vector<TxnId>> aries_set = std::nullopt, bool prune = true);

RecoveryResult recover(Strategy s, const RecoveryInputs& in, const ClusterState& survivors, NodeId failed);

// Assigns lanes and simulated start/finish times; steps run in commit
// order on the earliest-free lane of their node once their waits finish.
void schedule(RecoveryPlan& plan, std::uint32_t node_count);

}  // namespace memlog
