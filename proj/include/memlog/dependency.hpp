#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "memlog/log_record.hpp"
#include "memlog/store.hpp"
#include "memlog/types.hpp"

namespace memlog {

// Non-owning view of the tuple → node map.
class Placement {
 public:
  Placement(std::uint32_t node_count, const std::unordered_map<TupleId, NodeId>& map)
      : node_count_(node_count), map_(&map) {}
  explicit Placement(const ClusterState& s) : Placement(s.node_count, s.partition_map) {}

  std::optional<NodeId> node_of(const TupleId& t) const {
    auto it = map_->find(t);
    if (it == map_->end()) return std::nullopt;
    return it->second;
  }
  std::uint32_t node_count() const { return node_count_; }
  std::vector<NodeId> participants(std::span<const Access> accesses) const;

 private:
  std::uint32_t node_count_;
  const std::unordered_map<TupleId, NodeId>* map_;
};

// t_i competes with t_j: t_j committed earlier and the two share a tuple
// that at least one of them writes.
bool competes(const FootprintRecord& ti, const FootprintRecord& tj);
bool competes(const Transaction& ti, const Transaction& tj);

struct Vertex {
  TxnId id = 0;
  Tick submit = 0;
  Tick commit = 0;
  NodeId coordinator = 0;
  bool aries = false;
  std::vector<NodeId> participants;

  bool operator==(const Vertex&) const = default;
};

// Competition DAG over the transactions since the last checkpoint. Vertex
// positions follow commit order; an edge u → v means u ∈ ⊙(v). The
// synthetic checkpoint root connects to every vertex without in-edges.
class DependencyGraph {
 public:
  std::size_t size() const { return vertices_.size(); }
  const std::vector<Vertex>& vertices() const { return vertices_; }
  const Vertex& vertex(std::size_t pos) const { return vertices_.at(pos); }
  std::optional<std::size_t> position(TxnId id) const;

  // ⊙(v) as positions, ascending.
  const std::vector<std::size_t>& competed(std::size_t pos) const { return in_.at(pos); }
  // Transactions that compete with v, ascending.
  const std::vector<std::size_t>& dependents(std::size_t pos) const { return out_.at(pos); }
  // Children of the checkpoint root.
  std::vector<std::size_t> roots() const;
  std::size_t edge_count() const;
  // Directed edges as (from id, to id), sorted.
  std::vector<std::pair<TxnId, TxnId>> edges() const;
  // The latest-committed member of ⊙(v), if any. Diagnostic view only.
  std::optional<std::size_t> last_competitor(std::size_t pos) const;

  bool operator==(const DependencyGraph&) const = default;

 private:
  friend DependencyGraph build_graph(std::span<const FootprintRecord>, const Placement*);
  std::vector<Vertex> vertices_;
  std::vector<std::vector<std::size_t>> in_;
  std::vector<std::vector<std::size_t>> out_;
  std::unordered_map<TxnId, std::size_t> index_;
};

// Footprints must be commit-ordered. Without a placement, vertices carry
// no participant sets and recovery_set() cannot be used.
DependencyGraph build_graph(std::span<const FootprintRecord> footprints,
                            const Placement* placement = nullptr);

struct RecoverySet {
  NodeId failed = 0;
  std::vector<TxnId> members;  // commit order
  std::vector<TxnId> roots;    // members without competitors inside the set
};

// Least fixpoint of T ∪ g(T) from f^{-1}(failed).
RecoverySet recovery_set(const DependencyGraph& g, NodeId failed, std::uint32_t node_count);
// Closure of a single transaction under ⊙, the transaction included.
std::vector<TxnId> complete_recovery_set(const DependencyGraph& g, TxnId txn);

struct ProcessingGroup {
  std::size_t id = 0;
  std::vector<TxnId> members;  // commit order; members[0] is the group's root
};

std::vector<ProcessingGroup> create_groups(const DependencyGraph& g);

// DOT adjacency dump: one line per vertex with s, c and coordinator, then
// one line per edge.
std::string to_dot(const DependencyGraph& g);

}  // namespace memlog
