#include "memlog/dependency.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "memlog/error.hpp"

namespace memlog {

namespace {

// Per-tuple access modes of a footprint, tuples ascending.
std::vector<std::pair<TupleId, bool>> tuple_modes(std::span<const Access> accesses) {
  std::vector<std::pair<TupleId, bool>> out;
  out.reserve(accesses.size());
  for (const auto& a : accesses) out.emplace_back(a.attr.tuple, writes(a.mode));
  std::sort(out.begin(), out.end());
  std::vector<std::pair<TupleId, bool>> merged;
  for (const auto& e : out) {
    if (!merged.empty() && merged.back().first == e.first) {
      merged.back().second = merged.back().second || e.second;
    } else {
      merged.push_back(e);
    }
  }
  return merged;
}

}  // namespace

std::vector<NodeId> Placement::participants(std::span<const Access> accesses) const {
  std::vector<NodeId> out;
  for (const auto& a : accesses) {
    if (auto n = node_of(a.attr.tuple)) out.push_back(*n);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool competes(const FootprintRecord& ti, const FootprintRecord& tj) {
  if (!(tj.commit < ti.commit)) return false;
  const auto a = tuple_modes(ti.accesses);
  const auto b = tuple_modes(tj.accesses);
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) ++ia;
    else if (ib->first < ia->first) ++ib;
    else {
      if (ia->second || ib->second) return true;
      ++ia;
      ++ib;
    }
  }
  return false;
}

bool competes(const Transaction& ti, const Transaction& tj) {
  if (!ti.commit || !tj.commit) return false;
  return competes(make_footprint(ti), make_footprint(tj));
}

std::optional<std::size_t> DependencyGraph::position(TxnId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> DependencyGraph::roots() const {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < vertices_.size(); ++v) {
    if (in_[v].empty()) out.push_back(v);
  }
  return out;
}

std::size_t DependencyGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& e : in_) n += e.size();
  return n;
}

std::vector<std::pair<TxnId, TxnId>> DependencyGraph::edges() const {
  std::vector<std::pair<TxnId, TxnId>> out;
  out.reserve(edge_count());
  for (std::size_t v = 0; v < vertices_.size(); ++v) {
    for (std::size_t u : in_[v]) out.emplace_back(vertices_[u].id, vertices_[v].id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<std::size_t> DependencyGraph::last_competitor(std::size_t pos) const {
  const auto& in = in_.at(pos);
  if (in.empty()) return std::nullopt;
  return in.back();
}

DependencyGraph build_graph(std::span<const FootprintRecord> footprints, const Placement* placement) {
  DependencyGraph g;
  const std::size_t n = footprints.size();
  g.vertices_.reserve(n);
  g.in_.resize(n);
  g.out_.resize(n);

  struct TupleHistory {
    std::vector<std::size_t> accessors;
    std::vector<std::size_t> writers;
  };
  std::unordered_map<TupleId, TupleHistory> history;

  for (std::size_t p = 0; p < n; ++p) {
    const auto& f = footprints[p];
    if (!g.index_.emplace(f.txn_id, p).second) {
      throw MalformedLogError("duplicate transaction id " + std::to_string(f.txn_id));
    }
    if (p > 0 && f.commit <= footprints[p - 1].commit) {
      throw MalformedLogError("footprints are not in commit order at txn " + std::to_string(f.txn_id));
    }
    Vertex v{f.txn_id, f.submit, f.commit, f.coordinator, f.aries, {}};
    if (placement) v.participants = placement->participants(f.accesses);
    g.vertices_.push_back(std::move(v));

    auto& in = g.in_[p];
    const auto modes = tuple_modes(f.accesses);
    for (const auto& [tuple, writes_tuple] : modes) {
      auto& h = history[tuple];
      const auto& src = writes_tuple ? h.accessors : h.writers;
      in.insert(in.end(), src.begin(), src.end());
    }
    std::sort(in.begin(), in.end());
    in.erase(std::unique(in.begin(), in.end()), in.end());
    for (std::size_t u : in) g.out_[u].push_back(p);
    for (const auto& [tuple, writes_tuple] : modes) {
      auto& h = history[tuple];
      h.accessors.push_back(p);
      if (writes_tuple) h.writers.push_back(p);
    }
  }
  return g;
}

namespace {

std::vector<char> closure_from(const DependencyGraph& g, std::vector<std::size_t> frontier) {
  std::vector<char> in_set(g.size(), 0);
  for (std::size_t v : frontier) in_set[v] = 1;
  while (!frontier.empty()) {
    const std::size_t v = frontier.back();
    frontier.pop_back();
    for (std::size_t u : g.competed(v)) {
      if (!in_set[u]) {
        in_set[u] = 1;
        frontier.push_back(u);
      }
    }
  }
  return in_set;
}

}  // namespace

RecoverySet recovery_set(const DependencyGraph& g, NodeId failed, std::uint32_t node_count) {
  if (failed >= node_count) throw ConfigError("unknown node id " + std::to_string(failed));
  std::vector<std::size_t> initial;
  for (std::size_t v = 0; v < g.size(); ++v) {
    const auto& parts = g.vertex(v).participants;
    if (std::binary_search(parts.begin(), parts.end(), failed)) initial.push_back(v);
  }
  const auto in_set = closure_from(g, std::move(initial));

  RecoverySet rs;
  rs.failed = failed;
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (!in_set[v]) continue;
    rs.members.push_back(g.vertex(v).id);
    const auto& comp = g.competed(v);
    const bool root = std::none_of(comp.begin(), comp.end(), [&](std::size_t u) { return in_set[u] != 0; });
    if (root) rs.roots.push_back(g.vertex(v).id);
  }
  return rs;
}

std::vector<TxnId> complete_recovery_set(const DependencyGraph& g, TxnId txn) {
  auto pos = g.position(txn);
  if (!pos) throw ConfigError("unknown transaction " + std::to_string(txn));
  const auto in_set = closure_from(g, {*pos});
  std::vector<TxnId> out;
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (in_set[v]) out.push_back(g.vertex(v).id);
  }
  return out;
}

std::vector<ProcessingGroup> create_groups(const DependencyGraph& g) {
  std::vector<ProcessingGroup> groups;
  for (std::size_t root : g.roots()) {
    std::vector<char> seen(g.size(), 0);
    std::vector<std::size_t> stack{root};
    seen[root] = 1;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      for (std::size_t w : g.dependents(v)) {
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
      }
    }
    ProcessingGroup pg;
    pg.id = groups.size();
    for (std::size_t v = 0; v < g.size(); ++v) {
      if (seen[v]) pg.members.push_back(g.vertex(v).id);
    }
    groups.push_back(std::move(pg));
  }
  return groups;
}

std::string to_dot(const DependencyGraph& g) {
  std::ostringstream os;
  os << "digraph dependency {\n";
  os << "  root [label=\"checkpoint\"];\n";
  for (const auto& v : g.vertices()) {
    os << "  t" << v.id << " [s=" << v.submit << ", c=" << v.commit << ", coordinator=" << v.coordinator
       << "];\n";
  }
  for (std::size_t v : g.roots()) os << "  root -> t" << g.vertex(v).id << ";\n";
  for (const auto& [from, to] : g.edges()) os << "  t" << from << " -> t" << to << ";\n";
  os << "}\n";
  return os.str();
}

}  // namespace memlog
