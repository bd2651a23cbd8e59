// Fixtures and brute-force oracles shared by the unit and acceptance tests.
// The oracles work from raw footprints with plain nested loops and never
// call the index or graph code they are checked against.
#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <unistd.h>
#include <unordered_map>
#include <vector>

#include "memlog/adaptive.hpp"
#include "memlog/dependency.hpp"
#include "memlog/experiment.hpp"
#include "memlog/recovery.hpp"
#include "memlog/rng.hpp"

namespace memlog::test {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("memlog-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline AttrId attr(TableId table, std::int64_t key, std::uint32_t col = 0) { return {{table, key}, col}; }

inline std::vector<Access> normalize(std::vector<Access> a) {
  std::sort(a.begin(), a.end(), [](const Access& x, const Access& y) { return x.attr < y.attr; });
  std::vector<Access> out;
  for (const auto& e : a) {
    if (!out.empty() && out.back().attr == e.attr) out.back().mode = merge(out.back().mode, e.mode);
    else out.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Running example: seven transactions on two nodes. x_i is tuple i of table 0
// (one column). The first node in the narrative is node 0 here, the second
// node 1.
//   node 0: x1 x3 x4 x7      node 1: x2 x6 x8 x9 x10
//   t1 f(x2 -> x1)   t2 x1 += 1, x3 = 2 x1   t3 f(x8 -> x9)   t4 f(x3 -> x4)
//   t5 f(x9 -> x10)  t6 f(x1 -> x6)          t7 f(x6 -> x7)
struct Example {
  static constexpr TableId kTable = 0;
  static constexpr NodeId kFailed = 0;
  std::uint32_t node_count = 2;
  std::unordered_map<TupleId, NodeId> placement_map;
  std::vector<FootprintRecord> footprints;

  struct Call {
    std::string proc;
    std::vector<Value> params;
  };
  std::vector<Call> calls;

  Example() {
    for (std::int64_t k : {1, 3, 4, 7}) placement_map[{kTable, k}] = 0;
    for (std::int64_t k : {2, 6, 8, 9, 10}) placement_map[{kTable, k}] = 1;
    calls = {{"f", {2, 1}}, {"incr_copy", {1, 3}}, {"f", {8, 9}}, {"f", {3, 4}},
             {"f", {9, 10}}, {"f", {1, 6}}, {"f", {6, 7}}};
    const auto rw = [](std::int64_t k) { return Access{attr(kTable, k), AccessMode::ReadWrite}; };
    const auto r = [](std::int64_t k) { return Access{attr(kTable, k), AccessMode::Read}; };
    const auto w = [](std::int64_t k) { return Access{attr(kTable, k), AccessMode::Write}; };
    const std::vector<std::vector<Access>> acc = {{r(2), w(1)}, {rw(1), w(3)}, {r(8), w(9)}, {r(3), w(4)},
                                                  {r(9), w(10)}, {r(1), w(6)}, {r(6), w(7)}};
    const NodeId coord[] = {1, 0, 1, 0, 1, 1, 1};
    for (std::size_t i = 0; i < acc.size(); ++i) {
      footprints.push_back({i + 1, static_cast<Tick>(10 * i + 1), static_cast<Tick>(10 * (i + 1)), coord[i],
                            false, normalize(acc[i])});
    }
  }

  Placement placement() const { return Placement(node_count, placement_map); }

  Schema schema() const {
    Schema s;
    s.add_table("X", 1);
    return s;
  }

  static void register_procedures(ProcedureRegistry& reg) {
    reg.add("f", [](ProcContext& c, std::span<const Value> p) {
      c.write({{kTable, p[1]}, 0}, 2 * c.read({{kTable, p[0]}, 0}));
    });
    reg.add("incr_copy", [](ProcContext& c, std::span<const Value> p) {
      const Value x = c.read({{kTable, p[0]}, 0}) + 1;
      c.write({{kTable, p[0]}, 0}, x);
      c.write({{kTable, p[1]}, 0}, 2 * x);
    });
  }
};

// ---------------------------------------------------------------------------
// Random footprints: `n` transactions over `tuples` tuples with `cols`
// columns spread over `nodes` nodes (tuple k lives on node k % nodes).
struct RandomHistory {
  std::uint32_t node_count = 0;
  std::unordered_map<TupleId, NodeId> placement_map;
  std::vector<FootprintRecord> footprints;
  Placement placement() const { return Placement(node_count, placement_map); }
};

inline RandomHistory random_history(std::uint64_t seed, std::size_t n, std::int64_t tuples = 12,
                                    std::uint32_t cols = 2, std::uint32_t nodes = 3) {
  Rng rng(seed);
  RandomHistory h;
  h.node_count = nodes;
  for (std::int64_t k = 0; k < tuples; ++k) h.placement_map[{0, k}] = static_cast<NodeId>(k % nodes);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Access> acc;
    const auto count = 1 + rng.below(4);
    for (std::uint64_t a = 0; a < count; ++a) {
      const auto mode = static_cast<AccessMode>(1 + rng.below(3));
      acc.push_back({attr(0, static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(tuples))),
                          static_cast<std::uint32_t>(rng.below(cols))),
                     mode});
    }
    acc = normalize(std::move(acc));
    FootprintRecord f;
    f.txn_id = 100 + i;
    f.submit = static_cast<Tick>(7 * i);
    f.commit = static_cast<Tick>(7 * i + 3);
    f.coordinator = h.placement_map.at(acc.front().attr.tuple);
    f.accesses = std::move(acc);
    h.footprints.push_back(std::move(f));
  }
  return h;
}

// ---------------------------------------------------------------------------
namespace oracle {

inline bool conflicts(const FootprintRecord& later, const FootprintRecord& earlier) {
  if (!(earlier.commit < later.commit)) return false;
  for (const auto& a : later.accesses) {
    for (const auto& b : earlier.accesses) {
      if (a.attr.tuple == b.attr.tuple && (writes(a.mode) || writes(b.mode))) return true;
    }
  }
  return false;
}

inline std::vector<std::pair<TxnId, TxnId>> edges(const std::vector<FootprintRecord>& fps) {
  std::vector<std::pair<TxnId, TxnId>> out;
  for (std::size_t i = 0; i < fps.size(); ++i) {
    for (std::size_t j = 0; j < fps.size(); ++j) {
      if (conflicts(fps[i], fps[j])) out.emplace_back(fps[j].txn_id, fps[i].txn_id);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline bool touches(const FootprintRecord& f, const std::unordered_map<TupleId, NodeId>& map, NodeId node) {
  return std::any_of(f.accesses.begin(), f.accesses.end(), [&](const Access& a) {
    auto it = map.find(a.attr.tuple);
    return it != map.end() && it->second == node;
  });
}

// Iterates T ∪ ⊙(T) until nothing changes.
inline std::vector<TxnId> recovery_set(const std::vector<FootprintRecord>& fps,
                                       const std::unordered_map<TupleId, NodeId>& map, NodeId failed) {
  std::vector<char> in(fps.size(), 0);
  for (std::size_t i = 0; i < fps.size(); ++i) in[i] = touches(fps[i], map, failed);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < fps.size(); ++i) {
      if (!in[i]) continue;
      for (std::size_t j = 0; j < fps.size(); ++j) {
        if (!in[j] && conflicts(fps[i], fps[j])) in[j] = changed = true;
      }
    }
  }
  std::vector<TxnId> out;
  for (std::size_t i = 0; i < fps.size(); ++i) {
    if (in[i]) out.push_back(fps[i].txn_id);
  }
  return out;
}

inline bool writes_attr(const FootprintRecord& f, const AttrId& a) {
  return std::any_of(f.accesses.begin(), f.accesses.end(),
                     [&](const Access& x) { return x.attr == a && writes(x.mode); });
}

// ⊗ of an arbitrary access list against the first `before` footprints.
inline std::set<std::size_t> time_dependents(const std::vector<FootprintRecord>& fps,
                                             const std::vector<Access>& accesses, std::size_t before) {
  std::set<std::size_t> out;
  for (const auto& a : accesses) {
    for (std::size_t j = before; j-- > 0;) {
      if (writes_attr(fps[j], a.attr)) {
        out.insert(j);
        break;
      }
    }
  }
  return out;
}

inline std::set<std::size_t> time_dependents(const std::vector<FootprintRecord>& fps, std::size_t i) {
  return time_dependents(fps, fps[i].accesses, i);
}

inline void closure_into(const std::vector<FootprintRecord>& fps, std::size_t i, std::set<std::size_t>& acc) {
  for (std::size_t j : time_dependents(fps, i)) {
    if (acc.insert(j).second) closure_into(fps, j, acc);
  }
}

inline std::set<std::size_t> closure(const std::vector<FootprintRecord>& fps, std::size_t i) {
  std::set<std::size_t> acc;
  closure_into(fps, i, acc);
  return acc;
}

inline std::set<std::size_t> phi(const std::vector<FootprintRecord>& fps, std::size_t j, std::size_t i,
                                 const std::vector<AttrId>& attrs) {
  std::set<std::size_t> out;
  for (std::size_t k = 0; k < fps.size(); ++k) {
    if (!(fps[j].commit < fps[k].commit && fps[k].commit < fps[i].commit)) continue;
    for (const auto& a : attrs) {
      if (writes_attr(fps[k], a)) out.insert(k);
    }
  }
  return out;
}

inline std::vector<AttrId> written(const FootprintRecord& f) {
  std::set<AttrId> s;
  for (const auto& a : f.accesses) {
    if (writes(a.mode)) s.insert(a.attr);
  }
  return {s.begin(), s.end()};
}

// delta_with_set evaluated from raw histories.
inline double delta_set(const std::vector<FootprintRecord>& fps, std::size_t j, std::size_t i,
                  const std::vector<char>& aries, const CostModel& cost) {
  const auto cl = closure(fps, i);
  double remaining = 0;
  for (std::size_t p : cl) remaining += aries[p] ? 0 : 1;
  std::set<AttrId> covered;
  for (std::size_t p = j + 1; p < fps.size(); ++p) {
    if (!aries[p]) continue;
    for (const auto& a : written(fps[p])) covered.insert(a);
  }
  std::vector<AttrId> open;
  for (const auto& a : written(fps[j])) {
    if (!covered.count(a)) open.push_back(a);
  }
  const auto between = phi(fps, j, i, open);
  return remaining * cost.cmd_redo - cost.aries_redo - static_cast<double>(between.size()) * cost.cmd_redo;
}

inline double benefit(const std::vector<FootprintRecord>& fps, std::size_t c, const std::vector<char>& aries,
                      const CostModel& cost) {
  double sum = 0;
  for (std::size_t t = 0; t < fps.size(); ++t) {
    if (closure(fps, t).count(c)) sum += delta_set(fps, c, t, aries, cost);
  }
  return sum / cost.aries_io_of(written(fps[c]).size());
}

// The greedy rule with every benefit recomputed from scratch each round.
inline std::vector<TxnId> greedy(const std::vector<FootprintRecord>& fps, const CostModel& cost) {
  std::vector<char> aries(fps.size(), 0);
  std::vector<TxnId> out;
  double io = 0;
  for (;;) {
    std::optional<std::size_t> best;
    double best_b = 0;
    for (std::size_t c = 0; c < fps.size(); ++c) {
      if (aries[c]) continue;
      const double b = benefit(fps, c, aries, cost);
      if (!best || b > best_b || (b == best_b && fps[c].txn_id < fps[*best].txn_id)) {
        best = c;
        best_b = b;
      }
    }
    if (!best) break;
    const double w = cost.aries_io_of(written(fps[*best]).size());
    if (io + w > cost.io_budget) break;
    io += w;
    aries[*best] = 1;
    out.push_back(fps[*best].txn_id);
  }
  return out;
}

// Redo set under mixed logs: the last writer of every attribute on the
// failed node, then, for each command-logged member, the latest earlier
// writer of everything it accessed.
inline std::set<std::size_t> adaptive_redo(const std::vector<FootprintRecord>& fps,
                                           const std::unordered_map<TupleId, NodeId>& map, NodeId failed,
                                           const std::vector<char>& aries) {
  std::set<std::size_t> out;
  std::set<AttrId> seen;
  std::vector<std::size_t> stack;
  for (std::size_t p = fps.size(); p-- > 0;) {
    for (const auto& a : fps[p].accesses) {
      if (writes(a.mode) && map.at(a.attr.tuple) == failed && seen.insert(a.attr).second) {
        if (out.insert(p).second) stack.push_back(p);
      }
    }
  }
  while (!stack.empty()) {
    const std::size_t p = stack.back();
    stack.pop_back();
    if (aries[p]) continue;
    for (std::size_t q : time_dependents(fps, p)) {
      if (out.insert(q).second) stack.push_back(q);
    }
  }
  return out;
}

}  // namespace oracle

// ---------------------------------------------------------------------------
// An engine plus the log streams of one strategy, driven transaction by
// transaction. Commit ticks come from Engine::execute.
class LoggedCluster {
 public:
  LoggedCluster(const std::filesystem::path& dir, Schema schema, std::uint32_t nodes, Strategy strategy)
      : strategy_(strategy), engine_(std::move(schema), nodes, dir / "snapshots"), logs_(dir / "logs") {
    logs_.declare(log_kinds(strategy), nodes);
  }

  Engine& engine() { return engine_; }
  LogSet& logs() { return logs_; }

  // Call after loading data.
  void checkpoint() { logs_.rotate(engine_.checkpoint()); }

  const Transaction& run(const std::string& proc, std::vector<Value> params, bool aries = false) {
    PreparedTxn p = engine_.prepare(proc, params, engine_.last_commit());
    const Transaction& c = engine_.commit(std::move(p), engine_.last_commit() + 1);
    log_commit(logs_, strategy_, c, engine_, aries);
    return c;
  }

  RecoveryInputs inputs(ExecOptions exec = {}) {
    logs_.flush_all();
    RecoveryInputs in;
    in.schema = &engine_.schema();
    in.procedures = &engine_.procedures();
    in.snapshot_dir = engine_.snapshot_dir();
    in.snapshot_id = engine_.state().last_checkpoint.snapshot_id;
    in.logs = logs_.layout();
    in.exec = exec;
    return in;
  }

 private:
  Strategy strategy_;
  Engine engine_;
  LogSet logs_;
};

// The running example executed on a real engine with x_i = i initially.
inline void load_example(LoggedCluster& c, const Example& fx) {
  ProcedureRegistry reg;
  Example::register_procedures(reg);
  for (const auto& name : reg.names()) c.engine().register_procedure(name, *reg.find(name));
  std::vector<std::pair<TupleId, NodeId>> rows(fx.placement_map.begin(), fx.placement_map.end());
  std::sort(rows.begin(), rows.end());
  for (const auto& [t, n] : rows) c.engine().insert(n, t, {t.key});
  c.checkpoint();
}

}  // namespace memlog::test
