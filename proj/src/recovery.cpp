#include "memlog/recovery.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <unordered_set>

#include "memlog/error.hpp"
#include "memlog/snapshot.hpp"
#include "memlog/time_dependence.hpp"

namespace memlog {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Aries: return "aries";
    case Strategy::Command: return "command";
    case Strategy::DisCommand: return "dis-command";
    case Strategy::Adaptive: return "adaptive";
  }
  return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view s) {
  if (s == "aries") return Strategy::Aries;
  if (s == "command") return Strategy::Command;
  if (s == "dis-command") return Strategy::DisCommand;
  if (s == "adaptive") return Strategy::Adaptive;
  return std::nullopt;
}

std::optional<Value> VersionedWorkspace::read_before(const AttrId& a, Tick tick) const {
  {
    std::shared_lock lock(mu_);
    auto it = versions_.find(a);
    if (it != versions_.end()) {
      auto v = it->second.lower_bound(tick);
      if (v != it->second.begin()) return std::prev(v)->second;
    }
  }
  return base_.value(a);
}

void VersionedWorkspace::put(const AttrId& a, Tick tick, Value v) {
  std::unique_lock lock(mu_);
  versions_[a][tick] = v;
}

Partition VersionedWorkspace::materialize(NodeId node) const {
  Partition rows = base_.store.at(node);
  std::shared_lock lock(mu_);
  for (const auto& [attr, versions] : versions_) {
    if (versions.empty()) continue;
    auto row = rows.find(attr.tuple);
    if (row == rows.end()) continue;
    if (attr.column < row->second.size()) row->second[attr.column] = versions.rbegin()->second;
  }
  return rows;
}

ClusterState load_snapshot(const Schema& schema, const std::filesystem::path& dir, std::uint64_t id,
                           std::uint64_t* bytes) {
  const auto m = snapshot::read_manifest(dir, id);
  ClusterState s;
  s.node_count = m.node_count;
  s.store.resize(m.node_count);
  for (NodeId n = 0; n < m.node_count; ++n) {
    s.store[n] = snapshot::read_node(dir, id, n, schema);
    for (const auto& [tuple, _] : s.store[n]) s.partition_map.emplace(tuple, n);
    if (bytes) *bytes += std::filesystem::file_size(snapshot::node_file(dir, id, n));
  }
  s.last_checkpoint = {m.id, m.tick};
  return s;
}

std::vector<FootprintRecord> load_footprints(const LogLayout& logs, std::uint32_t node_count,
                                             std::uint64_t* bytes) {
  std::vector<FootprintRecord> out;
  for (NodeId n = 0; n < node_count; ++n) {
    const auto r = read_all(logs.file(LogKind::Footprint, n), LogKind::Footprint);
    if (bytes) *bytes += r.bytes_read;
    auto recs = records_as<FootprintRecord>(r);
    out.insert(out.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.commit < b.commit; });
  return out;
}

void schedule(RecoveryPlan& plan, std::uint32_t node_count) {
  const std::uint32_t lanes = std::max<std::uint32_t>(plan.lanes_per_node, 1);
  std::vector<std::vector<Tick>> free_at(node_count, std::vector<Tick>(lanes, 0));
  plan.makespan = 0;
  for (auto& s : plan.steps) {
    if (s.node >= node_count) throw RecoveryError("step scheduled on unknown node " + std::to_string(s.node));
    Tick ready = 0;
    for (std::size_t w : s.waits) ready = std::max(ready, plan.steps.at(w).finish);
    auto& node_lanes = free_at[s.node];
    const auto lane = static_cast<std::uint32_t>(
        std::min_element(node_lanes.begin(), node_lanes.end()) - node_lanes.begin());
    s.lane = lane;
    s.start = std::max(ready, node_lanes[lane]);
    s.finish = s.start + s.cost;
    node_lanes[lane] = s.finish;
    plan.makespan = std::max(plan.makespan, s.finish);
  }
}

namespace {

// What a step applies: a command to re-execute or a data record's images.
struct StepSource {
  const CommandRecord* command = nullptr;
  const AriesRecord* images = nullptr;
};

class WorkspaceView : public AttrSource {
 public:
  WorkspaceView(const VersionedWorkspace& ws, Tick tick) : ws_(ws), tick_(tick) {}
  std::optional<Value> load(const AttrId& a) const override { return ws_.read_before(a, tick_); }

 private:
  const VersionedWorkspace& ws_;
  Tick tick_;
};

void apply_step(const RecoveryStep& s, const StepSource& src, const ProcedureRegistry& procs,
                VersionedWorkspace& ws) {
  if (s.reexecute) {
    WorkspaceView view(ws, s.commit);
    Execution e;
    try {
      e = run_procedure(procs, src.command->proc, src.command->params, view);
    } catch (const AbortError& err) {
      throw RecoveryError("re-executing txn " + std::to_string(s.txn) + " failed: " + err.what());
    }
    for (const auto& w : e.writes) ws.put(w.attr, s.commit, w.new_value);
  } else {
    for (const auto& w : src.images->writes) ws.put(w.attr, s.commit, w.new_value);
  }
}

std::vector<TxnId> execute_plan(const RecoveryPlan& plan, const std::vector<StepSource>& sources,
                                const ProcedureRegistry& procs, VersionedWorkspace& ws, const ExecOptions& opt) {
  const std::size_t n = plan.steps.size();
  std::vector<TxnId> order;
  order.reserve(n);
  if (opt.order == ExecOptions::Order::Commit) {
    for (std::size_t i = 0; i < n; ++i) {
      apply_step(plan.steps[i], sources[i], procs, ws);
      order.push_back(plan.steps[i].txn);
    }
    return order;
  }

  std::vector<std::vector<std::size_t>> dependents(n);
  std::vector<std::size_t> pending(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    pending[i] = plan.steps[i].waits.size();
    for (std::size_t w : plan.steps[i].waits) dependents[w].push_back(i);
  }

  if (opt.order == ExecOptions::Order::Random) {
    std::mt19937_64 rng(opt.seed);
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i) {
      if (pending[i] == 0) ready.push_back(i);
    }
    while (!ready.empty()) {
      const std::size_t k = static_cast<std::size_t>(rng() % ready.size());
      const std::size_t i = ready[k];
      ready[k] = ready.back();
      ready.pop_back();
      apply_step(plan.steps[i], sources[i], procs, ws);
      order.push_back(plan.steps[i].txn);
      for (std::size_t d : dependents[i]) {
        if (--pending[d] == 0) ready.push_back(d);
      }
    }
    if (order.size() != n) throw RecoveryError("wait conditions form a cycle");
    return order;
  }

  // Threaded: workers pull ready steps; finishing a step releases its
  // dependents.
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (pending[i] == 0) ready.push_back(i);
  }
  std::size_t done = 0;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      std::size_t i = 0;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return !ready.empty() || done == n || failure; });
        if (failure || (ready.empty() && done == n)) return;
        i = ready.front();
        ready.pop_front();
      }
      try {
        apply_step(plan.steps[i], sources[i], procs, ws);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        cv.notify_all();
        return;
      }
      std::lock_guard lock(mu);
      order.push_back(plan.steps[i].txn);
      ++done;
      for (std::size_t d : dependents[i]) {
        if (--pending[d] == 0) ready.push_back(d);
      }
      cv.notify_all();
    }
  };
  const unsigned threads = std::max(1U, opt.threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  if (done != n) throw RecoveryError("wait conditions form a cycle");
  return order;
}

Tick read_ticks(std::uint64_t bytes, const SimCosts& sim) {
  return static_cast<Tick>(std::llround(static_cast<double>(bytes) * sim.read_per_byte));
}

void check_inputs(const RecoveryInputs& in) {
  if (!in.schema || !in.procedures) throw ConfigError("recovery needs a schema and a procedure registry");
}

void check_failed(const ClusterState& base, NodeId failed) {
  if (failed >= base.node_count) throw ConfigError("unknown node id " + std::to_string(failed));
}

// Runs the plan, installs the rebuilt partitions and fills the counters.
RecoveryResult finish(const RecoveryInputs& in, const ClusterState& survivors, NodeId failed, RecoveryPlan plan,
                      const std::vector<StepSource>& sources, VersionedWorkspace& ws, std::uint64_t bytes,
                      Tick graph_ticks, std::uint32_t schedule_nodes, bool install_all) {
  schedule(plan, schedule_nodes);
  RecoveryResult r;
  r.execution_order = execute_plan(plan, sources, *in.procedures, ws, in.exec);
  r.state = survivors;
  if (r.state.store.size() < ws.base().node_count) r.state.store.resize(ws.base().node_count);
  for (NodeId n = 0; n < ws.base().node_count; ++n) {
    if (install_all || n == failed) r.state.store[n] = ws.materialize(n);
  }
  auto& m = r.metrics;
  m.strategy = plan.strategy;
  m.failed = failed;
  for (const auto& s : plan.steps) {
    if (s.reexecute) ++m.reexecuted;
    else ++m.images_applied;
  }
  m.reprocessed = m.reexecuted + m.images_applied;
  m.bytes_read = bytes;
  m.graph_build_ticks = graph_ticks;
  m.recovery_ticks = read_ticks(bytes, in.sim) + graph_ticks + plan.makespan;
  r.plan = std::move(plan);
  return r;
}

Tick redo_cost(const RecoveryInputs& in, bool distributed) {
  return static_cast<Tick>(std::llround(in.cost.cmd_redo)) + (distributed ? in.sim.dist_redo : 0);
}

Tick image_cost(const RecoveryInputs& in) { return static_cast<Tick>(std::llround(in.cost.aries_redo)); }

template <typename R>
std::vector<R> read_node_log(const LogLayout& logs, LogKind kind, NodeId n, std::uint64_t& bytes) {
  const auto r = read_all(logs.file(kind, n), kind);
  bytes += r.bytes_read;
  return records_as<R>(r);
}

}  // namespace

RecoveryResult recover_aries(const RecoveryInputs& in, const ClusterState& survivors, NodeId failed) {
  check_inputs(in);
  std::uint64_t bytes = 0;
  VersionedWorkspace ws(load_snapshot(*in.schema, in.snapshot_dir, in.snapshot_id, &bytes));
  check_failed(ws.base(), failed);
  const auto records = read_node_log<AriesRecord>(in.logs, LogKind::Aries, failed, bytes);

  RecoveryPlan plan;
  plan.strategy = Strategy::Aries;
  plan.lanes_per_node = in.sim.lanes_per_node;
  std::vector<StepSource> sources;
  std::unordered_map<AttrId, std::size_t> last_writer;
  for (const auto& rec : records) {
    RecoveryStep s;
    s.txn = rec.txn_id;
    s.commit = rec.timestamp;
    s.node = failed;
    s.reexecute = false;
    s.cost = image_cost(in);
    const std::size_t idx = plan.steps.size();
    for (const auto& w : rec.writes) {
      if (w.node != failed) throw RecoveryError("data record of txn " + std::to_string(rec.txn_id) +
                                                " holds a write for another node");
      auto [it, fresh] = last_writer.try_emplace(w.attr, idx);
      if (!fresh) {
        if (it->second != idx) s.waits.push_back(it->second);
        it->second = idx;
      }
    }
    std::sort(s.waits.begin(), s.waits.end());
    s.waits.erase(std::unique(s.waits.begin(), s.waits.end()), s.waits.end());
    if (!plan.steps.empty() && s.commit <= plan.steps.back().commit) {
      throw MalformedLogError("data log is not in commit order");
    }
    plan.steps.push_back(std::move(s));
    sources.push_back({nullptr, &rec});
  }
  return finish(in, survivors, failed, std::move(plan), sources, ws, bytes, 0, ws.base().node_count, false);
}

RecoveryResult recover_command_serial(const RecoveryInputs& in, const ClusterState& survivors, NodeId failed) {
  check_inputs(in);
  std::uint64_t bytes = 0;
  VersionedWorkspace ws(load_snapshot(*in.schema, in.snapshot_dir, in.snapshot_id, &bytes));
  check_failed(ws.base(), failed);
  std::vector<std::vector<CommandRecord>> logs(ws.base().node_count);
  bool multi = false;
  for (NodeId n = 0; n < ws.base().node_count; ++n) {
    logs[n] = read_node_log<CommandRecord>(in.logs, LogKind::Command, n, bytes);
    for (const auto& r : logs[n]) multi = multi || r.multi_partition;
  }
  // Without multi-partition transactions every site's log is
  // self-contained, so only the failed site replays.
  std::vector<const CommandRecord*> merged;
  for (NodeId n = 0; n < ws.base().node_count; ++n) {
    if (!multi && n != failed) continue;
    for (const auto& r : logs[n]) merged.push_back(&r);
  }
  std::stable_sort(merged.begin(), merged.end(),
                   [](const auto* a, const auto* b) { return a->timestamp < b->timestamp; });

  RecoveryPlan plan;
  plan.strategy = Strategy::Command;
  plan.lanes_per_node = 1;
  std::vector<StepSource> sources;
  for (const auto* r : merged) {
    RecoveryStep s;
    s.txn = r->txn_id;
    s.commit = r->timestamp;
    s.node = 0;
    s.cost = redo_cost(in, r->multi_partition);
    if (!plan.steps.empty()) {
      if (s.commit <= plan.steps.back().commit) throw MalformedLogError("duplicate commit timestamp in command logs");
      s.waits.push_back(plan.steps.size() - 1);
    }
    plan.steps.push_back(std::move(s));
    sources.push_back({r, nullptr});
  }
  return finish(in, survivors, failed, std::move(plan), sources, ws, bytes, 0, 1, multi);
}

RecoveryResult recover_dis_command(const RecoveryInputs& in, const ClusterState& survivors, NodeId failed) {
  check_inputs(in);
  std::uint64_t snap_bytes = 0;
  const auto base = load_snapshot(*in.schema, in.snapshot_dir, in.snapshot_id, &snap_bytes);
  std::uint64_t bytes = 0;
  const auto footprints = load_footprints(in.logs, base.node_count, &bytes);
  const Placement placement(base);
  const auto g = build_graph(footprints, &placement);
  return recover_dis_command(in, survivors, failed, g, bytes);
}

RecoveryResult recover_dis_command(const RecoveryInputs& in, const ClusterState& survivors, NodeId failed,
                                   const DependencyGraph& g, std::uint64_t footprint_bytes) {
  check_inputs(in);
  std::uint64_t bytes = footprint_bytes;
  VersionedWorkspace ws(load_snapshot(*in.schema, in.snapshot_dir, in.snapshot_id, &bytes));
  check_failed(ws.base(), failed);
  const auto rs = recovery_set(g, failed, ws.base().node_count);

  std::vector<std::vector<CommandRecord>> logs(ws.base().node_count);
  std::unordered_map<TxnId, const CommandRecord*> commands;
  for (NodeId n = 0; n < ws.base().node_count; ++n) {
    logs[n] = read_node_log<CommandRecord>(in.logs, LogKind::Command, n, bytes);
  }
  for (const auto& log : logs) {
    for (const auto& r : log) commands.emplace(r.txn_id, &r);
  }

  RecoveryPlan plan;
  plan.strategy = Strategy::DisCommand;
  plan.lanes_per_node = in.sim.lanes_per_node;
  std::vector<StepSource> sources;
  std::unordered_map<std::size_t, std::size_t> step_of;  // graph position → step
  for (TxnId id : rs.members) {
    const std::size_t pos = *g.position(id);
    const auto& v = g.vertex(pos);
    auto cmd = commands.find(id);
    if (cmd == commands.end()) throw RecoveryError("no command record for txn " + std::to_string(id));
    RecoveryStep s;
    s.txn = id;
    s.commit = v.commit;
    s.node = v.coordinator;
    s.cost = redo_cost(in, v.participants.size() > 1);
    for (std::size_t u : g.competed(pos)) {
      auto it = step_of.find(u);
      if (it == step_of.end()) throw RecoveryError("recovery set is not closed under competition");
      s.waits.push_back(it->second);
    }
    step_of.emplace(pos, plan.steps.size());
    plan.steps.push_back(std::move(s));
    sources.push_back({cmd->second, nullptr});
  }
  const Tick graph_ticks = in.sim.graph_per_footprint * static_cast<Tick>(g.size());
  return finish(in, survivors, failed, std::move(plan), sources, ws, bytes, graph_ticks, ws.base().node_count,
                false);
}

RecoveryResult recover_adaptive(const RecoveryInputs& in, const ClusterState& survivors, NodeId failed,
                                std::optional<std::vector<TxnId>> aries_set, bool prune) {
  check_inputs(in);
  std::uint64_t bytes = 0;
  VersionedWorkspace ws(load_snapshot(*in.schema, in.snapshot_dir, in.snapshot_id, &bytes));
  const auto& base = ws.base();
  check_failed(base, failed);
  const auto footprints = load_footprints(in.logs, base.node_count, &bytes);

  InvertedIndex idx;
  for (const auto& f : footprints) idx.record(f);
  std::vector<char> aries(idx.size(), 0);
  if (aries_set) {
    for (TxnId id : *aries_set) {
      auto pos = idx.position(id);
      if (!pos) throw RecoveryError("data-logged txn " + std::to_string(id) + " has no footprint");
      aries[*pos] = 1;
    }
  } else {
    for (std::size_t p = 0; p < idx.size(); ++p) aries[p] = idx.at(p).aries ? 1 : 0;
  }

  std::vector<std::vector<AriesRecord>> data_logs(base.node_count);
  std::vector<std::vector<CommandRecord>> command_logs(base.node_count);
  std::unordered_map<TxnId, const AriesRecord*> images;
  std::unordered_map<TxnId, const CommandRecord*> commands;
  for (NodeId n = 0; n < base.node_count; ++n) {
    data_logs[n] = read_node_log<AriesRecord>(in.logs, LogKind::Aries, n, bytes);
    command_logs[n] = read_node_log<CommandRecord>(in.logs, LogKind::Command, n, bytes);
  }
  for (const auto& log : data_logs) {
    for (const auto& r : log) images.emplace(r.txn_id, &r);
  }
  for (const auto& log : command_logs) {
    for (const auto& r : log) commands.emplace(r.txn_id, &r);
  }

  const Placement placement(base);
  std::vector<std::size_t> seeds;
  std::vector<char> distributed(idx.size(), 0);
  std::vector<char> touches_failed(idx.size(), 0);
  for (std::size_t p = 0; p < idx.size(); ++p) {
    const auto parts = placement.participants(idx.at(p).accesses);
    distributed[p] = parts.size() > 1;
    touches_failed[p] = std::binary_search(parts.begin(), parts.end(), failed) ? 1 : 0;
  }
  // The failed partition ends up holding what the last writer of each of
  // its attributes wrote; everything else follows from those writers.
  std::unordered_set<AttrId> settled;
  for (std::size_t p = idx.size(); p-- > 0;) {
    bool seed = false;
    for (const auto& a : idx.at(p).accesses) {
      if (!writes(a.mode) || placement.node_of(a.attr.tuple) != failed) continue;
      if (settled.insert(a.attr).second) seed = true;
    }
    if (seed) seeds.push_back(p);
  }
  std::reverse(seeds.begin(), seeds.end());
  const auto members = adaptive_redo_set(idx, seeds, aries, prune);

  RecoveryPlan plan;
  plan.strategy = Strategy::Adaptive;
  plan.lanes_per_node = in.sim.lanes_per_node;
  std::vector<StepSource> sources;
  std::vector<std::size_t> step_of(idx.size(), SIZE_MAX);
  for (std::size_t p : members) {
    const auto& f = idx.at(p);
    RecoveryStep s;
    s.txn = f.txn_id;
    s.commit = f.commit;
    StepSource src;
    if (aries[p]) {
      auto it = images.find(f.txn_id);
      if (it == images.end()) {
        throw RecoveryError("inconsistent logs: txn " + std::to_string(f.txn_id) +
                            " is marked data-logged but has no data record");
      }
      s.reexecute = false;
      s.node = touches_failed[p] ? failed : f.coordinator;
      s.cost = image_cost(in);
      src.images = it->second;
    } else {
      auto it = commands.find(f.txn_id);
      if (it == commands.end()) throw RecoveryError("no command record for txn " + std::to_string(f.txn_id));
      s.node = f.coordinator;
      s.cost = redo_cost(in, distributed[p] != 0);
      for (std::size_t q : time_dependents(idx, p)) {
        if (step_of[q] == SIZE_MAX) throw RecoveryError("redo set misses a time-dependent transaction");
        s.waits.push_back(step_of[q]);
      }
      src.command = it->second;
    }
    step_of[p] = plan.steps.size();
    plan.steps.push_back(std::move(s));
    sources.push_back(src);
  }
  const Tick graph_ticks = in.sim.graph_per_footprint * static_cast<Tick>(idx.size());
  return finish(in, survivors, failed, std::move(plan), sources, ws, bytes, graph_ticks, base.node_count, false);
}

RecoveryResult recover(Strategy s, const RecoveryInputs& in, const ClusterState& survivors, NodeId failed) {
  switch (s) {
    case Strategy::Aries: return recover_aries(in, survivors, failed);
    case Strategy::Command: return recover_command_serial(in, survivors, failed);
    case Strategy::DisCommand: return recover_dis_command(in, survivors, failed);
    case Strategy::Adaptive: return recover_adaptive(in, survivors, failed);
  }
  throw ConfigError("unknown strategy");
}

}  // namespace memlog
