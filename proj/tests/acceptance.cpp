// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "support.hpp"

#include "memlog/error.hpp"
#include "memlog/time_dependence.hpp"
#include "memlog/workload.hpp"

using namespace memlog;
using namespace memlog::test;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

struct Outcome {
  bool ok = true;
  std::string detail;

  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

std::vector<std::size_t> as_vec(const std::set<std::size_t>& s) { return {s.begin(), s.end()}; }

InvertedIndex index_of(const std::vector<FootprintRecord>& fps) {
  InvertedIndex idx;
  for (const auto& f : fps) idx.record(f);
  return idx;
}

std::string trace_text(const std::vector<Decision>& d) {
  std::ostringstream os;
  write_trace_csv(os, d);
  return os.str();
}

// 1. Every strategy rebuilds the failed node exactly.
Outcome recovery_oracle() {
  Outcome o;
  const auto t0 = Clock::now();
  const char* labels[] = {"aries", "command", "dis-command", "adaptive"};
  const double dists[] = {0.0, 0.1, 0.25};
  int runs = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    for (const char* label : labels) {
      TempDir dir("acc1");
      ExperimentConfig cfg;
      cfg.workload.nodes = 4;
      cfg.workload.txns = 100 + 100 * (seed % 5);
      cfg.workload.tuples_per_node = 20 + seed % 30;
      cfg.workload.items_per_node = 10;
      cfg.workload.distributed = dists[seed % 3];
      cfg.workload.f_fraction = seed % 2 ? 0.2 : 0.0;
      cfg.workload.writes_per_txn = 1 + seed % 3;
      cfg.workload.seed = seed;
      cfg.strategy = *parse_strategy_label(label);
      // Small budgets so adaptive runs mix both record kinds.
      cfg.cost.io_budget = 150.0 * static_cast<double>(seed % 40);
      cfg.data_dir = dir.path();
      try {
        const auto r = run_experiment(cfg);
        if (r.row.reprocessed != r.row.reexecuted + r.row.images_applied) o.fail("inconsistent redo counts");
        ++runs;
      } catch (const std::exception& e) {
        o.fail(std::string(label) + " seed " + std::to_string(seed) + ": " + e.what());
      }
    }
  }
  const double secs = seconds_since(t0);
  if (secs >= 120) o.fail(fmt("took %.1f s", secs));
  if (o.ok) o.detail = std::to_string(runs) + " runs equal serial replay in " + fmt("%.1f s", secs);
  return o;
}

// 2. The running example.
Outcome running_example() {
  Outcome o;
  Example fx;
  const auto placement = fx.placement();
  const auto g = build_graph(fx.footprints, &placement);
  if (recovery_set(g, Example::kFailed, fx.node_count).members != std::vector<TxnId>{1, 2, 4, 6, 7}) {
    o.fail("recovery set");
  }
  if (complete_recovery_set(g, 4) != std::vector<TxnId>{1, 2, 4}) o.fail("closure of t4");

  TempDir dir("acc2");
  LoggedCluster c(dir.path(), fx.schema(), fx.node_count, Strategy::Adaptive);
  load_example(c, fx);
  for (std::size_t i = 0; i < fx.calls.size(); ++i) {
    const TxnId id = i + 1;
    c.run(fx.calls[i].proc, fx.calls[i].params, id == 2 || id == 7);
  }
  const auto oracle = serial_replay(c.engine());
  c.engine().crash(Example::kFailed);
  const auto r = recover(Strategy::Adaptive, c.inputs(), c.engine().state(), Example::kFailed);
  std::vector<TxnId> redo;
  for (const auto& s : r.plan.steps) redo.push_back(s.txn);
  std::sort(redo.begin(), redo.end());
  if (redo != std::vector<TxnId>{2, 4, 7}) o.fail("adaptive redo set");
  if (!same_data(r.state, oracle)) o.fail("adaptive recovery state");
  if (o.ok) o.detail = "recovery set {t1,t2,t4,t6,t7}, closure(t4) {t1,t2,t4}, adaptive redo {t2,t4,t7}";
  return o;
}

// 3. Redo counts over distributed fractions at 30,000 transactions.
Outcome redo_counts() {
  Outcome o;
  const auto t0 = Clock::now();
  TempDir dir("acc3");
  ExperimentConfig base;
  base.workload.nodes = 4;
  base.workload.txns = 30000;
  base.workload.tuples_per_node = 50000;
  base.workload.seed = 3;
  base.cost.io_budget = 1e9;
  base.data_dir = dir.path();
  std::vector<StrategyConfig> strategies;
  for (const char* s : {"command", "dis-command", "adapt-40", "adapt-60", "adapt-100"}) {
    strategies.push_back(*parse_strategy_label(s));
  }
  const std::vector<double> dists = {0.0, 0.05, 0.10, 0.25};
  const auto reports = sweep(base, dists, strategies);
  std::string summary;
  for (std::size_t d = 0; d < dists.size(); ++d) {
    std::map<std::string, std::uint64_t> n;
    for (std::size_t s = 0; s < strategies.size(); ++s) {
      const auto& row = reports[d * strategies.size() + s].row;
      n[row.strategy] = row.reprocessed;
    }
    if (dists[d] == 0) {
      std::uint64_t lo = UINT64_MAX, hi = 0;
      for (const auto& [k, v] : n) lo = std::min(lo, v), hi = std::max(hi, v);
      if (static_cast<double>(hi - lo) > 0.02 * static_cast<double>(hi)) o.fail("0%: strategies disagree");
      summary += fmt("0%%: all %.0f", static_cast<double>(hi));
      continue;
    }
    const double ratio = static_cast<double>(n["command"]) / static_cast<double>(n["dis-command"]);
    if (ratio < 3) o.fail(fmt("%.0f%%: command/dis-command %.2f", 100 * dists[d], ratio));
    if (!(n["adapt-100"] <= n["adapt-60"] && n["adapt-60"] <= n["adapt-40"] && n["adapt-40"] <= n["dis-command"])) {
      o.fail(fmt("%.0f%%: adapt ordering", 100 * dists[d]));
    }
    summary += fmt("; %.0f%%: ratio %.2f, adapt-100/60/40/dis ", 100 * dists[d], ratio) +
               std::to_string(n["adapt-100"]) + "/" + std::to_string(n["adapt-60"]) + "/" +
               std::to_string(n["adapt-40"]) + "/" + std::to_string(n["dis-command"]);
  }
  const double secs = seconds_since(t0);
  if (secs >= 60) o.fail(fmt("took %.1f s", secs));
  o.detail = (o.ok ? "" : o.detail + " | ") + summary + fmt(" (%.1f s)", secs);
  return o;
}

// 4. Recovery time at 10% distributed with the default cost model.
Outcome speedups() {
  Outcome o;
  TempDir dir("acc4");
  ExperimentConfig base;
  base.workload.nodes = 4;
  base.workload.txns = 30000;
  base.workload.distributed = 0.10;
  base.workload.seed = 3;
  base.data_dir = dir.path();
  std::vector<StrategyConfig> strategies;
  for (const char* s : {"command", "dis-command", "adapt-100"}) strategies.push_back(*parse_strategy_label(s));
  const auto reports = sweep(base, {0.10}, strategies);
  const auto ticks = [&](std::size_t i) { return static_cast<double>(reports[i].row.recovery_ticks); };
  const double dis = ticks(0) / ticks(1);
  const double adapt = ticks(0) / ticks(2);
  if (dis < 3) o.fail("");
  if (adapt < 8) o.fail("");
  o.detail = fmt("command/dis-command %.2fx, command/adapt-100 %.2fx", dis, adapt);
  return o;
}

// 5. Graph, recovery sets, closures and phi against brute force.
Outcome dependency_oracles() {
  Outcome o;
  int histories = 0;
  auto check = [&](const std::vector<FootprintRecord>& fps, const std::unordered_map<TupleId, NodeId>& map,
                   std::uint32_t nodes, std::uint64_t seed) {
    const Placement placement(nodes, map);
    const auto g = build_graph(fps, &placement);
    if (g.edges() != oracle::edges(fps)) o.fail("edges, history " + std::to_string(seed));
    for (NodeId n = 0; n < nodes; ++n) {
      if (recovery_set(g, n, nodes).members != oracle::recovery_set(fps, map, n)) {
        o.fail("recovery set, history " + std::to_string(seed));
      }
    }
    const auto idx = index_of(fps);
    Rng rng(seed);
    for (std::size_t i = 0; i < fps.size(); ++i) {
      if (time_dependent_closure(idx, i) != as_vec(oracle::closure(fps, i))) {
        o.fail("closure, history " + std::to_string(seed));
      }
      const std::size_t j = rng.below(i + 1);
      const auto attrs = written_attrs(fps[j]);
      if (phi(idx, j, i, attrs) != as_vec(oracle::phi(fps, j, i, attrs))) o.fail("phi, history " + std::to_string(seed));
    }
    ++histories;
  };
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const auto h = random_history(seed, 1 + (seed * 37) % 200, 6 + seed % 20, 1 + seed % 3, 2 + seed % 3);
    check(h.footprints, h.placement_map, h.node_count, seed);
  }
  // Footprints logged by real runs.
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    TempDir dir("acc5");
    ExperimentConfig cfg;
    cfg.workload.txns = 200;
    cfg.workload.tuples_per_node = 25;
    cfg.workload.items_per_node = 5;
    cfg.workload.distributed = 0.25;
    cfg.workload.f_fraction = 0.2;
    cfg.workload.seed = seed;
    cfg.data_dir = dir.path();
    const auto rep = run_experiment(cfg);
    const auto base = load_snapshot(make_schema(), rep.snapshot_dir, rep.snapshot_id);
    check(load_footprints(rep.logs, base.node_count), base.partition_map, base.node_count, 1000 + seed);
  }
  if (o.ok) o.detail = std::to_string(histories) + " histories of up to 200 transactions";
  return o;
}

// 6. delta_with_set on the empty set, and the quota curve.
Outcome delta_and_quota() {
  Outcome o;
  const CostModel cost;
  Rng rng(6);
  int checked = 0;
  for (std::uint64_t seed = 1; checked < 1000; ++seed) {
    const auto h = random_history(seed, 60, 12);
    const auto idx = index_of(h.footprints);
    const std::vector<char> none(h.footprints.size(), 0);
    for (int k = 0; k < 20 && checked < 1000; ++k) {
      const std::size_t i = rng.below(h.footprints.size());
      const auto cl = time_dependent_closure(idx, i);
      if (cl.empty()) continue;
      const std::size_t j = cl[rng.below(cl.size())];
      if (delta_with_set(idx, j, i, none, cost) != delta(idx, j, i, cost)) o.fail("reduction");
      ++checked;
    }
  }
  const QuotaModel q;
  const auto cap = static_cast<std::int64_t>(std::floor(cost.io_budget / cost.aries_io));
  std::int64_t prev = 0;
  for (double k = 0; k <= 60; k += 0.25) {
    const auto v = q.quota(k, cost);
    if (v < prev || v > cap) o.fail(fmt("quota(%.2f)", k));
    prev = v;
  }
  // P(X <= 4) for X ~ Poisson(4), summed term by term.
  long double term = std::exp(-4.0L), sum = 0;
  for (int i = 0; i <= 4; ++i) {
    sum += term;
    term *= 4.0L / static_cast<long double>(i + 1);
  }
  const double raw = static_cast<double>(sum) * cost.io_budget / cost.avg_aries_io;
  const auto lo = static_cast<std::int64_t>(std::floor(std::nextafter(raw, 0.0)));
  const auto hi = static_cast<std::int64_t>(std::floor(std::nextafter(raw, 1e300)));
  const auto at = q.quota(4, cost);
  if (at < lo || at > hi) o.fail("quota(4) = " + std::to_string(at));
  if (o.ok) {
    o.detail = std::to_string(checked) + " instances; quota(4) = " + std::to_string(at) + fmt(" (direct %.6f)", raw) +
               ", cap " + std::to_string(cap);
  }
  return o;
}

// 7. Decision traces stay within quota and budget.
Outcome budget_compliance() {
  Outcome o;
  std::size_t decisions = 0;
  int runs = 0;
  for (const char* label : {"adaptive", "adapt-40", "adapt-100"}) {
    for (double budget : {3000.0, 30000.0, 300000.0}) {
      for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        TempDir dir("acc7");
        ExperimentConfig cfg;
        cfg.workload.txns = 3000;
        cfg.workload.tuples_per_node = 200;
        cfg.workload.distributed = 0.25;
        cfg.workload.seed = seed;
        cfg.checkpoint_ticks = seed == 3 ? 100000 : 0;
        cfg.strategy = *parse_strategy_label(label);
        cfg.cost.io_budget = budget;
        cfg.data_dir = dir.path();
        const auto r = run_experiment(cfg);
        if (const auto v = audit_trace(r.decisions, cfg.cost)) o.fail(std::string(label) + ": " + *v);
        decisions += r.decisions.size();
        ++runs;
      }
    }
  }
  if (o.ok) o.detail = std::to_string(runs) + " runs, " + std::to_string(decisions) + " decisions audited";
  return o;
}

// 8. Same seed and flags, same bytes.
Outcome determinism() {
  Outcome o;
  for (const char* label : {"aries", "command", "dis-command", "adaptive", "adapt-60"}) {
    std::vector<std::string> csv, traces;
    for (int run = 0; run < 3; ++run) {
      TempDir dir("acc8");
      ExperimentConfig cfg;
      cfg.workload.txns = 5000;
      cfg.workload.tuples_per_node = 300;
      cfg.workload.distributed = 0.1;
      cfg.workload.f_fraction = 0.1;
      cfg.workload.seed = 8;
      cfg.strategy = *parse_strategy_label(label);
      cfg.data_dir = dir.path();
      if (run == 2) cfg.exec.order = ExecOptions::Order::Threaded;
      const auto r = run_experiment(cfg);
      csv.push_back(report_header() + "\n" + to_csv(r.row) + "\n");
      traces.push_back(trace_text(r.decisions));
    }
    if (csv[0] != csv[1] || traces[0] != traces[1]) o.fail(std::string(label) + ": repeated run differs");
    if (csv[0] != csv[2] || traces[0] != traces[2]) o.fail(std::string(label) + ": threaded run differs");
  }
  if (o.ok) o.detail = "report and trace bytes equal across repeat and threaded runs";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"recovery equals serial replay", recovery_oracle},
      {"running example sets", running_example},
      {"redo counts by distributed fraction", redo_counts},
      {"recovery speedups at 10% distributed", speedups},
      {"dependency structures equal brute force", dependency_oracles},
      {"delta reduction and quota", delta_and_quota},
      {"budget and quota compliance", budget_compliance},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    std::printf("%s %zu %s: %s\n", o.ok ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
    if (!o.ok) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
