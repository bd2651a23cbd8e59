#include "memlog/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "memlog/error.hpp"
#include "memlog/rng.hpp"

namespace memlog {

std::string StrategyConfig::label() const {
  if (strategy != Strategy::Adaptive) return std::string(to_string(strategy));
  if (mode == DecisionMode::Threshold) return "adaptive";
  return "adapt-" + std::to_string(static_cast<int>(std::lround(x * 100)));
}

std::optional<StrategyConfig> parse_strategy_label(std::string_view s) {
  if (auto st = parse_strategy(s)) return StrategyConfig{*st, DecisionMode::Threshold, 1.0};
  constexpr std::string_view prefix = "adapt-";
  if (s.substr(0, prefix.size()) != prefix) return std::nullopt;
  const std::string rest(s.substr(prefix.size()));
  if (rest.empty() || rest.find_first_not_of("0123456789") != std::string::npos || rest.size() > 3) {
    return std::nullopt;
  }
  const int pct = std::stoi(rest);
  if (pct > 100) return std::nullopt;
  return StrategyConfig{Strategy::Adaptive, DecisionMode::AdaptX, pct / 100.0};
}

std::vector<StrategyConfig> all_strategies() {
  return {{Strategy::Aries, DecisionMode::Threshold, 1.0},
          {Strategy::Command, DecisionMode::Threshold, 1.0},
          {Strategy::DisCommand, DecisionMode::Threshold, 1.0},
          {Strategy::Adaptive, DecisionMode::AdaptX, 0.4},
          {Strategy::Adaptive, DecisionMode::AdaptX, 0.6},
          {Strategy::Adaptive, DecisionMode::AdaptX, 1.0}};
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

class StateSource : public AttrSource {
 public:
  explicit StateSource(const ClusterState& s) : s_(s) {}
  std::optional<Value> load(const AttrId& a) const override { return s_.value(a); }

 private:
  const ClusterState& s_;
};


std::filesystem::path run_dir(const ExperimentConfig& cfg) {
  const auto& w = cfg.workload;
  return cfg.data_dir / ("run-" + cfg.strategy.label() + "-n" + std::to_string(w.nodes) + "-t" +
                         std::to_string(w.tuples_per_node) + "-x" + std::to_string(w.txns) + "-d" +
                         fixed(w.distributed, 4) + "-s" + std::to_string(w.seed));
}

}  // namespace

ClusterState serial_replay(const Engine& engine) {
  ClusterState s = engine.restore_snapshot(engine.state().last_checkpoint.snapshot_id);
  for (const auto& t : engine.state().committed_log) {
    const auto e = run_procedure(engine.procedures(), t.proc, t.params, StateSource(s));
    for (const auto& w : e.writes) {
      s.store[s.partition_map.at(w.attr.tuple)].at(w.attr.tuple).at(w.attr.column) = w.new_value;
    }
  }
  return s;
}

std::vector<LogKind> log_kinds(Strategy s) {
  switch (s) {
    case Strategy::Aries: return {LogKind::Aries};
    case Strategy::Command: return {LogKind::Command};
    case Strategy::DisCommand: return {LogKind::Command, LogKind::Footprint};
    case Strategy::Adaptive: return {LogKind::Aries, LogKind::Command, LogKind::Footprint};
  }
  return {};
}

void log_commit(LogSet& logs, Strategy strategy, const Transaction& c, const Engine& engine, bool aries) {
  switch (strategy) {
    case Strategy::Aries:
      for (NodeId n : c.participants) {
        auto r = make_aries(c, engine.schema(), engine.state(), n);
        if (!r.writes.empty()) logs.append(LogKind::Aries, n, r);
      }
      break;
    case Strategy::Command: logs.append(LogKind::Command, c.coordinator, make_command(c)); break;
    case Strategy::DisCommand:
      logs.append(LogKind::Command, c.coordinator, make_command(c));
      logs.append(LogKind::Footprint, c.coordinator, make_footprint(c));
      break;
    case Strategy::Adaptive:
      if (aries) logs.append(LogKind::Aries, c.coordinator, make_aries(c, engine.schema(), engine.state()));
      else logs.append(LogKind::Command, c.coordinator, make_command(c));
      logs.append(LogKind::Footprint, c.coordinator, make_footprint(c, aries));
      break;
  }
}

std::string report_header() {
  return "strategy,nodes,tuples,txns,dist,seed,failed_node,committed,since_checkpoint,reprocessed,reexecuted,"
         "images_applied,recovery_ticks,graph_build_ticks,bytes_read,log_bytes,aries_records,throughput_tps,"
         "avg_aries_bytes,avg_command_bytes,avg_footprint_bytes";
}

std::string to_csv(const ReportRow& r) {
  std::string s;
  s += r.strategy + ',' + std::to_string(r.nodes) + ',' + std::to_string(r.tuples) + ',' + std::to_string(r.txns) +
       ',' + fixed(r.dist, 4) + ',' + std::to_string(r.seed) + ',' + std::to_string(r.failed_node) + ',' +
       std::to_string(r.committed) + ',' + std::to_string(r.since_checkpoint) + ',' +
       std::to_string(r.reprocessed) + ',' + std::to_string(r.reexecuted) + ',' + std::to_string(r.images_applied) +
       ',' + std::to_string(r.recovery_ticks) + ',' + std::to_string(r.graph_build_ticks) + ',' +
       std::to_string(r.bytes_read) + ',' + std::to_string(r.log_bytes) + ',' + std::to_string(r.aries_records) +
       ',' + fixed(r.throughput_tps, 3) + ',' + fixed(r.avg_aries_bytes, 3) + ',' + fixed(r.avg_command_bytes, 3) +
       ',' + fixed(r.avg_footprint_bytes, 3);
  return s;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  const auto& spec = cfg.workload;
  spec.validate();
  (void)cfg.cost.validate();
  const auto dir = run_dir(cfg);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  Engine engine(make_schema(), spec.nodes, dir / "snapshots");
  register_builtin_procedures(engine);
  load_data(engine, spec);
  std::uint64_t epoch = engine.checkpoint();

  const Strategy strategy = cfg.strategy.strategy;
  LogSet logs(dir / "logs", cfg.flush);
  logs.declare(log_kinds(strategy), spec.nodes);
  logs.rotate(epoch);

  std::optional<OnlineSelector> selector;
  if (strategy == Strategy::Adaptive) {
    selector.emplace(cfg.cost, cfg.quota, cfg.strategy.mode, cfg.strategy.x);
    selector->reset(engine.state().last_checkpoint.tick, epoch);
    if (cfg.forced_decisions) {
      std::unordered_map<TxnId, bool> forced;
      for (const auto& d : *cfg.forced_decisions) forced[d.txn] = d.aries;
      selector->force(std::move(forced));
    }
  }

  Rng fail_rng(spec.seed * 0x9E3779B97F4A7C15ULL + 0x51ED);
  const NodeId failed = cfg.failure.node ? *cfg.failure.node : static_cast<NodeId>(fail_rng.below(spec.nodes));
  if (failed >= spec.nodes) throw ConfigError("failure target " + std::to_string(failed) + " is not a node");
  std::optional<Tick> fail_at;
  if (cfg.failure.mode == FailureSchedule::Mode::AtTick) fail_at = cfg.failure.at;
  if (cfg.failure.mode == FailureSchedule::Mode::Rate) {
    fail_at = static_cast<Tick>(std::llround(fail_rng.exponential(cfg.failure.rate) * kTicksPerSecond));
  }

  const auto requests = generate_workload(spec);
  std::vector<Tick> clock(spec.nodes, 0);
  Tick next_checkpoint = cfg.checkpoint_ticks > 0 ? cfg.checkpoint_ticks : std::numeric_limits<Tick>::max();
  std::uint64_t committed = 0;
  double aries_bytes = 0;
  double command_bytes = 0;
  double footprint_bytes = 0;

  for (const auto& req : requests) {
    if (fail_at && req.submit >= *fail_at) break;
    if (cfg.failure.mode == FailureSchedule::Mode::AfterCommitsPerSite &&
        committed >= cfg.failure.commits_per_site * spec.nodes) {
      break;
    }
    if (req.submit >= next_checkpoint) {
      logs.flush_all();
      epoch = engine.checkpoint();
      logs.rotate(epoch);
      if (selector) selector->reset(engine.state().last_checkpoint.tick, epoch);
      while (next_checkpoint <= req.submit) next_checkpoint += cfg.checkpoint_ticks;
    }

    PreparedTxn prepared = engine.prepare(req.proc, req.params, req.submit);
    const Transaction& t = prepared.txn;
    const auto accesses = t.accesses();
    bool aries = false;
    if (selector) {
      aries = selector->decide({t.id, t.submit, t.distributed(), accesses, t.writes.size()});
    }

    // Record sizes do not depend on the commit tick, so the I/O charge can
    // be computed before commit.
    const auto full_aries = make_aries(t, engine.schema(), engine.state());
    const auto command = make_command(t);
    const auto footprint = make_footprint(t, aries);
    aries_bytes += static_cast<double>(encoded_size(full_aries));
    command_bytes += static_cast<double>(encoded_size(command));
    footprint_bytes += static_cast<double>(encoded_size(footprint));
    std::size_t io_bytes = 0;
    switch (strategy) {
      case Strategy::Aries:
        for (NodeId n : t.participants) {
          const auto r = make_aries(t, engine.schema(), engine.state(), n);
          if (!r.writes.empty()) io_bytes += encoded_size(r);
        }
        break;
      case Strategy::Command: io_bytes = encoded_size(command); break;
      case Strategy::DisCommand: io_bytes = encoded_size(command) + encoded_size(footprint); break;
      case Strategy::Adaptive:
        io_bytes = (aries ? encoded_size(full_aries) : encoded_size(command)) + encoded_size(footprint);
        break;
    }

    Tick start = t.submit;
    for (NodeId n : t.participants) start = std::max(start, clock[n]);
    const Tick duration = cfg.sim.exec + (t.distributed() ? cfg.sim.dist_exec : 0) +
                          (selector ? cfg.sim.decision : 0) +
                          static_cast<Tick>(std::llround(static_cast<double>(io_bytes) * cfg.sim.io_per_byte));
    const Tick finish = start + duration;
    for (NodeId n : t.participants) clock[n] = finish;
    const Tick commit_tick = std::max(finish, engine.last_commit() + 1);
    const Transaction& c = engine.commit(std::move(prepared), commit_tick);
    ++committed;

    log_commit(logs, strategy, c, engine, aries);
    if (selector) selector->record(make_footprint(c, aries));
  }
  // The failure strikes once the node goes idle: every acknowledged commit
  // has been flushed.
  logs.flush_all();

  const ClusterState oracle = serial_replay(engine);
  if (!same_data(oracle, engine.state())) {
    throw RecoveryError("serial replay diverges from live processing:\n" + diff_data(oracle, engine.state()));
  }
  const std::uint64_t since_checkpoint = engine.state().committed_log.size();
  const Tick processing_ticks = engine.last_commit();
  engine.crash(failed);

  RecoveryInputs in;
  in.schema = &engine.schema();
  in.procedures = &engine.procedures();
  in.snapshot_dir = engine.snapshot_dir();
  in.snapshot_id = engine.state().last_checkpoint.snapshot_id;
  in.logs = logs.layout();
  in.cost = cfg.cost;
  in.sim = cfg.sim;
  in.exec = cfg.exec;

  ExperimentReport rep;
  rep.recovery = recover(strategy, in, engine.state(), failed);
  if (!same_data(rep.recovery.state, oracle)) {
    throw RecoveryError(std::string(to_string(strategy)) + " recovery of node " + std::to_string(failed) +
                        " diverges from the oracle:\n" + diff_data(rep.recovery.state, oracle));
  }
  rep.processing_ticks = processing_ticks;
  rep.logs = in.logs;
  rep.snapshot_dir = in.snapshot_dir;
  rep.snapshot_id = in.snapshot_id;
  if (selector) rep.decisions = selector->trace();

  auto& row = rep.row;
  const auto& m = rep.recovery.metrics;
  row.strategy = cfg.strategy.label();
  row.nodes = spec.nodes;
  row.tuples = spec.tuples_per_node;
  row.txns = spec.txns;
  row.dist = spec.distributed;
  row.seed = spec.seed;
  row.failed_node = failed;
  row.committed = committed;
  row.since_checkpoint = since_checkpoint;
  row.reprocessed = m.reprocessed;
  row.reexecuted = m.reexecuted;
  row.images_applied = m.images_applied;
  row.recovery_ticks = m.recovery_ticks;
  row.graph_build_ticks = m.graph_build_ticks;
  row.bytes_read = m.bytes_read;
  row.log_bytes = logs.appended_bytes();
  row.aries_records = logs.appended_records(LogKind::Aries);
  row.throughput_tps = processing_ticks > 0 ? static_cast<double>(committed) * kTicksPerSecond /
                                                  static_cast<double>(processing_ticks)
                                            : 0.0;
  if (committed > 0) {
    row.avg_aries_bytes = aries_bytes / static_cast<double>(committed);
    row.avg_command_bytes = command_bytes / static_cast<double>(committed);
    row.avg_footprint_bytes = footprint_bytes / static_cast<double>(committed);
  }
  return rep;
}

std::vector<ExperimentReport> sweep(const ExperimentConfig& base, const std::vector<double>& dists,
                                    const std::vector<StrategyConfig>& strategies) {
  std::vector<ExperimentReport> out;
  for (double d : dists) {
    for (const auto& s : strategies) {
      ExperimentConfig cfg = base;
      cfg.workload.distributed = d;
      cfg.strategy = s;
      out.push_back(run_experiment(cfg));
    }
  }
  return out;
}

OverallResult run_overall(double processing_tps, double recovery_s_per_txn, const std::string& label,
                          const OverallConfig& cfg) {
  if (processing_tps <= 0 || recovery_s_per_txn < 0) throw ConfigError("calibration rates must be positive");
  if (cfg.duration_s <= 0 || cfg.checkpoint_s <= 0) throw ConfigError("durations must be positive");
  OverallResult r;
  r.strategy = label;
  r.processing_tps = processing_tps;
  r.recovery_s_per_txn = recovery_s_per_txn;

  Rng rng(cfg.seed);
  auto next_failure = [&](double from) {
    return cfg.failures_per_s > 0 ? from + rng.exponential(cfg.failures_per_s)
                                  : std::numeric_limits<double>::infinity();
  };
  double t = 0;
  double last_checkpoint = 0;
  double since_checkpoint = 0;  // transactions a failure would have to recover
  double fail_at = next_failure(0);
  const double end = cfg.duration_s;
  while (t < end) {
    const double checkpoint_at = last_checkpoint + cfg.checkpoint_s;
    const double stop = std::min({fail_at, checkpoint_at, end});
    const double processed = (stop - t) * processing_tps;
    r.committed += processed;
    since_checkpoint += processed;
    t = stop;
    if (t >= end) break;
    if (stop == fail_at) {
      ++r.failures;
      const double rec = since_checkpoint * recovery_s_per_txn;
      const double rec_end = std::min(t + rec, end);
      r.downtime_s += rec_end - t;
      t = rec_end;
      fail_at = next_failure(t);
      if (t >= last_checkpoint + cfg.checkpoint_s) {
        last_checkpoint = t;
        since_checkpoint = 0;
      }
    } else {
      last_checkpoint = t;
      since_checkpoint = 0;
    }
  }
  r.overall_tps = r.committed / cfg.duration_s;
  return r;
}

OverallResult run_overall(const ExperimentReport& calibration, const OverallConfig& cfg) {
  const auto& row = calibration.row;
  if (row.committed == 0 || row.since_checkpoint == 0) throw ConfigError("calibration run committed nothing");
  const double tps = row.throughput_tps;
  const double rec = static_cast<double>(row.recovery_ticks) / static_cast<double>(row.since_checkpoint) /
                     static_cast<double>(kTicksPerSecond);
  return run_overall(tps, rec, row.strategy, cfg);
}

std::string overall_header() {
  return "strategy,processing_tps,recovery_s_per_txn,failures,downtime_s,committed,overall_tps";
}

std::string to_csv(const OverallResult& r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", r.recovery_s_per_txn);
  return r.strategy + ',' + fixed(r.processing_tps, 3) + ',' + buf + ',' + std::to_string(r.failures) + ',' +
         fixed(r.downtime_s, 3) + ',' + fixed(r.committed, 0) + ',' + fixed(r.overall_tps, 3);
}

}  // namespace memlog
