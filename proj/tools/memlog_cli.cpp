// memlog: run logging/recovery experiments on the simulated cluster.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "memlog/dependency.hpp"
#include "memlog/error.hpp"
#include "memlog/experiment.hpp"

using namespace memlog;

namespace {

struct Options {
  std::string strategy = "dis-command";
  std::optional<double> x;
  std::string dist = "0";
  std::uint32_t nodes = 4;
  std::uint64_t tuples = 1000;
  std::uint64_t items = 100;
  std::uint64_t txns = 5000;
  std::uint32_t writes = 3;
  double f_fraction = 0;
  double zipf = 0;
  std::uint64_t seed = 1;
  double lambda = 4.0;
  double alpha = 1e-5;
  double bio = 300'000;
  Tick checkpoint_ticks = 0;
  std::optional<NodeId> fail_node;
  std::optional<Tick> fail_at;
  std::optional<std::uint64_t> fail_after;
  std::optional<double> fail_rate;
  std::uint32_t lanes = 4;
  bool threaded = false;
  std::string out;
  std::string decisions_out;
  std::string decisions_in;
  std::string data_dir;
};

void add_common(CLI::App* app, Options& o) {
  app->add_option("--x", o.x, "percent of distributed txns given data records (adapt-x mode)")
      ->check(CLI::Range(0.0, 100.0));
  app->add_option("--nodes", o.nodes, "cluster size")->check(CLI::Range(1U, 1024U));
  app->add_option("--tuples", o.tuples, "STOCK rows per node")->check(CLI::PositiveNumber);
  app->add_option("--items", o.items, "ITEM rows per node")->check(CLI::PositiveNumber);
  app->add_option("--txns", o.txns, "transactions to submit");
  app->add_option("--writes", o.writes, "STOCK columns updated per row")->check(CLI::Range(1U, 3U));
  app->add_option("--f-fraction", o.f_fraction, "share of f(x, y) transactions")->check(CLI::Range(0.0, 1.0));
  app->add_option("--zipf", o.zipf, "STOCK key skew")->check(CLI::NonNegativeNumber);
  app->add_option("--seed", o.seed, "workload seed");
  app->add_option("--lambda", o.lambda, "expected failure time in seconds")->check(CLI::PositiveNumber);
  app->add_option("--alpha", o.alpha, "threshold scale")->check(CLI::Range(0.0, 1.0));
  app->add_option("--bio", o.bio, "data-record I/O budget per checkpoint (bytes)")->check(CLI::NonNegativeNumber);
  app->add_option("--checkpoint-ticks", o.checkpoint_ticks, "checkpoint period (0: only at start)")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--fail-node", o.fail_node, "node to fail (default: drawn from the seed)");
  auto* at = app->add_option("--fail-at", o.fail_at, "fail at this tick");
  auto* after = app->add_option("--fail-after", o.fail_after, "fail after nodes x N commits");
  auto* rate = app->add_option("--fail-rate", o.fail_rate, "failures per simulated second")
                   ->check(CLI::PositiveNumber);
  at->excludes(after)->excludes(rate);
  after->excludes(rate);
  app->add_option("--lanes", o.lanes, "recovery lanes per node")->check(CLI::Range(1U, 256U));
  app->add_flag("--threaded", o.threaded, "apply recovery steps on worker threads");
  app->add_option("--out", o.out, "write CSV here instead of stdout");
  app->add_option("--data-dir", o.data_dir, "log and snapshot root (default: $MEMLOG_DATA_DIR or ./memlog-data)");
}

ExperimentConfig make_config(const Options& o, double dist) {
  ExperimentConfig c;
  c.workload.nodes = o.nodes;
  c.workload.tuples_per_node = o.tuples;
  c.workload.items_per_node = o.items;
  c.workload.txns = o.txns;
  c.workload.distributed = dist;
  c.workload.writes_per_txn = o.writes;
  c.workload.f_fraction = o.f_fraction;
  c.workload.zipf = o.zipf;
  c.workload.seed = o.seed;
  c.quota.lambda = o.lambda;
  c.quota.alpha = o.alpha;
  c.cost.io_budget = o.bio;
  c.checkpoint_ticks = o.checkpoint_ticks;
  c.sim.lanes_per_node = o.lanes;
  c.failure.node = o.fail_node;
  if (o.fail_at) {
    c.failure.mode = FailureSchedule::Mode::AtTick;
    c.failure.at = *o.fail_at;
  } else if (o.fail_after) {
    c.failure.mode = FailureSchedule::Mode::AfterCommitsPerSite;
    c.failure.commits_per_site = *o.fail_after;
  } else if (o.fail_rate) {
    c.failure.mode = FailureSchedule::Mode::Rate;
    c.failure.rate = *o.fail_rate;
  }
  if (o.threaded) c.exec.order = ExecOptions::Order::Threaded;
  if (!o.data_dir.empty()) {
    c.data_dir = o.data_dir;
  } else if (const char* env = std::getenv("MEMLOG_DATA_DIR"); env && *env) {
    c.data_dir = env;
  }
  for (const auto& w : c.cost.validate()) std::cerr << "warning: " << w << '\n';
  return c;
}

std::vector<StrategyConfig> strategies_of(const Options& o) {
  std::vector<StrategyConfig> out;
  if (o.strategy == "all") return all_strategies();
  std::stringstream ss(o.strategy);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto s = parse_strategy_label(item);
    if (!s) throw ConfigError("unknown strategy '" + item + "'");
    if (s->strategy == Strategy::Adaptive && o.x && item == "adaptive") {
      s->mode = DecisionMode::AdaptX;
      s->x = *o.x / 100.0;
    }
    out.push_back(*s);
  }
  if (out.empty()) throw ConfigError("no strategy given");
  return out;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty()) throw ConfigError("bad number '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

// Writes to --out or stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw IoError("cannot open " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

void write_decisions(const std::string& path, const std::vector<Decision>& d) {
  if (path.empty()) return;
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path);
  write_trace_csv(f, d);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated in-memory cluster with ARIES, command, distributed command and adaptive logging"};
  app.require_subcommand(1);
  Options o;

  auto* run = app.add_subcommand("run", "run one experiment and print a report row");
  add_common(run, o);
  run->add_option("--strategy", o.strategy, "aries|command|dis-command|adaptive|adapt-<pct>");
  run->add_option("--dist", o.dist, "distributed fraction");
  run->add_option("--decisions", o.decisions_out, "write the adaptive decision trace here");

  auto* sw = app.add_subcommand("sweep", "grid over distributed fractions and strategies");
  add_common(sw, o);
  sw->add_option("--strategy", o.strategy, "comma-separated strategies, or all");
  sw->add_option("--dist", o.dist, "comma-separated distributed fractions");

  auto* replay = app.add_subcommand("replay", "re-run an adaptive experiment with a saved decision trace");
  add_common(replay, o);
  auto* replay_strategy = replay->add_option("--strategy", o.strategy, "adaptive|adapt-<pct> (default adaptive)");
  replay->add_option("--dist", o.dist, "distributed fraction");
  replay->add_option("--trace", o.decisions_in, "decision trace CSV")->required()->check(CLI::ExistingFile);
  replay->add_option("--decisions", o.decisions_out, "write the replayed trace here");

  auto* dump = app.add_subcommand("graph-dump", "print the dependency graph of a workload as DOT");
  add_common(dump, o);
  dump->add_option("--dist", o.dist, "distributed fraction");

  std::string rates = "0.0333,0.000556";
  double hours = 3;
  double checkpoint_s = 600;
  auto* overall = app.add_subcommand("overall", "long-run throughput under periodic failures");
  add_common(overall, o);
  overall->add_option("--strategy", o.strategy, "comma-separated strategies, or all");
  overall->add_option("--dist", o.dist, "distributed fraction");
  overall->add_option("--rates", rates, "comma-separated failure rates per second");
  overall->add_option("--hours", hours, "simulated duration")->check(CLI::PositiveNumber);
  overall->add_option("--checkpoint-s", checkpoint_s, "checkpoint period in seconds")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    Output out(o.out);
    auto& os = out.stream();
    if (replay->parsed() && replay_strategy->count() == 0) o.strategy = "adaptive";
    if (run->parsed() || replay->parsed()) {
      const auto strategies = strategies_of(o);
      if (strategies.size() != 1) throw ConfigError("run takes exactly one strategy");
      auto cfg = make_config(o, parse_list(o.dist).at(0));
      cfg.strategy = strategies[0];
      if (replay->parsed()) {
        if (cfg.strategy.strategy != Strategy::Adaptive) throw ConfigError("replay needs an adaptive strategy");
        std::ifstream f(o.decisions_in);
        cfg.forced_decisions = read_trace_csv(f);
      }
      const auto rep = run_experiment(cfg);
      os << report_header() << '\n' << to_csv(rep.row) << '\n';
      write_decisions(o.decisions_out, rep.decisions);
    } else if (sw->parsed()) {
      const auto base = make_config(o, 0);
      os << report_header() << '\n';
      for (const auto& rep : sweep(base, parse_list(o.dist), strategies_of(o))) os << to_csv(rep.row) << '\n';
    } else if (dump->parsed()) {
      auto cfg = make_config(o, parse_list(o.dist).at(0));
      cfg.strategy = {Strategy::DisCommand, DecisionMode::Threshold, 1.0};
      const auto rep = run_experiment(cfg);
      const auto base = load_snapshot(make_schema(), rep.snapshot_dir, rep.snapshot_id);
      const auto fps = load_footprints(rep.logs, base.node_count);
      const Placement placement(base);
      os << to_dot(build_graph(fps, &placement));
    } else if (overall->parsed()) {
      OverallConfig oc;
      oc.duration_s = hours * 3600;
      oc.checkpoint_s = checkpoint_s;
      oc.seed = o.seed;
      auto cfg = make_config(o, parse_list(o.dist).at(0));
      os << "failures_per_s," << overall_header() << '\n';
      std::vector<ExperimentReport> cal;
      for (const auto& s : strategies_of(o)) {
        cfg.strategy = s;
        cal.push_back(run_experiment(cfg));
      }
      for (double r : parse_list(rates)) {
        oc.failures_per_s = r;
        for (const auto& c : cal) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.6g", r);
          os << buf << ',' << to_csv(run_overall(c, oc)) << '\n';
        }
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
