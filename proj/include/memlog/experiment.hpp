#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "memlog/adaptive.hpp"
#include "memlog/recovery.hpp"
#include "memlog/workload.hpp"

namespace memlog {

// A logging strategy as run by the harness. Adaptive logging either uses
// the benefit threshold or logs a fraction x of distributed transactions
// with data records ("adapt-40" is x = 0.4).
struct StrategyConfig {
  Strategy strategy = Strategy::DisCommand;
  DecisionMode mode = DecisionMode::Threshold;
  double x = 1.0;

  std::string label() const;
};

// "aries", "command", "dis-command", "adaptive" or "adapt-<percent>".
std::optional<StrategyConfig> parse_strategy_label(std::string_view s);
// aries, command, dis-command, adapt-40, adapt-60, adapt-100.
std::vector<StrategyConfig> all_strategies();

// The no-crash oracle: the last snapshot with every transaction committed
// since then re-run serially in commit order.
ClusterState serial_replay(const Engine& engine);

// Log streams each strategy writes.
std::vector<LogKind> log_kinds(Strategy s);
// Appends the records `strategy` keeps for a committed transaction. `aries`
// is the adaptive decision and is ignored by the other strategies.
void log_commit(LogSet& logs, Strategy strategy, const Transaction& c, const Engine& engine, bool aries);

struct FailureSchedule {
  enum class Mode { AfterAll, AtTick, AfterCommitsPerSite, Rate };
  Mode mode = Mode::AfterAll;
  Tick at = 0;                        // AtTick
  std::uint64_t commits_per_site = 0; // AfterCommitsPerSite: stop at nodes × this many commits
  double rate = 0;                    // Rate: failures per simulated second
  std::optional<NodeId> node;         // otherwise drawn from the seed
};

struct ExperimentConfig {
  WorkloadSpec workload;
  FailureSchedule failure;
  StrategyConfig strategy;
  CostModel cost;
  QuotaModel quota;
  SimCosts sim;
  Tick checkpoint_ticks = 0;  // 0: only the initial checkpoint
  FlushPolicy flush;
  std::filesystem::path data_dir = "memlog-data";
  ExecOptions exec;
  std::optional<std::vector<Decision>> forced_decisions;
};

struct ReportRow {
  std::string strategy;
  std::uint32_t nodes = 0;
  std::uint64_t tuples = 0;
  std::uint64_t txns = 0;
  double dist = 0;
  std::uint64_t seed = 0;
  NodeId failed_node = 0;
  std::uint64_t committed = 0;
  std::uint64_t since_checkpoint = 0;
  std::uint64_t reprocessed = 0;
  std::uint64_t reexecuted = 0;
  std::uint64_t images_applied = 0;
  Tick recovery_ticks = 0;
  Tick graph_build_ticks = 0;
  std::uint64_t bytes_read = 0;
  std::uint64_t log_bytes = 0;
  std::uint64_t aries_records = 0;
  double throughput_tps = 0;
  double avg_aries_bytes = 0;
  double avg_command_bytes = 0;
  double avg_footprint_bytes = 0;
};

std::string report_header();
std::string to_csv(const ReportRow& r);

struct ExperimentReport {
  ReportRow row;
  std::vector<Decision> decisions;
  RecoveryResult recovery;
  Tick processing_ticks = 0;  // last commit tick
  LogLayout logs;
  std::filesystem::path snapshot_dir;
  std::uint64_t snapshot_id = 0;
};

// Processes the workload under the strategy's logging, fails one node,
// recovers it from the files on disk and checks the result against serial
// replay. Throws RecoveryError with a diff when the states differ.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// One run per (distributed fraction, strategy), fraction-major.
std::vector<ExperimentReport> sweep(const ExperimentConfig& base, const std::vector<double>& dists,
                                    const std::vector<StrategyConfig>& strategies);

struct OverallConfig {
  double duration_s = 3 * 3600.0;
  double checkpoint_s = 600.0;
  double failures_per_s = 1.0 / 1800;
  std::uint64_t seed = 1;
};

struct OverallResult {
  std::string strategy;
  double processing_tps = 0;
  double recovery_s_per_txn = 0;
  std::uint64_t failures = 0;
  double downtime_s = 0;
  double committed = 0;
  double overall_tps = 0;
};

// Long-run throughput with periodic checkpoints and Poisson failures.
// Processing rate and per-transaction recovery cost are calibrated from
// `calibration`; the multi-hour timeline itself is computed analytically.
OverallResult run_overall(const ExperimentReport& calibration, const OverallConfig& cfg);
OverallResult run_overall(double processing_tps, double recovery_s_per_txn, const std::string& label,
                          const OverallConfig& cfg);

std::string overall_header();
std::string to_csv(const OverallResult& r);

}  // namespace memlog
