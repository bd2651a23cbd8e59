#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "memlog/access_index.hpp"
#include "memlog/cost_model.hpp"

namespace memlog {

// P(X ≤ n) for X ~ Poisson(lambda).
double poisson_cdf(double lambda, std::int64_t n);

// Failure-time model behind the ARIES quota. λ and k are in simulated
// seconds.
struct QuotaModel {
  double lambda = 4.0;
  double alpha = 1e-5;

  // floor(P(fail ≤ ⌊k⌋) · budget / avg_io)
  std::int64_t quota(double k_seconds, const CostModel& cost) const;
  std::int64_t max_quota(const CostModel& cost) const;
};

// Ticks saved for t_i's recovery by a data record on t_j.
double delta(const InvertedIndex& idx, std::size_t pos_j, std::size_t pos_i, const CostModel& cost);
// delta with the members flagged in `aries` already data-logged.
double delta_with_set(const InvertedIndex& idx, std::size_t pos_j, std::size_t pos_i,
                      const std::vector<char>& aries, const CostModel& cost);
// p(T_a, t_j): attributes written after t_j by data-logged transactions.
std::vector<AttrId> covered_after(const InvertedIndex& idx, std::size_t pos_j, const std::vector<char>& aries);

struct OfflineStep {
  TxnId txn = 0;
  double benefit = 0;
  double io_used = 0;  // after adding txn
};

struct OfflineResult {
  std::vector<TxnId> selected;  // in selection order
  std::vector<char> aries;      // flags by index position
  std::vector<OfflineStep> trace;
};

// Greedy budgeted selection over a complete history: repeatedly take the
// highest-benefit transaction (lowest id on ties) until the next one would
// overrun the I/O budget.
OfflineResult offline_select(const InvertedIndex& idx, const CostModel& cost);
// b(t) of every position under the current selection. Exposed for audits.
std::vector<double> offline_benefits(const InvertedIndex& idx, const std::vector<char>& aries,
                                     const CostModel& cost);

enum class DecisionMode { Threshold, AdaptX };

struct Decision {
  std::uint64_t epoch = 0;  // checkpoint epoch the decision belongs to
  TxnId txn = 0;
  Tick submit = 0;
  double estimate = 0;
  double gamma = 0;
  std::int64_t quota = 0;
  std::int64_t used = 0;    // data records before this decision
  double io_cost = 0;       // I/O this record would cost as a data record
  double io_used = 0;       // data-record I/O after this decision
  bool aries = false;
};

// What the selector sees of a transaction about to commit.
struct Candidate {
  TxnId txn = 0;
  Tick submit = 0;
  bool distributed = false;
  std::span<const Access> accesses;
  std::size_t write_count = 0;
};

// Per-transaction choice between a data record and a command record.
class OnlineSelector {
 public:
  OnlineSelector(CostModel cost, QuotaModel quota, DecisionMode mode = DecisionMode::Threshold,
                 double x = 1.0, std::size_t window = 64);

  // Starts a new epoch after a checkpoint taken at `tick`.
  void reset(Tick checkpoint_tick, std::uint64_t epoch);

  double estimate(std::span<const Access> accesses) const;
  double b_opt(Tick now) const;
  double gamma(Tick now) const { return quota_model_.alpha * b_opt(now); }
  std::int64_t quota(Tick now) const;

  // Decides, appends to the trace and counts the record against the quota.
  bool decide(const Candidate& c);
  // Must be called for every committed transaction, in commit order.
  void record(const FootprintRecord& f);
  // Forces the next decision for `txn` (used to replay a saved trace).
  void force(std::unordered_map<TxnId, bool> decisions) { forced_ = std::move(decisions); }

  const std::vector<Decision>& trace() const { return trace_; }
  std::int64_t used() const { return used_; }
  double io_used() const { return io_used_; }
  const InvertedIndex& index() const { return index_; }
  const AccessHistogram& histogram() const { return histogram_; }
  const CostModel& cost() const { return cost_; }

 private:
  double rho(Tick now) const;
  double adapt_score(std::span<const Access> accesses) const;

  CostModel cost_;
  QuotaModel quota_model_;
  DecisionMode mode_;
  double x_;
  std::size_t window_size_;
  InvertedIndex index_;
  AccessHistogram histogram_;
  std::vector<char> aries_;  // by index position
  Tick checkpoint_tick_ = 0;
  std::uint64_t epoch_ = 0;
  std::int64_t used_ = 0;
  double io_used_ = 0;
  std::uint64_t distributed_seen_ = 0;
  std::deque<double> window_;
  std::vector<Decision> trace_;
  std::optional<std::unordered_map<TxnId, bool>> forced_;
};

// Budget and quota compliance of a trace: every ARIES decision stays within
// quota and the cumulative I/O never exceeds the budget. Returns the first
// violation, if any.
std::optional<std::string> audit_trace(std::span<const Decision> trace, const CostModel& cost);

void write_trace_csv(std::ostream& os, std::span<const Decision> trace);
std::vector<Decision> read_trace_csv(std::istream& is);

}  // namespace memlog
