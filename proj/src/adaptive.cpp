#include "memlog/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "memlog/error.hpp"
#include "memlog/time_dependence.hpp"

namespace memlog {

double poisson_cdf(double lambda, std::int64_t n) {
  if (n < 0) return 0.0;
  if (lambda <= 0) return 1.0;
  const double log_lambda = std::log(lambda);
  if (static_cast<double>(n) > lambda) {
    // Past the mode the upper tail is small and shrinking, so 1 - tail keeps
    // the CDF from stalling just below 1.
    double term = std::exp(-lambda + static_cast<double>(n + 1) * log_lambda -
                           std::lgamma(static_cast<double>(n) + 2.0));
    double tail = 0;
    for (std::int64_t i = n + 2; term > 0 && term >= tail * 1e-18; ++i) {
      tail += term;
      term *= lambda / static_cast<double>(i);
    }
    return std::max(0.0, 1.0 - tail);
  }
  if (lambda <= 30) {
    double term = std::exp(-lambda);
    double sum = term;
    for (std::int64_t i = 1; i <= n; ++i) {
      term *= lambda / static_cast<double>(i);
      sum += term;
    }
    return std::min(sum, 1.0);
  }
  // Large λ: e^{-λ} underflows the running product, so sum in log space.
  double acc = -std::numeric_limits<double>::infinity();
  for (std::int64_t i = 0; i <= n; ++i) {
    const double lt = -lambda + static_cast<double>(i) * log_lambda - std::lgamma(static_cast<double>(i) + 1.0);
    const double hi = std::max(acc, lt);
    acc = hi + std::log(std::exp(acc - hi) + std::exp(lt - hi));
  }
  return std::min(std::exp(acc), 1.0);
}

std::int64_t QuotaModel::quota(double k_seconds, const CostModel& cost) const {
  if (k_seconds < 0) k_seconds = 0;
  const auto k = static_cast<std::int64_t>(std::floor(k_seconds));
  return static_cast<std::int64_t>(std::floor(poisson_cdf(lambda, k) * cost.io_budget / cost.avg_aries_io));
}

std::int64_t QuotaModel::max_quota(const CostModel& cost) const {
  return static_cast<std::int64_t>(std::floor(cost.io_budget / cost.avg_aries_io));
}

std::vector<AttrId> covered_after(const InvertedIndex& idx, std::size_t pos_j, const std::vector<char>& aries) {
  std::vector<AttrId> out;
  for (std::size_t p = pos_j + 1; p < idx.size() && p < aries.size(); ++p) {
    if (!aries[p]) continue;
    auto w = written_attrs(idx.at(p));
    out.insert(out.end(), w.begin(), w.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double delta(const InvertedIndex& idx, std::size_t pos_j, std::size_t pos_i, const CostModel& cost) {
  const auto closure = time_dependent_closure(idx, pos_i);
  const auto attrs = written_attrs(idx.at(pos_j));
  const auto between = phi(idx, pos_j, pos_i, attrs);
  return static_cast<double>(closure.size()) * cost.cmd_redo -
         static_cast<double>(between.size()) * cost.cmd_redo - cost.aries_redo;
}

double delta_with_set(const InvertedIndex& idx, std::size_t pos_j, std::size_t pos_i,
                      const std::vector<char>& aries, const CostModel& cost) {
  const auto closure = time_dependent_closure(idx, pos_i);
  const auto remaining = std::count_if(closure.begin(), closure.end(),
                                       [&](std::size_t p) { return p >= aries.size() || !aries[p]; });
  const auto written = written_attrs(idx.at(pos_j));
  const auto covered = covered_after(idx, pos_j, aries);
  std::vector<AttrId> open;
  std::set_difference(written.begin(), written.end(), covered.begin(), covered.end(), std::back_inserter(open));
  const auto between = phi(idx, pos_j, pos_i, open);
  return static_cast<double>(remaining) * cost.cmd_redo - cost.aries_redo -
         static_cast<double>(between.size()) * cost.cmd_redo;
}

namespace {

// Closures and their inverse (which targets each candidate appears in).
struct ClosureTable {
  std::vector<std::vector<std::size_t>> closure;
  std::vector<std::vector<std::size_t>> targets;
};

ClosureTable closures_of(const InvertedIndex& idx) {
  ClosureTable t;
  t.closure.resize(idx.size());
  t.targets.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    t.closure[i] = time_dependent_closure(idx, i);
    for (std::size_t j : t.closure[i]) t.targets[j].push_back(i);
  }
  return t;
}

double benefit_of(const InvertedIndex& idx, const ClosureTable& ct, const std::vector<std::int64_t>& remaining,
                  std::size_t c, const std::vector<char>& aries, const CostModel& cost) {
  const auto& f = idx.at(c);
  const auto written = written_attrs(f);
  const auto covered = covered_after(idx, c, aries);
  std::vector<AttrId> open;
  std::set_difference(written.begin(), written.end(), covered.begin(), covered.end(), std::back_inserter(open));
  double sum = 0;
  for (std::size_t t : ct.targets[c]) {
    const auto between = phi(idx, c, t, open);
    sum += static_cast<double>(remaining[t]) * cost.cmd_redo - cost.aries_redo -
           static_cast<double>(between.size()) * cost.cmd_redo;
  }
  return sum / cost.aries_io_of(written.size());
}

std::vector<std::int64_t> remaining_counts(const ClosureTable& ct, const std::vector<char>& aries) {
  std::vector<std::int64_t> out(ct.closure.size());
  for (std::size_t i = 0; i < ct.closure.size(); ++i) {
    out[i] = std::count_if(ct.closure[i].begin(), ct.closure[i].end(), [&](std::size_t p) { return !aries[p]; });
  }
  return out;
}

}  // namespace

std::vector<double> offline_benefits(const InvertedIndex& idx, const std::vector<char>& aries,
                                     const CostModel& cost) {
  const auto ct = closures_of(idx);
  const auto remaining = remaining_counts(ct, aries);
  std::vector<double> out(idx.size());
  for (std::size_t c = 0; c < idx.size(); ++c) out[c] = benefit_of(idx, ct, remaining, c, aries, cost);
  return out;
}

OfflineResult offline_select(const InvertedIndex& idx, const CostModel& cost) {
  OfflineResult r;
  const std::size_t n = idx.size();
  r.aries.assign(n, 0);
  if (n == 0) return r;
  const auto ct = closures_of(idx);
  auto remaining = remaining_counts(ct, r.aries);
  std::vector<double> benefit(n);
  for (std::size_t c = 0; c < n; ++c) benefit[c] = benefit_of(idx, ct, remaining, c, r.aries, cost);

  double io_used = 0;
  std::vector<char> dirty(n, 0);
  for (;;) {
    std::optional<std::size_t> best;
    for (std::size_t c = 0; c < n; ++c) {
      if (r.aries[c]) continue;
      if (!best || benefit[c] > benefit[*best] ||
          (benefit[c] == benefit[*best] && idx.at(c).txn_id < idx.at(*best).txn_id)) {
        best = c;
      }
    }
    if (!best) break;
    const std::size_t m = *best;
    const double w = cost.aries_io_of(written_attrs(idx.at(m)).size());
    if (io_used + w > cost.io_budget) break;
    io_used += w;
    r.aries[m] = 1;
    r.selected.push_back(idx.at(m).txn_id);
    r.trace.push_back({idx.at(m).txn_id, benefit[m], io_used});

    // Recompute only the candidates whose delta terms moved: those sharing
    // a target with m, and earlier writers of anything m writes.
    std::vector<std::size_t> affected;
    for (std::size_t t : ct.targets[m]) {
      --remaining[t];
      for (std::size_t c : ct.closure[t]) {
        if (!dirty[c]) {
          dirty[c] = 1;
          affected.push_back(c);
        }
      }
    }
    for (const auto& a : written_attrs(idx.at(m))) {
      for (std::size_t c : idx.writers_between(a, std::numeric_limits<Tick>::min(), idx.at(m).commit)) {
        if (!dirty[c]) {
          dirty[c] = 1;
          affected.push_back(c);
        }
      }
    }
    for (std::size_t c : affected) {
      dirty[c] = 0;
      if (!r.aries[c]) benefit[c] = benefit_of(idx, ct, remaining, c, r.aries, cost);
    }
  }
  return r;
}

OnlineSelector::OnlineSelector(CostModel cost, QuotaModel quota, DecisionMode mode, double x, std::size_t window)
    : cost_(cost), quota_model_(quota), mode_(mode), x_(x), window_size_(window == 0 ? 1 : window) {
  if (x_ < 0 || x_ > 1) throw ConfigError("x must be within [0, 1]");
}

void OnlineSelector::reset(Tick checkpoint_tick, std::uint64_t epoch) {
  epoch_ = epoch;
  index_.clear();
  aries_.clear();
  checkpoint_tick_ = checkpoint_tick;
  used_ = 0;
  io_used_ = 0;
  distributed_seen_ = 0;
  window_.clear();
}

double OnlineSelector::rho(Tick now) const {
  const double elapsed = static_cast<double>(now - checkpoint_tick_) / static_cast<double>(kTicksPerSecond);
  if (elapsed <= 0 || index_.size() == 0) return 0.0;
  return static_cast<double>(index_.size()) / elapsed * quota_model_.lambda;
}

double OnlineSelector::b_opt(Tick now) const {
  return (rho(now) * cost_.avg_cmd_redo * histogram_.probability_mass() - cost_.avg_aries_redo) / cost_.avg_aries_io;
}

std::int64_t OnlineSelector::quota(Tick now) const {
  const double k = static_cast<double>(now - checkpoint_tick_) / static_cast<double>(kTicksPerSecond);
  return quota_model_.quota(k, cost_);
}

double OnlineSelector::estimate(std::span<const Access> accesses) const {
  const auto closure =
      time_dependent_closure(index_, accesses, std::numeric_limits<Tick>::max(), &aries_);
  const auto pending = std::count_if(closure.begin(), closure.end(), [&](std::size_t p) { return !aries_[p]; });
  double third = 0;
  for (const auto& a : accesses) {
    if (writes(a.mode)) third += histogram_.probability(a.attr) * cost_.avg_cmd_redo;
  }
  return (static_cast<double>(pending) * cost_.avg_cmd_redo - cost_.avg_aries_redo - third) / cost_.avg_aries_io;
}

double OnlineSelector::adapt_score(std::span<const Access> accesses) const {
  return static_cast<double>(
      time_dependent_closure(index_, accesses, std::numeric_limits<Tick>::max()).size());
}

bool OnlineSelector::decide(const Candidate& c) {
  Decision d;
  d.epoch = epoch_;
  d.txn = c.txn;
  d.submit = c.submit;
  d.used = used_;
  d.io_cost = cost_.aries_io_of(c.write_count);
  const bool fits = io_used_ + d.io_cost <= cost_.io_budget;
  bool aries = false;
  if (mode_ == DecisionMode::Threshold) {
    d.estimate = estimate(c.accesses);
    d.gamma = gamma(c.submit);
    d.quota = quota(c.submit);
    aries = d.quota - used_ > 0 && fits && d.estimate > d.gamma;
  } else {
    if (c.distributed) {
      ++distributed_seen_;
      d.estimate = adapt_score(c.accesses);
      window_.push_back(d.estimate);
      if (window_.size() > window_size_) window_.pop_front();
      const auto above = std::count_if(window_.begin(), window_.end(), [&](double s) { return s > d.estimate; });
      d.gamma = x_;
      d.quota = static_cast<std::int64_t>(std::ceil(x_ * static_cast<double>(distributed_seen_) - 1e-9));
      aries = static_cast<double>(above) < x_ * static_cast<double>(window_.size()) && used_ < d.quota && fits;
    } else {
      d.gamma = x_;
      d.quota = static_cast<std::int64_t>(std::ceil(x_ * static_cast<double>(distributed_seen_) - 1e-9));
    }
  }
  if (forced_) {
    auto it = forced_->find(c.txn);
    aries = it != forced_->end() && it->second;
  }
  if (aries) {
    ++used_;
    io_used_ += d.io_cost;
  }
  d.aries = aries;
  d.io_used = io_used_;
  trace_.push_back(d);
  return aries;
}

void OnlineSelector::record(const FootprintRecord& f) {
  index_.record(f);
  aries_.push_back(f.aries ? 1 : 0);
  histogram_.record(f.accesses);
}

std::optional<std::string> audit_trace(std::span<const Decision> trace, const CostModel& cost) {
  double io = 0;
  std::int64_t used = 0;
  std::optional<std::uint64_t> epoch;
  for (const auto& d : trace) {
    if (epoch != d.epoch) {
      epoch = d.epoch;
      io = 0;
      used = 0;
    }
    if (d.aries) {
      ++used;
      io += d.io_cost;
      if (used > d.quota) {
        return "txn " + std::to_string(d.txn) + ": used " + std::to_string(used) + " exceeds quota " +
               std::to_string(d.quota);
      }
      if (io > cost.io_budget) {
        return "txn " + std::to_string(d.txn) + ": data-record I/O exceeds the budget";
      }
    }
  }
  return std::nullopt;
}

std::vector<std::string> CostModel::validate() const {
  for (double v : {cmd_redo, aries_redo, aries_io, cmd_io, avg_cmd_redo, avg_aries_redo, io_budget,
                   aries_io_per_write}) {
    if (v < 0 || !std::isfinite(v)) throw ConfigError("cost model values must be finite and non-negative");
  }
  if (avg_aries_io <= 0 || aries_io <= 0) throw ConfigError("data-record I/O cost must be positive");
  std::vector<std::string> warnings;
  if (aries_redo >= cmd_redo) {
    warnings.emplace_back("replaying a data record is not cheaper than re-executing; data records will not pay off");
  }
  return warnings;
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_trace_csv(std::ostream& os, std::span<const Decision> trace) {
  os << "epoch,txn,submit,estimate,gamma,quota,used,io_cost,io_used,decision\n";
  for (const auto& d : trace) {
    os << d.epoch << ',' << d.txn << ',' << d.submit << ',' << num(d.estimate) << ',' << num(d.gamma) << ',' << d.quota << ','
       << d.used << ',' << num(d.io_cost) << ',' << num(d.io_used) << ',' << (d.aries ? "aries" : "command")
       << '\n';
  }
}

std::vector<Decision> read_trace_csv(std::istream& is) {
  std::vector<Decision> out;
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("empty decision trace");
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 10) throw ConfigError("decision trace line " + std::to_string(line_no) + ": expected 10 fields");
    try {
      Decision d;
      d.epoch = std::stoull(f[0]);
      d.txn = std::stoull(f[1]);
      d.submit = std::stoll(f[2]);
      d.estimate = std::stod(f[3]);
      d.gamma = std::stod(f[4]);
      d.quota = std::stoll(f[5]);
      d.used = std::stoll(f[6]);
      d.io_cost = std::stod(f[7]);
      d.io_used = std::stod(f[8]);
      if (f[9] != "aries" && f[9] != "command") {
        throw ConfigError("decision trace line " + std::to_string(line_no) + ": unknown decision " + f[9]);
      }
      d.aries = f[9] == "aries";
      out.push_back(d);
    } catch (const std::logic_error&) {
      throw ConfigError("decision trace line " + std::to_string(line_no) + ": malformed field");
    }
  }
  return out;
}

}  // namespace memlog
