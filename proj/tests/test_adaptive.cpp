#include <boost/math/distributions/poisson.hpp>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "support.hpp"

#include "memlog/error.hpp"
#include "memlog/time_dependence.hpp"

using namespace memlog;
using namespace memlog::test;

namespace {

InvertedIndex index_of(const std::vector<FootprintRecord>& fps) {
  InvertedIndex idx;
  for (const auto& f : fps) idx.record(f);
  return idx;
}

long double naive_cdf(long double lambda, int n) {
  long double sum = 0;
  for (int i = 0; i <= n; ++i) sum += std::exp(-lambda) * std::pow(lambda, i) / std::tgamma(i + 1.0L);
  return sum;
}

}  // namespace

TEST_CASE("poisson cdf against naive summation and boost") {
  for (double lambda : {0.5, 1.0, 4.0, 10.0, 29.5, 30.5, 80.0, 500.0}) {
    const boost::math::poisson_distribution<double> dist(lambda);
    for (int n : {0, 1, 2, 4, 7, 15, 40, 100, 600}) {
      const double ours = poisson_cdf(lambda, n);
      CHECK(ours == doctest::Approx(boost::math::cdf(dist, n)).epsilon(1e-10));
      if (lambda <= 30 && n <= 100) CHECK(ours == doctest::Approx(static_cast<double>(naive_cdf(lambda, n))).epsilon(1e-12));
    }
  }
  CHECK(poisson_cdf(4, -1) == 0.0);
  CHECK(poisson_cdf(4, 1000) == doctest::Approx(1.0));
}

TEST_CASE("quota: boundary values and monotonicity") {
  CostModel cost;
  QuotaModel q;
  // e^-4 * 2000 = 36.63
  CHECK(q.quota(0, cost) == 36);
  CHECK(q.quota(0.99, cost) == 36);
  CHECK(q.max_quota(cost) == 2000);
  CHECK(q.quota(1e6, cost) == 2000);
  CHECK(q.quota(-5, cost) == q.quota(0, cost));
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    QuotaModel m{0.1 + rng.unit() * 60, 1e-5};
    const double k = rng.unit() * 100;
    CHECK(m.quota(k + 1, cost) >= m.quota(k, cost));
    CHECK(m.quota(k, cost) <= m.max_quota(cost));
  }
  cost.io_budget = 0;
  CHECK(q.quota(100, cost) == 0);
}

TEST_CASE("example: delta for t2 into t4") {
  Example fx;
  const auto idx = index_of(fx.footprints);
  const CostModel cost;
  CHECK(delta(idx, 1, 3, cost) == 2 * cost.cmd_redo - cost.aries_redo);
  // t7 depends on t6, which pulls in t2 and t1.
  CHECK(delta(idx, 5, 6, cost) == 3 * cost.cmd_redo - cost.aries_redo);
  std::vector<char> aries(idx.size(), 0);
  aries[1] = 1;
  CHECK(delta_with_set(idx, 1, 3, aries, cost) == cost.cmd_redo - cost.aries_redo);
}

TEST_CASE("delta_with_set against raw-history evaluation; reduces to delta on the empty set") {
  const CostModel cost;
  Rng rng(17);
  int checked = 0;
  for (std::uint64_t seed = 1; checked < 1000; ++seed) {
    const auto h = random_history(seed, 40, 10);
    const auto& fps = h.footprints;
    const auto idx = index_of(fps);
    for (int k = 0; k < 50; ++k) {
      const std::size_t i = rng.below(fps.size());
      const auto cl = time_dependent_closure(idx, i);
      if (cl.empty()) continue;
      const std::size_t j = cl[rng.below(cl.size())];
      std::vector<char> none(fps.size(), 0);
      REQUIRE(delta_with_set(idx, j, i, none, cost) == delta(idx, j, i, cost));
      REQUIRE(delta(idx, j, i, cost) == oracle::delta_set(fps, j, i, none, cost));
      std::vector<char> some(fps.size(), 0);
      for (auto& c : some) c = rng.bernoulli(0.25);
      REQUIRE(delta_with_set(idx, j, i, some, cost) == oracle::delta_set(fps, j, i, some, cost));
      ++checked;
    }
  }
}

TEST_CASE("delta_with_set: later data records covering every written attribute drop the phi term") {
  const CostModel cost;
  // t1 writes a; t2 writes a; t3 writes a and reads it; t4 reads a.
  std::vector<FootprintRecord> fps = {
      {1, 0, 1, 0, false, {{attr(0, 0), AccessMode::Write}}},
      {2, 0, 2, 0, false, {{attr(0, 0), AccessMode::ReadWrite}}},
      {3, 0, 3, 0, false, {{attr(0, 0), AccessMode::ReadWrite}}},
      {4, 0, 4, 0, false, {{attr(0, 0), AccessMode::Read}}},
  };
  const auto idx = index_of(fps);
  std::vector<char> aries(4, 0);
  CHECK(delta(idx, 0, 3, cost) == 3 * cost.cmd_redo - cost.aries_redo - 2 * cost.cmd_redo);
  aries[2] = 1;
  CHECK(covered_after(idx, 0, aries) == std::vector<AttrId>{attr(0, 0)});
  CHECK(delta_with_set(idx, 0, 3, aries, cost) == 2 * cost.cmd_redo - cost.aries_redo);
}

TEST_CASE("offline greedy matches an exhaustive re-implementation") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto h = random_history(seed, 20, 8);
    const auto idx = index_of(h.footprints);
    CostModel cost;
    cost.io_budget = 3 * cost.aries_io;
    const auto r = offline_select(idx, cost);
    REQUIRE(r.selected == oracle::greedy(h.footprints, cost));
    CHECK(r.selected.size() == 3);
    // Each pick had the top benefit at its turn.
    std::vector<char> aries(idx.size(), 0);
    for (const auto& step : r.trace) {
      const auto b = offline_benefits(idx, aries, cost);
      const auto pos = *idx.position(step.txn);
      CHECK(b[pos] == step.benefit);
      for (std::size_t c = 0; c < b.size(); ++c) {
        if (!aries[c]) CHECK(b[c] <= b[pos]);
      }
      aries[pos] = 1;
    }

    cost.aries_io_per_write = 40;
    cost.io_budget = 1000;
    CHECK(offline_select(idx, cost).selected == oracle::greedy(h.footprints, cost));
  }
}

TEST_CASE("offline greedy: budget edges and sanity against random picks") {
  const auto h = random_history(5, 20, 8);
  const auto idx = index_of(h.footprints);
  CostModel cost;
  cost.io_budget = 0;
  CHECK(offline_select(idx, cost).selected.empty());
  cost.io_budget = 1e12;
  CHECK(offline_select(idx, cost).selected.size() == idx.size());

  // Replay cost of every transaction's redo set with a given data-logged
  // set, the quantity the selection tries to shrink.
  auto redo_cost = [&](const std::vector<char>& aries) {
    double total = 0;
    for (std::size_t t = 0; t < idx.size(); ++t) {
      const std::vector<std::size_t> seed = {t};
      for (std::size_t p : adaptive_redo_set(idx, seed, aries)) total += aries[p] ? cost.aries_redo : cost.cmd_redo;
    }
    return total;
  };
  cost.io_budget = 3 * cost.aries_io;
  const auto greedy = offline_select(idx, cost);
  const double greedy_cost = redo_cost(greedy.aries);
  Rng rng(11);
  double random_total = 0;
  for (int k = 0; k < 10; ++k) {
    std::vector<char> aries(idx.size(), 0);
    for (int picked = 0; picked < 3;) {
      auto p = rng.below(idx.size());
      if (!aries[p]) aries[p] = 1, ++picked;
    }
    random_total += redo_cost(aries);
  }
  CHECK(greedy_cost <= random_total / 10);
}

TEST_CASE("online estimate, b_opt and gamma by hand on the running example") {
  Example fx;
  CostModel cost;
  QuotaModel qm;
  OnlineSelector sel(cost, qm);
  sel.reset(0, 1);
  // Empty history: nothing to save, negative bound.
  CHECK(sel.estimate(fx.footprints[0].accesses) == doctest::Approx(-cost.avg_aries_redo / cost.avg_aries_io));
  CHECK(sel.b_opt(kTicksPerSecond) == doctest::Approx(-cost.avg_aries_redo / cost.avg_aries_io));
  sel.record(fx.footprints[0]);
  // At t2: closure {t1}, P(x1) = 1/2, x3 not seen yet.
  CHECK(sel.estimate(fx.footprints[1].accesses) ==
        doctest::Approx((cost.avg_cmd_redo - cost.avg_aries_redo - 0.5 * cost.avg_cmd_redo) / cost.avg_aries_io));
  // One transaction in one second, lambda = 4.
  CHECK(sel.b_opt(kTicksPerSecond) == doctest::Approx((4 * cost.avg_cmd_redo - cost.avg_aries_redo) / cost.avg_aries_io));
  CHECK(sel.gamma(kTicksPerSecond) == doctest::Approx(qm.alpha * sel.b_opt(kTicksPerSecond)));
  OnlineSelector one(cost, {4.0, 1.0});
  one.reset(0, 1);
  one.record(fx.footprints[0]);
  CHECK(one.gamma(kTicksPerSecond) == one.b_opt(kTicksPerSecond));

  // An often-accessed attribute lowers the estimate. Reads only, so neither
  // probe has time-dependent transactions.
  OnlineSelector hot(cost, qm);
  hot.reset(0, 1);
  for (TxnId id = 1; id <= 9; ++id) {
    hot.record({id, 0, static_cast<Tick>(id), 0, false, {{attr(0, id == 9 ? 8 : 7), AccessMode::Read}}});
  }
  const std::vector<Access> often = {{attr(0, 7), AccessMode::Write}};
  const std::vector<Access> rarely = {{attr(0, 8), AccessMode::Write}};
  CHECK(hot.estimate(often) < hot.estimate(rarely));
  CHECK(hot.estimate(often) ==
        doctest::Approx((-cost.avg_aries_redo - 8.0 / 9 * cost.avg_cmd_redo) / cost.avg_aries_io));
}

TEST_CASE("online threshold decisions respect quota, budget and threshold") {
  CostModel cost;
  cost.io_budget = 5 * cost.aries_io;
  QuotaModel qm{4.0, 1e-5};
  OnlineSelector sel(cost, qm);
  sel.reset(0, 7);
  // A chain on one attribute: every transaction depends on all earlier ones.
  for (TxnId id = 1; id <= 40; ++id) {
    std::vector<Access> acc = {{attr(0, 0), AccessMode::ReadWrite}};
    const Tick now = static_cast<Tick>(id) * kTicksPerSecond;
    const bool aries = sel.decide({id, now, false, acc, 1});
    sel.record({id, now, now, 0, aries, acc});
  }
  const auto& trace = sel.trace();
  CHECK(trace.size() == 40);
  CHECK(sel.used() <= 5);
  CHECK(sel.io_used() <= cost.io_budget);
  CHECK(sel.used() > 0);
  CHECK_FALSE(audit_trace(trace, cost));
  for (const auto& d : trace) {
    if (d.aries) {
      CHECK(d.estimate > d.gamma);
      CHECK(d.quota - d.used > 0);
    }
    CHECK(d.epoch == 7);
  }
  // A selector that never meets its threshold.
  CostModel pricey = cost;
  pricey.avg_aries_redo = 1e9;
  OnlineSelector none(pricey, qm);
  none.reset(0, 1);
  std::vector<Access> acc = {{attr(0, 0), AccessMode::ReadWrite}};
  CHECK_FALSE(none.decide({1, 0, false, acc, 1}));
}

TEST_CASE("adapt-x: share of distributed transactions and the cap") {
  CostModel cost;
  cost.io_budget = 1e12;
  for (double x : {0.0, 0.4, 0.6, 1.0}) {
    OnlineSelector sel(cost, {}, DecisionMode::AdaptX, x);
    sel.reset(0, 1);
    Rng rng(2);
    std::uint64_t dist = 0;
    for (TxnId id = 1; id <= 400; ++id) {
      const bool d = rng.bernoulli(0.3);
      dist += d;
      std::vector<Access> acc = {{attr(0, static_cast<std::int64_t>(rng.below(20))), AccessMode::ReadWrite}};
      const bool aries = sel.decide({id, static_cast<Tick>(id), d, acc, 1});
      if (!d) CHECK_FALSE(aries);
      CHECK(sel.used() <= static_cast<std::int64_t>(std::ceil(x * static_cast<double>(dist) - 1e-9)));
      sel.record({id, static_cast<Tick>(id), static_cast<Tick>(id), 0, aries, acc});
    }
    if (x == 1.0) CHECK(sel.used() == static_cast<std::int64_t>(dist));
    if (x == 0.0) CHECK(sel.used() == 0);
    CHECK_FALSE(audit_trace(sel.trace(), cost));
  }
  CHECK_THROWS_AS(OnlineSelector(cost, {}, DecisionMode::AdaptX, 1.5), ConfigError);
}

TEST_CASE("forced decisions, trace CSV round trip, audit failures") {
  CostModel cost;
  OnlineSelector sel(cost, {});
  sel.reset(0, 2);
  sel.force({{2, true}});
  std::vector<Access> acc = {{attr(0, 0), AccessMode::Write}};
  CHECK_FALSE(sel.decide({1, 0, false, acc, 1}));
  CHECK(sel.decide({2, 5, false, acc, 1}));

  std::stringstream ss;
  write_trace_csv(ss, sel.trace());
  CHECK(ss.str().rfind("epoch,txn,submit,estimate,gamma,quota,used,io_cost,io_used,decision\n", 0) == 0);
  const auto back = read_trace_csv(ss);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].txn == sel.trace()[i].txn);
    CHECK(back[i].estimate == sel.trace()[i].estimate);
    CHECK(back[i].gamma == sel.trace()[i].gamma);
    CHECK(back[i].aries == sel.trace()[i].aries);
  }

  std::vector<Decision> bad = {{1, 1, 0, 1, 0, 0, 0, 150, 150, true}};
  CHECK(audit_trace(bad, cost).has_value());  // quota 0
  bad[0].quota = 5;
  cost.io_budget = 100;
  CHECK(audit_trace(bad, cost).has_value());  // budget

  std::stringstream junk("header\n1,2,3\n");
  CHECK_THROWS_AS(read_trace_csv(junk), ConfigError);
  std::stringstream word("header\n1,2,3,4,5,6,7,8,9,maybe\n");
  CHECK_THROWS_AS(read_trace_csv(word), ConfigError);
}

TEST_CASE("cost model validation") {
  CostModel c;
  CHECK(c.validate().empty());
  c.aries_redo = c.cmd_redo;
  CHECK(c.validate().size() == 1);
  c.avg_aries_io = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CostModel n;
  n.io_budget = -1;
  CHECK_THROWS_AS(n.validate(), ConfigError);
  n.io_budget = std::nan("");
  CHECK_THROWS_AS(n.validate(), ConfigError);
}

TEST_CASE("inverted index and histogram") {
  InvertedIndex idx;
  FootprintRecord a{1, 0, 5, 0, false, {{attr(0, 1), AccessMode::Write}}};
  FootprintRecord b{2, 0, 9, 0, false, {{attr(0, 1), AccessMode::Read}, {attr(0, 2), AccessMode::Write}}};
  idx.record(a);
  idx.record(b);
  CHECK(idx.latest_writer_before(attr(0, 1), 9) == std::optional<std::size_t>{0});
  CHECK_FALSE(idx.latest_writer_before(attr(0, 1), 5));
  CHECK(idx.writers_after(attr(0, 1), 0) == std::vector<std::size_t>{0});
  CHECK(idx.history(attr(0, 1))->size() == 2);
  CHECK(idx.history(attr(3, 3)) == nullptr);
  CHECK(idx.find(2)->commit == 9);
  CHECK_THROWS_AS(idx.record(a), MalformedLogError);
  FootprintRecord late{3, 0, 7, 0, false, {}};
  CHECK_THROWS_AS(idx.record(late), MalformedLogError);

  AccessHistogram hist;
  CHECK(hist.probability_mass() == 0);
  CHECK(hist.probability(attr(0, 1)) == 0);
  hist.record(a.accesses);
  hist.record(b.accesses);
  CHECK(hist.total() == 3);
  CHECK(hist.count(attr(0, 1)) == 2);
  CHECK(hist.probability(attr(0, 2)) == doctest::Approx(1.0 / 3));
  CHECK(hist.probability_mass() == 1);
}
