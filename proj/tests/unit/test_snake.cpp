#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "snakesim/errors.hpp"
#include "snakesim/snake.hpp"

using namespace snakesim;

namespace {

EnvironmentConfig cfg(int n, CovarianceKernel k, double nu = 0.0) {
  EnvironmentConfig c;
  c.n = n;
  c.nu = nu;
  c.kernel = k;
  return c;
}

SnakeConfig sc(int n, double K1) {
  SnakeConfig s;
  s.n = n;
  s.K1 = K1;
  return s;
}

// Hand-built contour; tip coordinate = state index so moves are traceable.
ContourRecord record(std::vector<int> levels, int n, int top, bool at_tau = false) {
  ContourRecord r;
  r.n = n;
  r.top = top;
  r.stopped_at_tau = at_tau;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const double tip = static_cast<double>(k);
    r.push(levels[k], std::span<const double>(&tip, 1));
  }
  return r;
}

const TestFunction one = [](std::span<const double>) { return 1.0; };

}  // namespace

TEST(Snake, ForcedReflectionsUseNoDraws) {
  auto env = EnvironmentFactory(cfg(4, ZeroKernel{})).make(Rng(1));
  Snake s(sc(4, 0.5));  // top = 2
  Rng a(3), b(3);
  EXPECT_EQ(s.up_probability(*env), 1.0);
  s.step(*env, a);  // forced up still draws the Gaussian segment, nothing else
  b.normal();
  EXPECT_EQ(s.level(), 1);
  EXPECT_TRUE(a.engine() == b.engine());
  while (s.level() != 2) s.step(*env, a);
  EXPECT_EQ(s.up_probability(*env), 0.0);
  Rng before = a;
  s.step(*env, a);
  EXPECT_EQ(s.level(), 1);
  EXPECT_TRUE(a.engine() == before.engine());
}

TEST(Snake, PathGrowsAndShrinksWithLevel) {
  EnvironmentConfig e = cfg(9, ConstantKernel{1.0});
  e.dim = e.grid.dim = 2;
  auto env = EnvironmentFactory(e).make(Rng(2));
  SnakeConfig c = sc(9, 1.0);
  c.root = {0.5, -0.5};
  Snake s(c);
  Rng r(4);
  for (int k = 0; k < 500; ++k) {
    const auto root = s.point(0);
    EXPECT_EQ(root[0], 0.5);
    EXPECT_EQ(root[1], -0.5);
    const int before = s.level();
    const bool up = s.step(*env, r);
    EXPECT_EQ(s.level(), before + (up ? 1 : -1));
    EXPECT_GE(s.level(), 0);
    EXPECT_LE(s.level(), s.top());
  }
}

TEST(Snake, FairInteriorWhenXiIsZero) {
  auto env = EnvironmentFactory(cfg(10, ZeroKernel{})).make(Rng(1));
  Rng r(5);
  Horizon h;
  h.steps = 100000;
  const auto run = run_snake(sc(10, 1e4), *env, r, h);
  std::size_t ups = 0, interior = 0;
  for (std::size_t k = 0; k + 1 < run.record.states(); ++k) {
    if (run.record.forced(k)) continue;
    ++interior;
    ups += run.record.levels[k + 1] > run.record.levels[k];
  }
  EXPECT_NEAR(double(ups) / interior, 0.5, 3 * std::sqrt(0.25 / interior));
}

TEST(RunSnake, SingleExcursionAtNOne) {
  auto env = EnvironmentFactory(cfg(1, ZeroKernel{})).make(Rng(1));
  Rng r(1);
  Horizon h;
  h.c0 = 1.0;
  const auto run = run_snake(sc(1, 1.0), *env, r, h);
  EXPECT_EQ(run.record.levels, (std::vector<int>{0, 1, 0}));
  EXPECT_TRUE(run.record.stopped_at_tau);
  EXPECT_DOUBLE_EQ(run.ledger.inverse_local_time(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(run.ledger.inverse_local_time(0.0, 1.0), 2.0);
}

TEST(RunSnake, ZigZagInverseLocalTime) {
  auto env = EnvironmentFactory(cfg(1, ZeroKernel{})).make(Rng(1));
  Rng r(1);
  Horizon h;
  h.c0 = 5.0;
  const auto run = run_snake(sc(1, 1.0), *env, r, h);
  ASSERT_EQ(run.record.steps(), 10u);
  for (int k = 0; k <= 10; ++k) EXPECT_EQ(run.record.levels[k], k % 2);
  for (int rr = 1; rr < 5; ++rr) EXPECT_DOUBLE_EQ(run.ledger.inverse_local_time(0.0, rr), 2.0 * rr);
  EXPECT_DOUBLE_EQ(run.ledger.inverse_local_time(0.0, 5.0), 10.0);
  EXPECT_THROW(run.ledger.inverse_local_time(0.0, 6.0), OutOfRangeError);
}

TEST(RunSnake, HorizonErrorsAndTruncation) {
  auto env = EnvironmentFactory(cfg(10, ZeroKernel{})).make(Rng(1));
  Rng r(1);
  EXPECT_THROW(run_snake(sc(10, 1.0), *env, r, Horizon{}), ConfigError);
  Horizon h;
  h.c0 = 1e6;
  h.max_steps = 1000;
  const auto run = run_snake(sc(10, 1.0), *env, r, h);
  EXPECT_TRUE(run.record.truncated);
  EXPECT_FALSE(run.record.stopped_at_tau);
  EXPECT_EQ(run.record.steps(), 1000u);
}

TEST(RunSnake, RecordsPassInvariantsAndStopAtZero) {
  EnvironmentFactory f(cfg(20, ConstantKernel{1.0}));
  for (int rep = 0; rep < 50; ++rep) {
    auto env = f.make(Rng(9, rep, Rng::kEnvironment));
    Rng r(9, rep);
    Horizon h;
    h.c0 = 0.5;
    const auto run = run_snake(sc(20, 1.0), *env, r, h);
    EXPECT_NO_THROW(run.record.validate());
    EXPECT_EQ(run.record.levels.back(), 0);
    EXPECT_EQ(run.ledger.upcrossings(0).size(), 10u);
    EXPECT_DOUBLE_EQ(run.ledger.terminal(0), 11.0 / 20.0);
  }
}

TEST(Record, ValidateRejectsBrokenContours) {
  EXPECT_THROW(record({0, 2}, 1, 3).validate(), PreconditionError);
  EXPECT_THROW(record({1, 0}, 1, 3).validate(), PreconditionError);
  EXPECT_THROW(record({0, 1, 0, 1, 2, 3, 4}, 1, 3).validate(), PreconditionError);
  EXPECT_NO_THROW(record({0, 1, 2, 1, 0}, 1, 2).validate());
}

TEST(Record, PathReconstructionMatchesLiveSnake) {
  auto env = EnvironmentFactory(cfg(6, ConstantKernel{1.0})).make(Rng(3));
  SnakeConfig c = sc(6, 1.0);
  Snake s(c);
  Rng r(3);
  ContourRecord rec;
  rec.n = 6;
  rec.top = s.top();
  rec.push(0, s.tip());
  for (int k = 1; k < 300; ++k) {
    s.step(*env, r);
    rec.push(s.level(), s.tip());
    const auto path = rec.reconstruct_path(static_cast<std::size_t>(k));
    ASSERT_EQ(path.size(), static_cast<std::size_t>(s.level() + 1));
    for (int a = 0; a <= s.level(); ++a) EXPECT_EQ(path[a], s.point(a)[0]);
  }
}

TEST(Ledger, HandCountsOnZigZag) {
  const auto rec = record({0, 1, 0, 1, 0}, 1, 1);
  const auto l = LocalTimeLedger::from_record(rec);
  EXPECT_EQ(l.upcrossings(0), (std::vector<std::int64_t>{0, 2}));
  EXPECT_EQ(l.downcrossings(0), 2);
  EXPECT_DOUBLE_EQ(l.local_time(0.0, 4.0), 2.0);
  EXPECT_DOUBLE_EQ(l.local_time(1.0, 4.0), 0.0);
  EXPECT_DOUBLE_EQ(l.local_time(0.0, 0.0), 1.0);
}

TEST(Ledger, LocalTimeIsZeroBeforeFirstUpcrossing) {
  const auto rec = record({0, 1, 2, 3, 2, 1, 0}, 2, 4);
  const auto l = LocalTimeLedger::from_record(rec);
  EXPECT_DOUBLE_EQ(l.local_time(1.0, 1.0 / 4.0), 0.0);  // level 2 upcrossed at transition 2
  EXPECT_DOUBLE_EQ(l.local_time(1.0, 2.0 / 4.0), 0.5);
}

TEST(Ledger, RoundTripAndConsistency) {
  EnvironmentFactory f(cfg(15, ConstantKernel{1.0}));
  for (int rep = 0; rep < 30; ++rep) {
    auto env = f.make(Rng(2, rep, Rng::kEnvironment));
    Rng r(2, rep);
    Horizon h;
    h.c0 = 1.0;
    const auto run = run_snake(sc(15, 1.0), *env, r, h);
    const auto& l = run.ledger;
    std::int64_t total = 0;
    for (int m = 0; m <= l.top(); ++m) {
      const auto up = static_cast<std::int64_t>(l.upcrossings(m).size());
      total += up + l.downcrossings(m);
      EXPECT_LE(std::abs(up - l.downcrossings(m)), 1);
      const auto& v = l.upcrossings(m);
      for (std::size_t i = 1; i < v.size(); ++i) EXPECT_LT(v[i - 1], v[i]);
    }
    EXPECT_EQ(total, static_cast<std::int64_t>(run.record.steps()));
    for (double a : {0.0, 0.2, 0.4}) {
      const auto avail = static_cast<int>(l.available(l.level_of(a)));
      for (int j = 0; j < 2 * avail; ++j) {
        const double rr = j / 30.0;
        const double tau = l.inverse_local_time(a, rr);
        const double lt = l.local_time(a, tau);
        EXPECT_GT(lt, rr);
        EXPECT_LE(lt, rr + 1.0 / 15 + 1e-12);
        if (tau > 0) EXPECT_LE(l.local_time(a, tau - 1.0 / 225), rr + 1e-12);
      }
    }
  }
}

TEST(Occupation, InitialMassAndAdditivity) {
  EnvironmentFactory f(cfg(20, ConstantKernel{1.0}));
  for (int rep = 0; rep < 30; ++rep) {
    auto env = f.make(Rng(4, rep, Rng::kEnvironment));
    Rng r(4, rep);
    Horizon h;
    h.c0 = 1.0;
    const auto run = run_snake(sc(20, 1.0), *env, r, h);
    EXPECT_NEAR(occupation_measure(run.record, run.ledger, 0, 1, 0, 0, one), 1.0, 1.0 / 20 + 1e-12);
    for (double t : {0.1, 0.35, 0.8}) {
      const double whole = occupation_measure(run.record, run.ledger, 0, 1, 0, t, one);
      const double parts = occupation_measure(run.record, run.ledger, 0, 0.3, 0, t, one) +
                           occupation_measure(run.record, run.ledger, 0.3, 1, 0, t, one);
      EXPECT_DOUBLE_EQ(whole, parts);
      EXPECT_GE(whole, 0.0);
      const auto atoms = occupation_atoms(run.record, run.ledger, 0, 1, 0, run.ledger.level_of(t));
      EXPECT_DOUBLE_EQ(whole, atoms.size() / 20.0);
    }
    const auto by_level = occupation_by_level(run.record, run.ledger, 0, 1, 0, one);
    EXPECT_DOUBLE_EQ(by_level[7], occupation_measure(run.record, run.ledger, 0, 1, 0, 7.0 / 20, one));
  }
}

TEST(Occupation, AboveEveryExcursionIsZero) {
  const auto rec = record({0, 1, 0, 1, 2, 1, 0}, 1, 4, true);
  const auto l = LocalTimeLedger::from_record(rec);
  EXPECT_EQ(occupation_measure(rec, l, 0, 2, 0, 3, one), 0.0);
  EXPECT_EQ(occupation_measure(rec, l, 0, 2, 0, 1, one), 1.0);
  EXPECT_THROW(occupation_measure(rec, l, 1, 1, 0, 1, one), DomainError);
  EXPECT_THROW(occupation_measure(rec, l, 0, 1, 1, 0, one), DomainError);
}

TEST(Occupation, TestFunctionEvaluatedAtTips) {
  // tip coordinate = state index; the only level-1 upcrossing leaves state 3.
  const auto rec = record({0, 1, 0, 1, 2, 1, 0}, 1, 4, true);
  const auto l = LocalTimeLedger::from_record(rec);
  const TestFunction x = [](std::span<const double> p) { return p[0]; };
  EXPECT_EQ(occupation_measure(rec, l, 0, 2, 0, 1, x), 3.0);
  // Level 0 in (0, 6]: the upcrossing at state 2 plus the forced one at state 6.
  EXPECT_EQ(occupation_measure(rec, l, 0, 2, 0, 0, x), 8.0);
}

TEST(OccupationIdentity, FullCountAndZigZag) {
  const auto rec = record({0, 1, 0, 1, 0}, 1, 1);
  const auto l = LocalTimeLedger::from_record(rec);
  const auto full = occupation_identity_report(rec, l, 4.0, 1.0);
  EXPECT_DOUBLE_EQ(full.rhs, 5.0);  // every state counted, states 0..4
  const auto low = occupation_identity_report(rec, l, 4.0, 0.0);
  EXPECT_DOUBLE_EQ(low.lhs_raw, 2.0);
  EXPECT_DOUBLE_EQ(low.lhs, 4.0);
  EXPECT_DOUBLE_EQ(low.rhs, 3.0);
  EXPECT_LE(low.gap, 2.0);
}

TEST(OccupationIdentity, GapBoundOnRandomRuns) {
  const int n = 100;
  EnvironmentFactory f(cfg(n, ConstantKernel{1.0}));
  for (int rep = 0; rep < 20; ++rep) {
    auto env = f.make(Rng(6, rep, Rng::kEnvironment));
    Rng r(6, rep);
    Horizon h;
    h.c0 = 1.0;
    const auto run = run_snake(sc(n, 1.0), *env, r, h);
    const double tau = double(run.record.steps()) / (n * n);
    // Per-level up/down imbalance is at most one, plus the top level's own local time.
    for (double t : {tau / 4, tau / 2, tau})
      for (double y : {0.0, 0.5, 1.0}) {
        const double bound = (run.ledger.local_time(y, t) + y + 4.0 / n) / n;
        EXPECT_LE(occupation_identity_report(run.record, run.ledger, t, y).gap, bound);
      }
  }
}

TEST(Reversal, SingleExcursionIsFixed) {
  const auto rec = record({0, 1, 2, 1, 2, 1, 0}, 1, 3);
  const auto t = reverse_transform(rec, 0);
  EXPECT_EQ(t.levels, rec.levels);
  EXPECT_EQ(t.tips, rec.tips);
}

TEST(Reversal, TwoExcursionsSwap) {
  const auto rec = record({0, 1, 0, 1, 2, 1, 0}, 1, 3);
  const auto t = reverse_transform(rec, 0);
  EXPECT_EQ(t.levels, (std::vector<int>{0, 1, 2, 1, 0, 1, 0}));
  // E2 = states 3..6 now first, internal order kept.
  EXPECT_EQ(t.tips, (std::vector<double>{0, 3, 4, 5, 6, 1, 2}));
}

TEST(Reversal, PreconditionsAndInvariants) {
  EXPECT_THROW(reverse_transform(record({0, 1, 2}, 1, 3), 0), PreconditionError);
  EnvironmentFactory f(cfg(5, ConstantKernel{1.0}));
  for (int rep = 0; rep < 50; ++rep) {
    auto env = f.make(Rng(7, rep, Rng::kEnvironment));
    Rng r(7, rep);
    Horizon h;
    h.c0 = 1.0;
    const auto run = run_snake(sc(5, 2.0), *env, r, h);
    for (int z = 0; z < run.record.top; ++z) {
      const auto t = reverse_transform(run.record, z);
      EXPECT_EQ(t.steps(), run.record.steps());
      const auto lt = LocalTimeLedger::from_record(t);
      for (int m = 0; m <= run.record.top; ++m) {
        EXPECT_EQ(lt.upcrossings(m).size(), run.ledger.upcrossings(m).size());
        EXPECT_EQ(std::count(t.levels.begin(), t.levels.end(), m),
                  std::count(run.record.levels.begin(), run.record.levels.end(), m));
      }
    }
  }
}

TEST(Reversal, FullReversalIsTimeReversal) {
  for (int n : {1, 5, 20})
    for (double K1 : {1.0, 2.0}) {
      EnvironmentFactory f(cfg(n, ConstantKernel{1.0}));
      for (int rep = 0; rep < 100; ++rep) {
        auto env = f.make(Rng(8, rep, Rng::kEnvironment));
        Rng r(8, rep);
        Horizon h;
        h.c0 = 1.0;
        const auto run = run_snake(sc(n, K1), *env, r, h);
        ASSERT_EQ(full_reversal(run.record).levels, time_reversed(run.record).levels);
      }
    }
}

TEST(Displacement, StreamingMatchesBruteForce) {
  for (int rep = 0; rep < 30; ++rep) {
    SnakeConfig c = sc(12, 1.0);
    c.root = {0.0, 0.0};
    EnvironmentConfig e = cfg(12, ConstantKernel{1.0});
    e.dim = e.grid.dim = 2;
    auto env = EnvironmentFactory(e).make(Rng(1, rep, Rng::kEnvironment));
    Rng r(1, rep);
    Horizon h;
    h.c0 = 1.0;
    const auto run = run_snake(c, *env, r, h);
    for (double a : {0.0, 0.25})
      for (double d : {0.1, 0.3})
        EXPECT_EQ(displacement_count(run.record, a, d, 0.1), displacement_count_bruteforce(run.record, a, d, 0.1));
    EXPECT_EQ(displacement_count(run.record, 0.0, 0.3, 40.0), 0);
    EXPECT_EQ(displacement_count(run.record, 0.5, 0.6, 0.1), 0);
  }
}
