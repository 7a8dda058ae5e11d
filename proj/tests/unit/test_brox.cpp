#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "snakesim/brox.hpp"
#include "snakesim/errors.hpp"
#include "snakesim/stats.hpp"

using namespace snakesim;

namespace {

PotentialProfile random_profile(int n, double K1, std::uint64_t seed) {
  Rng r(seed);
  const int top = static_cast<int>(std::lround(n * K1));
  const double bound = 0.5 * std::sqrt(double(n));
  return build_potential(sample_site_environment(top - 1, 1.0, bound, r), n, K1, bound);
}

}  // namespace

TEST(Tent, FoldsOntoBaseInterval) {
  EXPECT_DOUBLE_EQ(tent(0.3, 1.0), 0.3);
  EXPECT_DOUBLE_EQ(tent(-0.3, 1.0), 0.3);
  EXPECT_DOUBLE_EQ(tent(1.5, 1.0), 0.5);
  EXPECT_NEAR(tent(2.3, 1.0), 0.3, 1e-15);
  EXPECT_NEAR(tent(-3.5, 1.0), 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(tent(1.0, 1.0), 1.0);
  EXPECT_THROW(tent(0.0, 0.0), DomainError);
}

TEST(Potential, SingleSiteIncrement) {
  const std::vector<double> xi{1.0};
  const auto p = build_potential(xi, 100, 0.02, 5.0);  // top = 2
  EXPECT_NEAR(p.increments[1], std::log(0.475 / 0.525), 1e-15);
  EXPECT_NEAR(p.increments[1], -0.100083459, 1e-9);
  EXPECT_EQ(p.values[0], 0.0);
  EXPECT_NEAR(p.value(1.5), p.increments[1], 1e-15);
}

TEST(Potential, UpProbabilityMatchesSiteVariable) {
  const int n = 25;
  Rng r(3);
  const auto xi = sample_site_environment(n - 1, 1.0, 2.5, r);
  const auto p = build_potential(xi, n, 1.0, 2.5);
  for (int i = 1; i < n; ++i) EXPECT_NEAR(p.up_probability(i), 0.5 + xi[i - 1] / (4.0 * 5.0), 1e-12);
  EXPECT_DOUBLE_EQ(p.up_probability(0), 0.5);
}

TEST(Potential, ReflectionSymmetryAndPeriod) {
  const auto p = random_profile(20, 1.0, 4);
  for (std::int64_t k = 0; k < 20; ++k) {
    EXPECT_EQ(p.segment(-k - 1), p.segment(k));
    EXPECT_EQ(p.segment(20 + k), p.segment(19 - k));
    EXPECT_EQ(p.segment(k + 40), p.segment(k));
    EXPECT_EQ(p.segment(k - 400), p.segment(k));
  }
  EXPECT_EQ(p.reflected(-0.5), p.reflected(0.5));
  EXPECT_THROW(p.value(20.0), OutOfRangeError);
  EXPECT_THROW(p.value(-0.1), OutOfRangeError);
}

TEST(Potential, ParameterErrors) {
  const std::vector<double> xi{1.0, 3.0};
  EXPECT_THROW(build_potential(xi, 4, 0.75, 4.0), DomainError);  // bound >= 2 sqrt(n)
  EXPECT_THROW(build_potential(xi, 4, 0.75, 2.0), DomainError);  // |xi| > bound
  EXPECT_THROW(build_potential(xi, 4, 2.0, 3.5), DomainError);   // too few sites
  EXPECT_THROW(build_potential(xi, 0, 1.0, 0.5), DomainError);
  EXPECT_NO_THROW(build_potential(xi, 4, 0.75, 3.5));
}

TEST(Potential, ClippedSiteSampling) {
  Rng r(5);
  const auto xi = sample_site_environment(10000, 4.0, 1.0, r);
  int at_bound = 0;
  for (double x : xi) {
    EXPECT_LE(std::abs(x), 1.0);
    at_bound += std::abs(x) == 1.0;
  }
  // P(|N(0, 4)| >= 1) = 2 (1 - Phi(0.5)) ~ 0.617
  EXPECT_NEAR(at_bound / 10000.0, 2.0 * (1.0 - normal_cdf(0.5)), 0.02);
}

TEST(ScaleFunction, MatchesNumericIntegral) {
  const auto p = random_profile(10, 1.0, 6);
  const ScaleFunction A(p);
  for (double x : {0.0, 0.05, 0.37, 1.0, 1.63, 2.5, -0.42, -1.7}) {
    // Midpoint rule; each potential jump costs O(h) since the grid is not aligned to it.
    const int N = 200000;
    const double h = x / N;
    double s = 0.0;
    for (int k = 0; k < N; ++k) s += std::exp(p.reflected(10.0 * (k + 0.5) * h));
    EXPECT_NEAR(A(x), s * h, 1e-4);
    EXPECT_NEAR(A.inverse(A(x)), x, 1e-12);
  }
  for (std::int64_t i = -30; i <= 30; ++i) EXPECT_NEAR(A.node(i), A(i / 10.0), 1e-12);
}

TEST(ScaleFunction, FlatPotentialIsIdentity) {
  const auto p = PotentialProfile::constant(8, 8, 0.0);
  const ScaleFunction A(p);
  for (double x : {-3.3, 0.0, 0.7, 5.1}) {
    EXPECT_NEAR(A(x), x, 1e-12);
    EXPECT_NEAR(A.inverse(x), x, 1e-12);
  }
  EXPECT_EQ(A.rate(-5), 1.0);
}

TEST(Bmre, FlatPotentialIsBrownian) {
  const auto p = PotentialProfile::constant(4, 4, 0.0);
  const std::vector<double> times{0.0, 0.5, 1.0};
  std::vector<double> at_half, at_one;
  for (int r = 0; r < 1000; ++r) {
    Rng rng(11, r);
    const auto path = simulate_bmre(p, times, 1e-3, rng);
    EXPECT_EQ(path.values[0], 0.0);
    at_half.push_back(path.values[1]);
    at_one.push_back(path.values[2]);
  }
  EXPECT_GT(ks_one_sample(at_half, [](double x) { return normal_cdf(x / std::sqrt(0.5)); }).p_value, 1e-3);
  EXPECT_GT(ks_one_sample(at_one, [](double x) { return normal_cdf(x); }).p_value, 1e-3);
  Rng rng(1);
  EXPECT_THROW(simulate_bmre(p, times, 0.0, rng), ConfigError);
  const std::vector<double> unsorted{1.0, 0.5};
  EXPECT_THROW(simulate_bmre(p, unsorted, 1e-3, rng), ConfigError);
}

TEST(Embedding, UnitStepsAndIncreasingClock) {
  const auto p = random_profile(10, 1.0, 7);
  Rng r(7);
  const auto s = embed_rwre(p, 300, r);
  ASSERT_EQ(s.walk.size(), 301u);
  EXPECT_EQ(s.walk[0], 0);
  EXPECT_EQ(s.sigma[0], 0.0);
  for (std::size_t m = 1; m < s.walk.size(); ++m) {
    EXPECT_EQ(std::abs(s.walk[m] - s.walk[m - 1]), 1);
    EXPECT_GT(s.sigma[m], s.sigma[m - 1]);
  }
  EXPECT_EQ(sigma_deviation(s, 0.0), 0.0);
  EXPECT_THROW(sigma_deviation(s, 10.0), OutOfRangeError);
}

TEST(Embedding, AgreesWithDirectWalk) {
  const auto p = random_profile(6, 1.0, 8);
  const std::int64_t M = 40;
  std::vector<double> emb, dir;
  for (int r = 0; r < 1500; ++r) {
    Rng a(21, r), b(22, r);
    emb.push_back(double(embed_rwre(p, M, a).walk.back()));
    dir.push_back(double(direct_rwre(p, M, b).back()));
  }
  EXPECT_GT(ks_two_sample(emb, dir).p_value, 1e-3);
}

TEST(Embedding, ErrorCases) {
  const auto p = random_profile(6, 1.0, 9);
  Rng r(1);
  EXPECT_THROW(embed_rwre(p, -1, r), DomainError);
  EmbeddingOptions o;
  o.epsilon = 0.0;
  EXPECT_THROW(embed_rwre(p, 10, r, o), ConfigError);
  o.epsilon = 1.0;  // steps the size of the barrier gap overshoot regularly
  EXPECT_THROW(embed_rwre(p, 2000, r, o), ResolutionError);
  EXPECT_THROW(direct_rwre(p, -1, r), DomainError);
}

TEST(ExitTime, MeanIsOne) {
  const auto s = exit_time_stats(2000, 31, 1e-3);
  EXPECT_NEAR(s.mean, 1.0, 4.0 * s.stderr_);
  EXPECT_GT(s.min, 0.0);
  EXPECT_EQ(s.samples.size(), 2000u);
  EXPECT_THROW(exit_time_stats(0, 1), ConfigError);
}

TEST(SigmaReport, ClockConvergesWithN) {
  const std::vector<int> ns{5, 40};
  const auto rows = sigma_convergence_report(ns, 0.5, 20, 41);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].n, 5);
  EXPECT_GT(rows[0].median, rows[1].median);
  EXPECT_THROW(sigma_convergence_report(ns, 0.5, 0, 41), ConfigError);
}
