#include <gtest/gtest.h>

#include <cstdlib>
#include <numeric>
#include <stdexcept>

#include "snakesim/harness.hpp"
#include "snakesim/parallel.hpp"
#include "snakesim/rng.hpp"

using namespace snakesim;

TEST(Rng, SameTripleSameStream) {
  Rng a(7, 3, Rng::kDynamics), b(7, 3, Rng::kDynamics);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.normal(), b.normal());
}

TEST(Rng, StreamsDiffer) {
  Rng a(7, 3, Rng::kDynamics), b(7, 3, Rng::kEnvironment), c(7, 4, Rng::kDynamics), d(8, 3, Rng::kDynamics);
  const double x = a.uniform();
  EXPECT_NE(x, b.uniform());
  EXPECT_NE(x, c.uniform());
  EXPECT_NE(x, d.uniform());
}

TEST(Rng, GeometricCountsFailures) {
  Rng r(1);
  double sum = 0;
  const int N = 200000;
  for (int i = 0; i < N; ++i) sum += r.geometric(0.5);
  // mean (1-p)/p = 1, variance (1-p)/p^2 = 2
  EXPECT_NEAR(sum / N, 1.0, 4.0 * std::sqrt(2.0 / N));
}

TEST(Parallel, ResultsIndependentOfWorkers) {
  auto fn = [](std::size_t i) {
    Rng r(99, i);
    double s = 0;
    for (int k = 0; k < 50; ++k) s += r.normal();
    return s;
  };
  const auto one = parallel_map<double>(64, 1, fn);
  const auto eight = parallel_map<double>(64, 8, fn);
  EXPECT_EQ(one, eight);
}

TEST(Parallel, FailuresAreCapturedPerIndex) {
  const auto errors = parallel_for(10, 4, [](std::size_t i) {
    if (i == 3 || i == 7) throw std::runtime_error("boom");
  });
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(static_cast<bool>(errors[i]), i == 3 || i == 7);
  EXPECT_THROW(parallel_map<int>(5, 2, [](std::size_t i) -> int {
                 if (i == 2) throw std::runtime_error("x");
                 return 1;
               }),
               std::runtime_error);
}

TEST(Parallel, ReplicateFailuresDoNotStopTheRun) {
  auto res = run_replicates<int>(20, 3, [](std::size_t i) {
    if (i % 5 == 0) throw std::runtime_error("fail");
    return static_cast<int>(i);
  });
  EXPECT_EQ(res.failed, (std::vector<std::size_t>{0, 5, 10, 15}));
  EXPECT_EQ(res.values.size(), 16u);
  EXPECT_EQ(res.values.front(), 1);
}

TEST(Parallel, WorkerEnvironmentVariable) {
  ::setenv("SNAKESIM_WORKERS", "3", 1);
  EXPECT_EQ(default_workers(), 3u);
  ::setenv("SNAKESIM_WORKERS", "junk", 1);
  EXPECT_GE(default_workers(), 1u);
  ::unsetenv("SNAKESIM_WORKERS");
}
