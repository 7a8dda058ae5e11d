#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "snakesim/errors.hpp"
#include "snakesim/experiments.hpp"
#include "snakesim/harness.hpp"
#include "snakesim/io.hpp"

using namespace snakesim;

namespace {

ExperimentSpec valid() {
  ExperimentSpec s;
  s.id = "snake";
  return s;
}

// Euler scheme for dX = a X dt + sqrt(2 X) dW, absorbed at 0, recorded on `times`.
MpSeries feller(const std::vector<double>& times, double a, Rng& rng) {
  MpSeries s;
  double x = 1.0, t = 0.0;
  const int sub = 20;
  for (double target : times) {
    const double h = (target - t) / sub;
    for (int k = 0; k < sub && target > t; ++k)
      x = std::max(0.0, x + a * x * h + std::sqrt(2.0 * x * h) * rng.normal());
    t = target;
    s.x_phi.push_back(x);
    s.x_lap.push_back(0.0);
    s.x_phi2.push_back(x);
    s.pair.push_back(0.0);
  }
  return s;
}

}  // namespace

TEST(TestFunctionSpec, ParsesSupportedForms) {
  EXPECT_EQ(TestFunctionSpec::parse("1").kind, TestFunctionSpec::Kind::constant);
  EXPECT_EQ(TestFunctionSpec::parse("const:2.5").c, 2.5);
  EXPECT_EQ(TestFunctionSpec::parse("cos").kind, TestFunctionSpec::Kind::cosine);
  const auto b = TestFunctionSpec::parse("bump:0.5:2");
  EXPECT_EQ(b.kind, TestFunctionSpec::Kind::bump);
  EXPECT_EQ(b.center, 0.5);
  EXPECT_EQ(b.width, 2.0);
  EXPECT_EQ(TestFunctionSpec::parse("1").name(), "1");
}

TEST(TestFunctionSpec, RejectsEverythingElse) {
  for (const char* bad : {"sin", "", "const:", "const:x", "bump:1", "bump:0:-1", "bump:a:1", "cos2"})
    EXPECT_THROW(TestFunctionSpec::parse(bad), UnsupportedError) << bad;
}

TEST(TestFunctionSpec, LaplacianMatchesFiniteDifferences) {
  const double h = 1e-4;
  for (const char* text : {"cos", "bump:0.3:0.7", "const:3"})
    for (int dim : {1, 2}) {
      const auto f = TestFunctionSpec::parse(text);
      if (f.kind == TestFunctionSpec::Kind::cosine && dim == 2) continue;
      std::vector<double> x(dim, 0.45);
      if (dim == 2) x[1] = -0.2;
      double lap = 0.0;
      for (int a = 0; a < dim; ++a) {
        auto up = x, dn = x;
        up[a] += h;
        dn[a] -= h;
        lap += (f.value(up) - 2 * f.value(x) + f.value(dn)) / (h * h);
      }
      EXPECT_NEAR(f.laplacian(x), lap, 1e-5) << text << " dim " << dim;
    }
}

TEST(MpSeries, EmptyAndHandComputed) {
  Rng r(1);
  const auto phi = TestFunctionSpec::parse("cos");
  const std::vector<std::vector<double>> atoms{{}, {0.0, 1.0}};
  const auto s = mp_series(atoms, 1, 0.1, phi, ConstantKernel{2.0}, r);
  EXPECT_EQ(s.x_phi[0], 0.0);
  EXPECT_EQ(s.pair[0], 0.0);
  const double sum = 1.0 + std::cos(1.0);
  EXPECT_NEAR(s.x_phi[1], 0.1 * sum, 1e-15);
  EXPECT_NEAR(s.x_lap[1], -0.1 * sum, 1e-15);
  EXPECT_NEAR(s.x_phi2[1], 0.1 * (1.0 + std::cos(1.0) * std::cos(1.0)), 1e-15);
  EXPECT_NEAR(s.pair[1], 2.0 * 0.01 * sum * sum, 1e-15);
  EXPECT_EQ(mp_series(atoms, 1, 0.1, phi, ZeroKernel{}, r).pair[1], 0.0);
}

TEST(MpSeries, PairSumExactAndSubsampled) {
  Rng r(2);
  std::vector<double> pts;
  for (int i = 0; i < 60; ++i) pts.push_back(r.normal());
  const std::vector<std::vector<double>> atoms{pts};
  const SquaredExponentialKernel k{1.0, 0.8};
  const auto phi = TestFunctionSpec::parse("bump:0:1");
  double brute = 0.0;
  for (double x : pts)
    for (double y : pts) {
      const double px[1] = {x}, py[1] = {y};
      brute += covariance(k, px, py) * phi.value(px) * phi.value(py);
    }
  brute *= 0.05 * 0.05;
  EXPECT_NEAR(mp_series(atoms, 1, 0.05, phi, k, r).pair[0], brute, 1e-12);
  double avg = 0.0;
  const int R = 2000;
  for (int i = 0; i < R; ++i) avg += mp_series(atoms, 1, 0.05, phi, k, r, 10).pair[0];
  EXPECT_NEAR(avg / R, brute, 0.02 * brute);
}

TEST(MpSeries, ArgumentErrors) {
  Rng r(1);
  const auto phi = TestFunctionSpec::parse("1");
  const std::vector<std::vector<double>> atoms{{0.0, 1.0, 2.0}};
  EXPECT_THROW(mp_series(atoms, 0, 1.0, phi, ZeroKernel{}, r), DomainError);
  EXPECT_THROW(mp_series(atoms, 2, 1.0, phi, ZeroKernel{}, r), DomainError);
  EXPECT_THROW(mp_series(atoms, 1, 1.0, phi, ZeroKernel{}, r, 1), ConfigError);
}

TEST(MpResidual, ZeroTrajectoriesGiveZero) {
  const std::vector<double> times{0.0, 0.5, 1.0};
  MpSeries z;
  z.x_phi = z.x_lap = z.x_phi2 = z.pair = {0.0, 0.0, 0.0};
  const std::vector<MpSeries> series(10, z);
  const auto rep = mp_residual_test(times, series, {});
  EXPECT_EQ(rep.max_abs_z, 0.0);
  EXPECT_TRUE(rep.zero_mean_ok);
  EXPECT_TRUE(rep.qv_ok);
  EXPECT_EQ(rep.qv_realized, 0.0);
}

TEST(MpResidual, FellerDiffusionPassesAndAdjudicates) {
  std::vector<double> times;
  for (int i = 0; i <= 50; ++i) times.push_back(i * 0.02);
  std::vector<MpSeries> series;
  Rng r(3);
  for (int i = 0; i < 3000; ++i) series.push_back(feller(times, 1.0, r));
  MpOptions o;
  o.nu = 1.0;
  o.half_factor = false;
  const auto rep = mp_residual_test(times, series, o);
  EXPECT_TRUE(rep.zero_mean_ok) << rep.max_abs_z;
  EXPECT_TRUE(rep.orthogonal_ok) << rep.lag1_autocorrelation;
  EXPECT_TRUE(rep.qv_ok) << rep.qv_realized << " vs " << rep.qv_target;
  const auto adj = mp_adjudicate(times, series, o);
  EXPECT_EQ(adj.consistent, "without_half");
  EXPECT_NEAR(adj.growth_rate_measured, 1.0, 0.1);
}

TEST(MpResidual, GridErrors) {
  MpSeries s;
  s.x_phi = s.x_lap = s.x_phi2 = s.pair = {0.0, 0.0};
  const std::vector<MpSeries> series{s};
  EXPECT_THROW(mp_residual_test(std::vector<double>{}, series, {}), DomainError);
  EXPECT_THROW(mp_residual_test(std::vector<double>{0.0, 0.0}, series, {}), DomainError);
  EXPECT_THROW(mp_residual_test(std::vector<double>{0.0, 0.5, 1.0}, series, {}), DomainError);
}

TEST(ExperimentSpec, ValidationNamesTheField) {
  EXPECT_NO_THROW(valid().validate());
  auto expect_field = [](ExperimentSpec s, const std::string& field) {
    try {
      s.validate();
      ADD_FAILURE() << "no error for " << field;
    } catch (const ValidationError& e) {
      EXPECT_EQ(e.field(), field);
    }
  };
  auto s = valid();
  s.id = "nope";
  expect_field(s, "experiment.id");
  s = valid();
  s.replicates = 0;
  expect_field(s, "experiment.replicates");
  s = valid();
  s.n_list = {10, -1};
  expect_field(s, "experiment.n");
  s = valid();
  s.K1 = 0.0;
  expect_field(s, "horizon.K1");
  s = valid();
  s.c0 = -1.0;
  expect_field(s, "horizon.c0");
  s = valid();
  s.test_functions = {"sin"};
  expect_field(s, "test_functions.phi");
  s = valid();
  s.environment.dim = 0;
  expect_field(s, "environment.dim");
}

TEST(ExperimentSpec, Params) {
  auto s = valid();
  s.params["epsilon"] = "0.02";
  s.params["bad"] = "0.1x";
  EXPECT_EQ(s.param("epsilon", 1.0), 0.02);
  EXPECT_EQ(s.param("missing", 7.0), 7.0);
  EXPECT_THROW(s.param("bad", 1.0), ValidationError);
}

TEST(Theorem1, PreconditionsAndValidation) {
  Theorem1Spec t;
  t.snake_environment.n = 10;
  t.branching_environment.n = 10;
  t.replicates = 10;
  t.times = {2.0};
  EXPECT_THROW(theorem1_representation_check(t), PreconditionError);
  t.times = {0.5};
  t.branching_environment.nu = 1.0;
  EXPECT_THROW(theorem1_representation_check(t), ValidationError);
  t.branching_environment.nu = 0.0;
  t.r = 0.0;
  EXPECT_THROW(theorem1_representation_check(t), ValidationError);
}

TEST(Theorem1, SmallScaleAgreement) {
  Theorem1Spec t;
  t.snake_environment.n = 10;
  t.snake_environment.kernel = ConstantKernel{1.0};
  t.branching_environment = t.snake_environment;
  t.times = {0.2, 0.5};
  t.replicates = 1000;
  t.seed = 5;
  const auto rep = theorem1_representation_check(t);
  EXPECT_EQ(rep.failed_replicates, 0u);
  ASSERT_EQ(rep.rows.size(), 2u);
  for (const auto& row : rep.rows) {
    EXPECT_GT(row.p_value, 1e-3);
    EXPECT_NEAR(row.snake_mean, row.branching_mean, 4.0 * std::hypot(row.snake_se, row.branching_se));
  }
}

TEST(RunExperiment, DeterministicAcrossWorkers) {
  auto spec = default_spec("snake");
  spec.replicates = 20;
  spec.workers = 1;
  const auto a = summary_json(run_experiment(spec));
  spec.workers = 3;
  const auto b = summary_json(run_experiment(spec));
  EXPECT_EQ(a, b);
  spec.id = "bogus";
  EXPECT_THROW(run_experiment(spec), ValidationError);
  EXPECT_THROW(default_spec("bogus"), ValidationError);
}

TEST(RunExperiment, VerdictAggregation) {
  CheckResult c;
  c.stats.push_back(info_stat("x", 1.0));
  EXPECT_TRUE(c.passed());
  c.stats.push_back(check_stat("y", 1.0, 0.0, 0.0, "", "", false));
  EXPECT_FALSE(c.passed());
  ResultBundle b;
  b.checks = {c};
  b.checks[0].failed_replicates = 3;
  EXPECT_FALSE(b.passed());
  EXPECT_EQ(b.failed_replicates(), 3u);
}
