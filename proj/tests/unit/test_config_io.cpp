#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "snakesim/config.hpp"
#include "snakesim/errors.hpp"
#include "snakesim/io.hpp"

using namespace snakesim;

namespace {

ExperimentSpec parse(const std::string& text, ExperimentSpec base = {}) {
  std::istringstream in(text);
  return read_spec(in, std::move(base));
}

std::string field_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ValidationError& e) {
    return e.field();
  }
  return "<no error>";
}

}  // namespace

TEST(Config, ReadsEverySection) {
  const auto s = parse(R"(
[experiment]
seed = 42
replicates = 300
workers = 2
n = 10, 20 ,40

[environment]
n = 50
nu = -0.5
kernel = sqexp
variance = 2
length_scale = 0.3
grid_points = 11

[horizon]
K1 = 1.5
c0 = 0.25

[test_functions]
phi = 1, cos, bump:0:1

[params]
epsilon = 0.02
)");
  EXPECT_EQ(s.seed, 42u);
  EXPECT_EQ(s.replicates, 300u);
  EXPECT_EQ(s.workers, 2u);
  EXPECT_EQ(s.n_list, (std::vector<int>{10, 20, 40}));
  EXPECT_EQ(s.environment.n, 50);
  EXPECT_EQ(s.environment.nu, -0.5);
  const auto& k = std::get<SquaredExponentialKernel>(s.environment.kernel);
  EXPECT_EQ(k.variance, 2.0);
  EXPECT_EQ(k.length_scale, 0.3);
  EXPECT_EQ(s.environment.grid.points_per_axis, 11);
  EXPECT_EQ(s.K1, 1.5);
  EXPECT_EQ(s.c0, 0.25);
  EXPECT_EQ(s.test_functions, (std::vector<std::string>{"1", "cos", "bump:0:1"}));
  EXPECT_EQ(s.param("epsilon", 0.0), 0.02);
}

TEST(Config, AbsentKeysKeepBase) {
  ExperimentSpec base;
  base.id = "survival";
  base.seed = 9;
  base.delta = 0.5;
  const auto s = parse("[experiment]\nreplicates = 5\n", base);
  EXPECT_EQ(s.id, "survival");
  EXPECT_EQ(s.seed, 9u);
  EXPECT_EQ(s.delta, 0.5);
  EXPECT_EQ(s.replicates, 5u);
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_EQ(field_of("[experiment]\nreplicatez = 3\n"), "experiment.replicatez");
  EXPECT_EQ(field_of("[bogus]\nx = 1\n"), "bogus");
  EXPECT_EQ(field_of("[experiment]\nreplicates = 0\n"), "experiment.replicates");
  EXPECT_EQ(field_of("[experiment]\nseed = abc\n"), "experiment.seed");
  EXPECT_EQ(field_of("[environment]\nnu = 1.5q\n"), "environment.nu");
  EXPECT_EQ(field_of("[environment]\nkernel = matern\n"), "environment.kernel");
  EXPECT_EQ(field_of("[environment]\nmode = chaotic\n"), "environment.mode");
  EXPECT_EQ(field_of("[environment]\nmode = deterministic\n"), "environment.field");
  EXPECT_EQ(field_of("[environment]\nfield = nope\n"), "environment.field");
  EXPECT_EQ(field_of("[experiment\nseed = 1\n"), "file");
  EXPECT_THROW(load_spec("/nonexistent/spec.ini", {}), ValidationError);
}

TEST(Config, IniRoundTrip) {
  ExperimentSpec s;
  s.id = "brox";
  s.seed = 123456789012345ULL;
  s.replicates = 77;
  s.workers = 3;
  s.n_list = {5, 50};
  s.environment.n = 64;
  s.environment.nu = 0.1;
  s.environment.kernel = SquaredExponentialKernel{0.7, 1.0 / 3.0};
  s.environment.xi_bound_override = 2.5;
  s.environment.grid.spacing = 0.01;
  s.delta = 0.3;
  s.t = 2.0 / 3.0;
  s.K1 = 1.25;
  s.test_functions = {"cos", "const:2"};
  s.params["epsilon"] = "0.01";
  const auto text = spec_to_ini(s);
  ExperimentSpec base;
  base.id = "brox";
  const auto back = parse(text, base);
  EXPECT_EQ(spec_to_ini(back), text);
  EXPECT_EQ(back.seed, s.seed);
  EXPECT_EQ(back.t, s.t);
  EXPECT_EQ(std::get<SquaredExponentialKernel>(back.environment.kernel).length_scale, 1.0 / 3.0);
  EXPECT_EQ(*back.environment.xi_bound_override, 2.5);

  ExperimentSpec det;
  det.environment.mode = FieldMode::deterministic;
  det.environment.deterministic = deterministic_time_sine();
  const auto det_back = parse(spec_to_ini(det));
  EXPECT_EQ(det_back.environment.deterministic->name, det.environment.deterministic->name);
}

TEST(Config, KernelNames) {
  EXPECT_TRUE(std::holds_alternative<ZeroKernel>(parse_kernel("zero", 1, 1)));
  EXPECT_EQ(std::get<ConstantKernel>(parse_kernel("constant", 3, 1)).variance, 3.0);
  EXPECT_TRUE(std::holds_alternative<SquaredExponentialKernel>(parse_kernel("squared_exponential", 1, 1)));
  EXPECT_THROW(parse_kernel("rbf", 1, 1), ValidationError);
}

TEST(Io, CsvFormat) {
  Table t{"tab", {"a", "b"}, {{1.0, 0.1}, {-2.5, 1e-300}}};
  std::ostringstream o;
  write_table_csv(t, o);
  EXPECT_EQ(o.str(), "a,b\n1,0.10000000000000001\n-2.5,1e-300\n");
}

TEST(Io, SummaryJsonShape) {
  ResultBundle b;
  b.spec.id = "snake";
  b.spec.seed = 3;
  CheckResult c;
  c.name = "snake/basics";
  c.seconds = 12.5;
  c.stats.push_back(check_stat("x", 1.0, 0.1, 1.0, "oracle", "within 3 SE", true));
  c.stats.push_back(info_stat("nan_case", std::nan("")));
  c.notes = {"hello"};
  b.checks = {c};
  const auto j = nlohmann::json::parse(summary_json(b));
  EXPECT_EQ(j["experiment"], "snake");
  EXPECT_EQ(j["passed"], true);
  EXPECT_EQ(j["checks"][0]["stats"][0]["verdict"], "pass");
  EXPECT_EQ(j["checks"][0]["stats"][0]["provenance"], "oracle");
  EXPECT_TRUE(j["checks"][0]["stats"][1]["estimate"].is_null());
  EXPECT_EQ(j["checks"][0]["notes"][0], "hello");
  // No timings: the summary must be reproducible.
  EXPECT_EQ(summary_json(b).find("12.5"), std::string::npos);
}

TEST(Io, WriteBundleAndFailure) {
  const auto dir = std::filesystem::temp_directory_path() / "snakesim_io_test";
  std::filesystem::remove_all(dir);
  ResultBundle b;
  CheckResult c;
  c.name = "a/b";
  c.tables.push_back(Table{"t 1", {"x"}, {{1.0}}});
  b.checks = {c};
  write_bundle(b, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "summary.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "a_b__t_1.csv"));
  std::ofstream(dir / "blocker") << "x";
  EXPECT_THROW(write_bundle(b, dir / "blocker" / "sub"), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST(Io, ContourAndLedgerExport) {
  ContourRecord r;
  r.n = 1;
  r.top = 2;
  for (int l : {0, 1, 0, 1, 2, 1, 0}) {
    const double x = l * 0.5;
    r.push(l, std::span<const double>(&x, 1));
  }
  std::ostringstream c;
  write_contour_csv(r, c);
  EXPECT_EQ(c.str().substr(0, 27), "step,level,x0\n0,0,0\n1,1,0.5");
  std::ostringstream l;
  write_ledger_csv(LocalTimeLedger::from_record(r), l);
  EXPECT_EQ(l.str(), "level,upcrossing_runs\n0,0:2\n1,3:1\n2,\n");
}

TEST(Io, Fnv1a) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
}
