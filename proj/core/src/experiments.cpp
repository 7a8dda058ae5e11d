#include "snakesim/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "snakesim/branching.hpp"
#include "snakesim/brox.hpp"
#include "snakesim/errors.hpp"
#include "snakesim/functional.hpp"
#include "snakesim/snake.hpp"
#include "snakesim/stats.hpp"

namespace snakesim {

namespace {

using Clock = std::chrono::steady_clock;

class Timer {
 public:
  double seconds() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

 private:
  Clock::time_point start_ = Clock::now();
};

// Timing stays out of the stats so summaries are reproducible.
void finish(CheckResult& c, const Timer& timer) { c.seconds = timer.seconds(); }

std::vector<int> ns(const ExperimentSpec& spec, std::vector<int> fallback) {
  return spec.n_list.empty() ? fallback : spec.n_list;
}

int first_n(const ExperimentSpec& spec, int fallback) { return spec.n_list.empty() ? fallback : spec.n_list.front(); }

std::size_t count_param(const ExperimentSpec& spec, const std::string& key, std::size_t fallback) {
  const double v = spec.param(key, static_cast<double>(fallback));
  if (!(v >= 1.0)) throw ValidationError("params." + key, "must be >= 1");
  return static_cast<std::size_t>(v);
}

EnvironmentConfig env_config(int n, CovarianceKernel kernel, double nu = 0.0) {
  EnvironmentConfig c;
  c.n = n;
  c.nu = nu;
  c.kernel = kernel;
  return c;
}

std::string label(const std::string& base, std::initializer_list<std::pair<const char*, double>> kv) {
  std::ostringstream o;
  o << base;
  for (const auto& [k, v] : kv) o << ' ' << k << '=' << v;
  return o.str();
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SnakeConfig snake_config(int n, double K1, int dim = 1) {
  SnakeConfig sc;
  sc.n = n;
  sc.K1 = K1;
  sc.root.assign(static_cast<std::size_t>(dim), 0.0);
  return sc;
}

}  // namespace

// ---------------------------------------------------------------------------
// Defaults and dispatch
// ---------------------------------------------------------------------------

ExperimentSpec default_spec(const std::string& id) {
  ExperimentSpec s;
  s.id = id;
  s.seed = 20240611;
  if (id == "survival") {
    s.module = "branching";
    s.replicates = 100000;
  } else if (id == "branching-mp") {
    s.module = "branching";
    s.replicates = 10000;
  } else if (id == "snake") {
    s.module = "snake";
    s.replicates = 100;
    s.environment.n = 10;
  } else if (id == "reversal") {
    s.module = "snake";
    s.replicates = 10000;
  } else if (id == "occupation") {
    s.module = "snake";
    s.replicates = 100;
  } else if (id == "theorem1") {
    s.module = "harness";
    s.replicates = 10000;
    s.environment.n = 50;
  } else if (id == "functional") {
    s.module = "functional";
    s.replicates = 10000;
  } else if (id == "brox") {
    s.module = "brox";
    s.replicates = 10000;
  } else {
    throw ValidationError("experiment.id", "unknown experiment '" + id + "'");
  }
  return s;
}

std::vector<CheckResult> run_checks(const ExperimentSpec& spec) {
  std::vector<CheckResult> out;
  if (spec.id == "survival") {
    out.push_back(check_survival_oracle(spec));
    out.push_back(check_critical_survival(spec));
    out.push_back(check_h_limit(spec));
    out.push_back(check_survival_mc(spec));
    out.push_back(check_survival_upper_bound(spec));
  } else if (spec.id == "branching-mp") {
    out.push_back(check_mass_bounds(spec));
    out.push_back(check_mp_residuals(spec));
  } else if (spec.id == "snake") {
    out.push_back(check_snake_basics(spec));
  } else if (spec.id == "reversal") {
    out.push_back(check_reversal(spec));
  } else if (spec.id == "occupation") {
    out.push_back(check_occupation_identity(spec));
  } else if (spec.id == "theorem1") {
    out.push_back(check_law_equality(spec));
  } else if (spec.id == "functional") {
    out.push_back(check_decomposition(spec));
  } else if (spec.id == "brox") {
    out.push_back(check_appendix(spec));
  } else {
    throw ValidationError("experiment.id", "unknown experiment '" + spec.id + "'");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Survival
// ---------------------------------------------------------------------------

CheckResult check_survival_oracle(const ExperimentSpec& spec) {
  Timer timer;
  CheckResult c;
  c.name = "survival_oracle";
  Table t{"oracle", {"b", "n", "k", "iterated", "closed_form", "relative_gap"}, {}};
  for (double b : {-1.0, 0.0, 1.0}) {
    for (int n : ns(spec, {10, 100, 1000})) {
      const auto r = exact_survival_geometric({b, n, n});
      const double rel = std::abs(r.iterated - r.closed_form) / std::abs(r.closed_form);
      t.rows.push_back({b, double(n), double(n), r.iterated, r.closed_form, rel});
      c.stats.push_back(check_stat(label("relative_gap", {{"b", b}, {"n", n}}), rel, 0.0, 0.0,
                                   "iterated generating function vs closed form", "<= 1e-12", rel <= 1e-12));
    }
  }
  c.tables.push_back(std::move(t));
  finish(c, timer);
  return c;
}

CheckResult check_critical_survival(const ExperimentSpec&) {
  Timer timer;
  CheckResult c;
  c.name = "critical_survival";
  const long k_max = 10000;
  const auto curve = exact_survival_curve(0.0, 100, k_max);
  double worst = 0.0;
  long worst_k = 0;
  Table t{"critical", {"k", "survival", "exact"}, {}};
  for (long k = 0; k <= k_max; ++k) {
    const double exact = 1.0 / static_cast<double>(k + 1);
    const double gap = std::abs(curve[static_cast<std::size_t>(k)] - exact) / exact;
    if (gap > worst) worst = gap, worst_k = k;
    if (k <= 100 || k % 100 == 0) t.rows.push_back({double(k), curve[static_cast<std::size_t>(k)], exact});
  }
  c.stats.push_back(check_stat("max_relative_gap", worst, 0.0, 0.0, "1/(k+1) for the critical geometric chain",
                               "<= 1e-12", worst <= 1e-12));
  c.notes.push_back("worst k = " + std::to_string(worst_k) + " over every k <= " + std::to_string(k_max));
  c.tables.push_back(std::move(t));
  finish(c, timer);
  return c;
}

CheckResult check_h_limit(const ExperimentSpec& spec) {
  Timer timer;
  CheckResult c;
  c.name = "h_limit";
  const double h = survival_rate_h(1.0, 1.0);
  Table t{"h_limit", {"n", "n_survival", "h", "gap", "tolerance"}, {}};
  for (int n : ns(spec, {100, 1000, 10000})) {
    const double v = n * exact_survival_geometric({1.0, n, n}).iterated;
    const double gap = std::abs(v - h);
    t.rows.push_back({double(n), v, h, gap, 2.0 / n});
    c.stats.push_back(check_stat(label("n_survival", {{"n", n}}), v, 0.0, h, "h(1,1) = 1/(1 - e^-1)", "|gap| <= 2/n",
                                 gap <= 2.0 / n));
  }
  c.tables.push_back(std::move(t));
  finish(c, timer);
  return c;
}

CheckResult check_survival_mc(const ExperimentSpec& spec) {
  Timer timer;
  CheckResult c;
  c.name = "survival_mc_degenerate";
  const double delta = spec.delta;
  Table t{"survival_mc", {"b", "n", "n_estimate", "n_se", "n_exact"}, {}};
  std::uint64_t salt = 0;
  for (int n : ns(spec, {200})) {
    for (double b : {-1.0, 0.0, 1.0}) {
      const auto cfg = env_config(n, ZeroKernel{}, b);
      const auto est = estimate_survival_mc(cfg, delta, spec.replicates, mix(spec.seed, salt++), spec.workers);
      const long k = static_cast<long>(std::floor(n * delta + 1e-9));
      const double exact = exact_survival_geometric({b, n, k}).iterated;
      const double ne = n * est.estimate, nse = n * est.stderr_, nx = n * exact;
      t.rows.push_back({b, double(n), ne, nse, nx});
      c.stats.push_back(check_stat(label("n_survival", {{"b", b}, {"n", n}}), ne, nse, nx,
                                   "exact geometric chain with b_n = nu", "within 3 SE", std::abs(ne - nx) <= 3.0 * nse));
    }
  }
  c.tables.push_back(std::move(t));
  finish(c, timer);
  return c;
}

CheckResult check_survival_upper_bound(const ExperimentSpec& spec) {
  Timer timer;
  CheckResult c;
  c.name = "survival_upper_bound";
  const double delta = spec.delta;
  Table t{"survival_bound", {"n", "n_estimate", "n_se", "bound", "limit_critical"}, {}};
  for (int n : ns(spec, {200})) {
    const auto cfg = env_config(n, ConstantKernel{1.0}, 0.0);
    const auto est = estimate_survival_mc(cfg, delta, spec.replicates, mix(spec.seed, 100 + n), spec.workers);
    const double b = cfg.growth_rate();
    const double bound = survival_rate_h(b, delta);
    const double ne = n * est.estimate;
    const double rel_se = est.estimate > 0.0 ? est.stderr_ / est.estimate : 0.0;
    t.rows.push_back({double(n), ne, n * est.stderr_, bound, survival_rate_h(0.0, delta)});
    c.stats.push_back(check_stat(label("n_survival", {{"n", n}}), ne, n * est.stderr_, bound,
                                 "h(nu + g_bar/2, delta) upper bound", "<= h (1 + 3 relative SE)",
                                 ne <= bound * (1.0 + 3.0 * rel_se)));
  }
  c.tables.push_back(std::move(t));
  finish(c, timer);
  return c;
}

// ---------------------------------------------------------------------------
// Mass bounds
// ---------------------------------------------------------------------------

CheckResult check_mass_bounds(const ExperimentSpec& spec) {
  Timer timer;
  CheckResult c;
  c.name = "mass_bounds";
  const int n = first_n(spec, 100);
  struct Case {
    std::string name;
    EnvironmentConfig cfg;
  };
  std::vector<Case> cases{{"zero_nu0", env_config(n, ZeroKernel{}, 0.0)},
                          {"zero_nu-1", env_config(n, ZeroKernel{}, -1.0)},
                          {"constant_g1", env_config(n, ConstantKernel{1.0}, 0.0)},
                          {"sqexp_g1_l1", env_config(n, SquaredExponentialKernel{1.0, 1.0}, 0.0)}};
  // Coarser lattice keeps the per-slice Cholesky product affordable.
  cases[3].cfg.grid.spacing = 0.1;
  cases[3].cfg.grid.points_per_axis = 161;

  MassMomentOptions opt;
  opt.initial_particles = static_cast<std::size_t>(spec.param("initial_particles", 10));
  opt.bump = GaussianBump{0.0, 1.0};

  Table means{"means", {"case", "mean_mass", "se", "bound", "exact", "bump_mean", "bump_se", "bump_rhs", "growth_rate"}, {}};
  Table tails{"tails", {"case", "level", "probability", "se", "bound"}, {}};
  std::uint64_t salt = 0;
  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    const auto& cs = cases[ci];
    const auto rep = mass_moment_report(cs.cfg, spec.delta, spec.replicates, mix(spec.seed, salt++), opt, spec.workers);
    c.stats.push_back(check_stat(cs.name + " mean_mass", rep.mean_mass, rep.mean_mass_se, rep.mean_bound,
                                 "X0(1)(1 + b/n)^floor(n delta)", "<= bound + 3 SE", rep.mean_ok));
    c.stats.push_back(check_stat(cs.name + " mean_mass_exact", rep.mean_mass, rep.mean_mass_se, rep.exact_mean,
                                 "iterated exact per-step mean by quadrature", "within 3 SE",
                                 std::abs(rep.mean_mass - rep.exact_mean) <= 3.0 * rep.mean_mass_se));
    double worst = -1e300;
    for (std::size_t j = 0; j < rep.levels.size(); ++j) {
      tails.rows.push_back({double(ci), rep.levels[j], rep.tail_prob[j], rep.tail_se[j], rep.tail_bound[j]});
      worst = std::max(worst, rep.tail_prob[j] - rep.tail_bound[j] - 3.0 * rep.tail_se[j]);
    }
    c.stats.push_back(check_stat(cs.name + " sup_tail_excess", worst, 0.0, 0.0,
                                 "P(sup X(1) >= a) <= X0(1) max(e^{b delta}, 1)/a", "excess over bound + 3 SE <= 0",
                                 rep.tail_ok));
    c.stats.push_back(check_stat(cs.name + " semigroup", rep.bump_mean, rep.bump_se, rep.bump_rhs,
                                 "(1 + b/n)^floor(n delta) X0(S_delta f), Gaussian bump", "<= rhs + 3 SE",
                                 rep.semigroup_ok));
    if (cs.name == "zero_nu0")
      c.stats.push_back(check_stat(cs.name + " semigroup_equality", rep.bump_mean, rep.bump_se, rep.bump_exact,
                                   "heat kernel convolution, critical drift-free case", "within 3 SE",
                                   std::abs(rep.bump_mean - rep.bump_exact) <= 3.0 * rep.bump_se));
    c.stats.push_back(info_stat(cs.name + " growth_rate", rep.growth_rate_measured, 0.0, cs.cfg.growth_rate(),
                                "nu + g_bar/2 (per-generation mean)"));
    means.rows.push_back({double(ci), rep.mean_mass, rep.mean_mass_se, rep.mean_bound, rep.exact_mean, rep.bump_mean,
                          rep.bump_se, rep.bump_rhs, rep.growth_rate_measured});
  }
  for (std::size_t ci = 0; ci < cases.size(); ++ci) c.notes.push_back("case " + std::to_string(ci) + " = " + cases[ci].name);
  c.tables.push_back(std::move(means));
  c.tables.push_back(std::move(tails));
  finish(c, timer);
  return c;
}

// ---------------------------------------------------------------------------
// Martingale-problem residuals
// ---------------------------------------------------------------------------

namespace {

struct MpRun {
  std::vector<double> times;
  std::vector<MpSeries> series;
  std::size_t failed = 0;
};

MpRun snake_mp_run(const EnvironmentConfig& cfg, double K1, double r, double horizon, const TestFunctionSpec& phi,
                   std::size_t replicates, std::uint64_t seed, unsigned workers) {
  const int n = cfg.n;
  const int levels = static_cast<int>(std::floor(horizon * n + 1e-9));
  MpRun out;
  for (int m = 0; m <= levels; ++m) out.times.push_back(static_cast<double>(m) / n);
  const EnvironmentFactory factory(cfg);
  auto res = run_replicates<MpSeries>(replicates, workers, [&](std::size_t rep) {
    auto env = factory.make(Rng(seed, rep, Rng::kEnvironment));
    Rng rng(seed, rep, Rng::kDynamics);
    Rng aux(seed, rep, Rng::kAuxiliary);
    Horizon h;
    h.c0 = r;
    const SnakeRun run = run_snake(snake_config(n, K1, cfg.dim), *env, rng, h);
    if (run.record.truncated) throw ResolutionError("snake run truncated");
    std::vector<std::vector<double>> atoms;
    atoms.reserve(static_cast<std::size_t>(levels) + 1);
    for (int m = 0; m <= levels; ++m) atoms.push_back(occupation_atoms(run.record, run.ledger, 0.0, r, 0.0, m));
    return mp_series(atoms, cfg.dim, 1.0 / n, phi, cfg.kernel, aux);
  });
  out.series = std::move(res.values);
  out.failed = res.failed.size();
  return out;
}

}  // namespace

CheckResult check_mp_residuals(const ExperimentSpec& spec) {
  Timer timer;
  CheckResult c;
  c.name = "mp_residuals";
  const int n = first_n(spec, 100);
  const double K1 = spec.param("mp_K1", 1.25);
  const double horizon = spec.param("mp_horizon", 1.0);
  const TestFunctionSpec one = TestFunctionSpec::parse("1");

  const auto cfg = env_config(n, ZeroKernel{}, 0.0);
  const MpRun run = snake_mp_run(cfg, K1, spec.r, horizon, one, spec.replicates, mix(spec.seed, 1), spec.workers);
  c.failed_replicates += run.failed;
  MpOptions opt;
  const auto rep = mp_residual_test(run.times, run.series, opt);
  c.stats.push_back(check_stat("feller max_abs_z", rep.max_abs_z, 0.0, 0.0, "M^1_t has mean zero at every grid time",
                               "<= 4", rep.zero_mean_ok));
  c.stats.push_back(check_stat("feller quadratic_variation", rep.qv_realized, rep.qv_difference_se, rep.qv_target,
                               "2 int X_s(1) ds", "within 10% + 3 SE", rep.qv_ok));
  c.stats.push_back(info_stat("feller increment_lag1_autocorrelation", rep.lag1_autocorrelation,
                              rep.autocorrelation_se, 0.0, "orthogonal martingale increments"));
  Table traj{"feller_residual", {"t", "mean", "se"}, {}};
  for (std::size_t i = 0; i < rep.times.size(); ++i) traj.rows.push_back({rep.times[i], rep.mean[i], rep.se[i]});
  c.tables.push_back(std::move(traj));

  // Drift-factor adjudication with a biased, correlated environment.
  const int na = static_cast<int>(spec.param("adjudication_n", 50));
  const auto adj_cfg = env_config(na, ConstantKernel{1.0}, 1.0);
  const auto adj_reps = count_param(spec, "adjudication_replicates", 2000);
  const MpRun adj_run = snake_mp_run(adj_cfg, K1, spec.r, horizon, one, adj_reps, mix(spec.seed, 2), spec.workers);
  c.failed_replicates += adj_run.failed;
  MpOptions aopt;
  aopt.nu = adj_cfg.nu;
  aopt.g_bar = kernel_sup_diagonal(adj_cfg.kernel);
  const auto adj = mp_adjudicate(adj_run.times, adj_run.series, aopt);
  c.stats.push_back(info_stat("adjudication with_half max_abs_z", adj.with_half.max_abs_z, 0.0, 0.0,
                              "residual with 1/2 on the whole drift"));
  c.stats.push_back(info_stat("adjudication without_half max_abs_z", adj.without_half.max_abs_z, 0.0, 0.0,
                              "residual with drift (1/2) Lap phi + (nu + g_bar/2) phi"));
  c.stats.push_back(info_stat("adjudication growth_rate", adj.growth_rate_measured, 0.0, aopt.nu + 0.5 * aopt.g_bar,
                              "nu + g_bar/2"));
  c.notes.push_back("drift-factor adjudication: SE-consistent variant = " + adj.consistent);
  Table at{"adjudication_residual", {"t", "with_half_mean", "with_half_se", "without_half_mean", "without_half_se"}, {}};
  for (std::size_t i = 0; i < adj.with_half.times.size(); ++i)
    at.rows.push_back({adj.with_half.times[i], adj.with_half.mean[i], adj.with_half.se[i], adj.without_half.mean[i],
                       adj.without_half.se[i]});
  c.tables.push_back(std::move(at));
  finish(c, timer);
  return c;
}

// ---------------------------------------------------------------------------
// Snake basics
// ---------------------------------------------------------------------------

CheckResult check_snake_basics(const ExperimentSpec& spec) {
  Timer timer;
  CheckResult c;
  c.name = "snake_basics";
  const int n = first_n(spec, spec.environment.n);

  // Interior up frequency under xi = 0 with a far reflection level.
  {
    const auto cfg = env_config(n, ZeroKernel{}, 0.0);
    auto env = EnvironmentFactory(cfg).make(Rng(spec.seed, 0, Rng::kEnvironment));
    Rng rng(spec.seed, 0, Rng::kDynamics);
    Horizon h;
    h.steps = static_cast<std::int64_t>(spec.param("frequency_steps", 100000));
    const SnakeRun run = run_snake(snake_config(n, 1000.0), *env, rng, h);
    std::size_t ups = 0, interior = 0;
    for (std::size_t k = 0; k + 1 < run.record.states(); ++k) {
      if (run.record.forced(k)) continue;
      ++interior;
      if (run.record.levels[k + 1] > run.record.levels[k]) ++ups;
    }
    const double p = static_cast<double>(ups) / static_cast<double>(interior);
    const double se = std::sqrt(0.25 / static_cast<double>(interior));
    c.stats.push_back(check_stat("interior_up_frequency", p, se, 0.5, "fair contour when xi = 0", "within 3 SE",
                                 std::abs(p - 0.5) <= 3.0 * se));
  }

  // Ledger consistency, local-time round trip and displacement recount on runs
  // in the configured environment.
  EnvironmentConfig cfg = spec.environment;
  cfg.n = n;
  const EnvironmentFactory factory(cfg);
  struct Out {
    bool ledger_ok;
    bool roundtrip_ok;
    bool displacement_ok;
  };
  auto res = run_replicates<Out>(spec.replicates, spec.workers, [&](std::size_t rep) {
    auto env = factory.make(Rng(spec.seed, rep, Rng::kEnvironment));
    Rng rng(spec.seed, rep + 1, Rng::kDynamics);
    Horizon h;
    h.c0 = spec.c0;
    const SnakeRun run = run_snake(snake_config(n, spec.K1, cfg.dim), *env, rng, h);
    run.record.validate();
    Out o{true, true, true};
    std::int64_t total = 0;
    for (int m = 0; m <= run.record.top; ++m) {
      const auto up = static_cast<std::int64_t>(run.ledger.upcrossings(m).size());
      const auto down = run.ledger.downcrossings(m);
      total += up + down;
      if (std::abs(up - down) > 1) o.ledger_ok = false;
    }
    if (total != static_cast<std::int64_t>(run.record.steps())) o.ledger_ok = false;
    const double inv_n = 1.0 / n;
    for (double r : {0.0, 0.5 * spec.c0, spec.c0}) {
      if (r >= run.ledger.terminal(0)) continue;
      const double tau = run.ledger.inverse_local_time(0.0, r);
      const double l = run.ledger.local_time(0.0, tau);
      if (!(l > r && l <= r + inv_n + 1e-12)) o.roundtrip_ok = false;
    }
    for (double a : {0.0, 0.2}) {
      if (displacement_count(run.record, a, 0.3, 0.1) != displacement_count_bruteforce(run.record, a, 0.3, 0.1))
        o.displacement_ok = false;
    }
    return o;
  });
  c.failed_replicates = res.failed.size();
  auto frac = [&](auto get) {
    double k = 0;
    for (const auto& o : res.values) k += get(o) ? 1.0 : 0.0;
    return res.values.empty() ? 0.0 : k / static_cast<double>(res.values.size());
  };
  const double ledger = frac([](const Out& o) { return o.ledger_ok; });
  const double roundtrip = frac([](const Out& o) { return o.roundtrip_ok; });
  const double disp = frac([](const Out& o) { return o.displacement_ok; });
  c.stats.push_back(check_stat("ledger_consistency_fraction", ledger, 0.0, 1.0,
                               "sum of crossings = steps, |up - down| <= 1", "== 1", ledger == 1.0));
  c.stats.push_back(check_stat("local_time_roundtrip_fraction", roundtrip, 0.0, 1.0,
                               "l(tau_r) in (r, r + 1/n]", "== 1", roundtrip == 1.0));
  c.stats.push_back(check_stat("displacement_recount_fraction", disp, 0.0, 1.0, "streaming vs brute-force count",
                               "== 1", disp == 1.0));
  c.stats.push_back(check_stat("failed_replicates", double(c.failed_replicates), 0.0, 0.0, "no replicate errors",
                               "== 0", c.failed_replicates == 0));
  finish(c, timer);
  return c;
}

// ---------------------------------------------------------------------------
// Reversal
// ---------------------------------------------------------------------------

namespace {

struct ContourStats {
  double sup = 0.0;
  double first_excursion = 0.0;
  double tau = 0.0;
  double mid_level = 0.0;
};

ContourStats contour_stats(const ContourRecord& r) {
  ContourStats s;
  s.sup = *std::max_element(r.levels.begin(), r.levels.end());
  s.tau = static_cast<double>(r.steps());
  for (std::size_t k = 1; k < r.states(); ++k)
    if (r.levels[k] == 0) {
      s.first_excursion = static_cast<double>(k);
      break;
    }
  s.mid_level = r.levels[r.steps() / 2];
  return s;
}

}  // namespace

CheckResult check_reversal(const ExperimentSpec& spec) {
  Timer timer;
  CheckResult c;
  c.name = "reversal";
  const double c0 = spec.c0;

  // Pathwise: full reversal equals time reversal.
  const auto pathwise_runs = count_param(spec, "pathwise_runs", 100);
  Table pw{"pathwise", {"n", "K1", "runs", "level_mismatches", "tip_mismatches"}, {}};
  std::uint64_t salt = 0;
  for (int n : ns(spec, {1, 5, 20})) {
    for (double K1 : {1.0, 2.0}) {
      const auto cfg = env_config(n, ConstantKernel{1.0}, 0.0);
      const EnvironmentFactory factory(cfg);
      const std::uint64_t seed = mix(spec.seed, salt++);
      auto res = run_replicates<std::pair<int, int>>(pathwise_runs, spec.workers, [&](std::size_t rep) {
        auto env = factory.make(Rng(seed, rep, Rng::kEnvironment));
        Rng rng(seed, rep, Rng::kDynamics);
        Horizon h;
        h.c0 = c0;
        const SnakeRun run = run_snake(snake_config(n, K1), *env, rng, h);
        const ContourRecord a = full_reversal(run.record);
        const ContourRecord b = time_reversed(run.record);
        return std::pair<int, int>{a.levels != b.levels, a.tips != b.tips};
      });
      int lm = 0, tm = 0;
      for (const auto& [l, t] : res.values) lm += l, tm += t;
      c.failed_replicates += res.failed.size();
      pw.rows.push_back({double(n), K1, double(res.values.size()), double(lm), double(tm)});
      c.stats.push_back(check_stat(label("level_mismatches", {{"n", n}, {"K1", K1}}), lm, 0.0, 0.0,
                                   "full reversal equals time reversal step by step", "== 0",
                                   lm == 0 && res.failed.empty()));
      c.stats.push_back(info_stat(label("tip_mismatches", {{"n", n}, {"K1", K1}}), tm));
    }
  }
  c.tables.push_back(std::move(pw));

  // Distributional: each T_z applied to an independent ensemble.
  const int n = static_cast<int>(spec.param("distribution_n", 10));
  const double K1 = spec.param("distribution_K1", 1.0);
  const auto cfg = env_config(n, ConstantKernel{1.0}, 0.0);
  const EnvironmentFactory factory(cfg);
  const std::uint64_t seed_a = mix(spec.seed, 1000), seed_b = mix(spec.seed, 2000);
  auto ensemble = [&](std::uint64_t seed) {
    return run_replicates<ContourRecord>(spec.replicates, spec.workers, [&](std::size_t rep) {
      auto env = factory.make(Rng(seed, rep, Rng::kEnvironment));
      Rng rng(seed, rep, Rng::kDynamics);
      Horizon h;
      h.c0 = c0;
      return run_snake(snake_config(n, K1), *env, rng, h).record;
    });
  };
  const auto raw = ensemble(seed_a);
  const auto other = ensemble(seed_b);
  c.failed_replicates += raw.failed.size() + other.failed.size();
  std::vector<ContourStats> raw_stats;
  for (const auto& r : raw.values) raw_stats.push_back(contour_stats(r));

  const int top = snake_config(n, K1).top();
  const int tests = 4 * top;
  const double alpha = 0.01 / tests;
  double min_p = 1.0;
  Table dist{"distributional", {"z", "stat", "ks", "p_value"}, {}};
  auto column = [](const std::vector<ContourStats>& v, int which) {
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& s : v)
      out.push_back(which == 0 ? s.sup : which == 1 ? s.first_excursion : which == 2 ? s.tau : s.mid_level);
    return out;
  };
  bool invariants_ok = true;
  for (int z = 0; z < top; ++z) {
    std::vector<ContourStats> ts;
    ts.reserve(other.values.size());
    for (const auto& r : other.values) {
      const ContourRecord t = reverse_transform(r, z);
      const ContourStats a = contour_stats(r), b = contour_stats(t);
      if (a.sup != b.sup || a.tau != b.tau) invariants_ok = false;
      ts.push_back(b);
    }
    for (int which = 0; which < 4; ++which) {
      const auto x = column(raw_stats, which), y = column(ts, which);
      const KsResult ks = ks_two_sample(x, y, std::min<std::size_t>(50, std::min(x.size(), y.size())));
      dist.rows.push_back({double(z), double(which), ks.statistic, ks.p_value});
      min_p = std::min(min_p, ks.p_value);
    }
  }
  c.notes.push_back("stat codes: 0 = sup level, 1 = first excursion length, 2 = tau, 3 = level at tau/2");
  c.stats.push_back(check_stat("distributional min_p_value", min_p, 0.0, alpha,
                               "KS per (z, statistic), Bonferroni over all tests", ">= 0.01 / tests", min_p >= alpha));
  c.stats.push_back(check_stat("pathwise_invariants", invariants_ok ? 1.0 : 0.0, 0.0, 1.0,
                               "each T_z keeps sup level and tau", "== 1", invariants_ok));
  c.tables.push_back(std::move(dist));
  finish(c, timer);
  return c;
}

// ---------------------------------------------------------------------------
// Occupation identity
// ---------------------------------------------------------------------------

CheckResult check_occupation_identity(const ExperimentSpec& spec) {
  Timer timer;
  CheckResult c;
  c.name = "occupation_identity";
  const double K1 = spec.K1;
  Table t{"identity", {"n", "max_gap", "max_ratio", "mean_raw_ratio"}, {}};
  std::uint64_t salt = 0;
  for (int n : ns(spec, {10, 50, 100})) {
    const auto cfg = env_config(n, ConstantKernel{1.0}, 0.0);
    const EnvironmentFactory factory(cfg);
    const std::uint64_t seed = mix(spec.seed, salt++);
    struct Out {
      double max_gap;
      double max_ratio;
      double raw_ratio;
    };
    auto res = run_replicates<Out>(spec.replicates, spec.workers, [&](std::size_t rep) {
      auto env = factory.make(Rng(seed, rep, Rng::kEnvironment));
      Rng rng(seed, rep, Rng::kDynamics);
      Horizon h;
      h.c0 = spec.c0;
      const SnakeRun run = run_snake(snake_config(n, K1), *env, rng, h);
      const double tau = static_cast<double>(run.record.steps()) / (double(n) * n);
      Out o{0.0, 0.0, 0.0};
      for (double tf : {0.25, 0.5, 1.0}) {
        const double tt = tf * tau;
        const double bound = 5.0 * (K1 + 1.0) / n * std::max(tt, 1.0);
        for (double yf : {0.0, 0.25, 0.5, 0.75, 1.0}) {
          const auto r = occupation_identity_report(run.record, run.ledger, tt, yf * K1);
          o.max_gap = std::max(o.max_gap, r.gap);
          o.max_ratio = std::max(o.max_ratio, r.gap / bound);
        }
      }
      const auto full = occupation_identity_report(run.record, run.ledger, tau, K1);
      o.raw_ratio = full.rhs > 0.0 ? full.lhs_raw / full.rhs : 0.0;
      return o;
    });
    c.failed_replicates += res.failed.size();
    double max_gap = 0.0, max_ratio = 0.0;
    std::vector<double> raw;
    for (const auto& o : res.values) {
      max_gap = std::max(max_gap, o.max_gap);
      max_ratio = std::max(max_ratio, o.max_ratio);
      raw.push_back(o.raw_ratio);
    }
    const double raw_mean = raw.empty() ? 0.0 : mean_se(raw).mean;
    t.rows.push_back({double(n), max_gap, max_ratio, raw_mean});
    c.stats.push_back(check_stat(label("max_gap_over_bound", {{"n", n}}), max_ratio, 0.0, 1.0,
                                 "gap <= 5 (K1 + 1)/n max(t, 1)", "<= 1", max_ratio <= 1.0 && res.failed.empty()));
    c.stats.push_back(info_stat(label("raw_level_sum_over_count", {{"n", n}}), raw_mean, 0.0, 0.5,
                                "upcrossing count is half the occupation density"));
  }
  c.tables.push_back(std::move(t));
  finish(c, timer);
  return c;
}

// ---------------------------------------------------------------------------
// Law equality
// ---------------------------------------------------------------------------

CheckResult check_law_equality(const ExperimentSpec& spec) {
  Timer timer;
  CheckResult c;
  c.name = "law_equality";
  const int n = first_n(spec, spec.environment.n);
  std::vector<std::pair<std::string, EnvironmentConfig>> envs;
  if (spec.param("custom_environment", 0.0) != 0.0) {
    EnvironmentConfig e = spec.environment;
    e.n = n;
    envs.emplace_back("configured", e);
  } else {
    envs.emplace_back("zero", env_config(n, ZeroKernel{}, 0.0));
    envs.emplace_back("constant_g1", env_config(n, ConstantKernel{1.0}, 0.0));
  }
  const double t1 = spec.param("t1", 0.25), t2 = spec.param("t2", 0.5);
  Table tab{"law_equality", {"env", "phi", "t", "snake_mean", "snake_se", "branching_mean", "branching_se", "ks", "p"}, {}};
  std::uint64_t salt = 0;
  for (std::size_t ei = 0; ei < envs.size(); ++ei) {
    for (std::size_t fi = 0; fi < spec.test_functions.size(); ++fi) {
      Theorem1Spec ts;
      ts.snake_environment = envs[ei].second;
      ts.branching_environment = envs[ei].second;
      ts.r = spec.r;
      ts.K1 = spec.K1;
      ts.times = {t1, t2};
      ts.test_function = spec.test_functions[fi];
      ts.replicates = spec.replicates;
      ts.seed = mix(spec.seed, salt++);
      ts.workers = spec.workers;
      const auto rep = theorem1_representation_check(ts);
      c.failed_replicates += rep.failed_replicates;
      for (const auto& row : rep.rows) {
        tab.rows.push_back({double(ei), double(fi), row.t, row.snake_mean, row.snake_se, row.branching_mean,
                            row.branching_se, row.ks_statistic, row.p_value});
        c.stats.push_back(check_stat(envs[ei].first + " phi=" + spec.test_functions[fi] + " t=" + std::to_string(row.t) +
                                         " ks_p_value",
                                     row.p_value, 0.0, 0.01, "snake occupation and forward mass equal in law",
                                     ">= 0.01", row.p_value >= 0.01));
      }
    }
  }
  for (std::size_t ei = 0; ei < envs.size(); ++ei) c.notes.push_back("env " + std::to_string(ei) + " = " + envs[ei].first);
  c.tables.push_back(std::move(tab));
  finish(c, timer);
  return c;
}

// ---------------------------------------------------------------------------
// Functional decomposition
// ---------------------------------------------------------------------------

CheckResult check_decomposition(const ExperimentSpec& spec) {
  Timer timer;
  CheckResult c;
  c.name = "decomposition";
  const double K1 = spec.K1;
  const double t = spec.t;
  FunctionalConfig fc;

  auto sine_env = [](int n) {
    EnvironmentConfig cfg = env_config(n, ZeroKernel{}, 0.0);
    cfg.mode = FieldMode::deterministic;
    cfg.deterministic = deterministic_time_sine();
    return cfg;
  };

  // Reconstruction, martingale mean and bracket at one n.
  {
    const int n = first_n(spec, 50);
    const auto cfg = sine_env(n);
    const EnvironmentFactory factory(cfg);
    const auto steps = static_cast<std::int64_t>(std::llround(t * n * n));
    struct Out {
      double identity;
      double reconstruction;
      double M;
      double bracket;
      double target;
    };
    const std::uint64_t seed = mix(spec.seed, 1);
    auto res = run_replicates<Out>(spec.replicates, spec.workers, [&](std::size_t rep) {
      auto env = factory.make(Rng(seed, rep, Rng::kEnvironment));
      Rng rng(seed, rep, Rng::kDynamics);
      FunctionalRunOptions o;
      o.steps = steps;
      o.check_stride = std::max<std::int64_t>(1, n);
      const FunctionalRun fr = run_functional(snake_config(n, K1), *env, rng, fc, o);
      const LimitTarget lt = limit_target(fr.run.record, fr.run.ledger, *env, steps);
      return Out{fr.series.identity_gap(), fr.max_reconstruction_gap, fr.series.M.back(), fr.series.bracket.back(),
                 lt.integral_exp2B};
    });
    c.failed_replicates += res.failed.size();
    double worst_identity = 0.0, worst_recon = 0.0;
    std::vector<double> Ms, brackets, targets;
    for (const auto& o : res.values) {
      worst_identity = std::max(worst_identity, o.identity);
      worst_recon = std::max(worst_recon, o.reconstruction);
      Ms.push_back(o.M);
      brackets.push_back(o.bracket);
      targets.push_back(o.target);
    }
    const double worst = std::max(worst_identity, worst_recon);
    c.stats.push_back(check_stat("reconstruction_gap", worst, 0.0, 0.0,
                                 "F_n = F_0 + M + A, incremental vs direct F_n", "<= 1e-10", worst <= 1e-10));
    const MeanSe m = mean_se(Ms);
    c.stats.push_back(check_stat("martingale_mean", m.mean, m.se, 0.0, "M has mean zero", "within 4 SE",
                                 std::abs(m.mean) <= 4.0 * m.se));
    const double bm = mean_se(brackets).mean, tm = mean_se(targets).mean;
    c.stats.push_back(check_stat("bracket_vs_integral", bm, 0.0, tm, "int_0^t exp(-2 B) ds along the path",
                                 "within 10%", std::abs(bm - tm) <= 0.1 * std::abs(tm)));
  }

  // Compensator vs the limit's non-martingale terms, across n.
  {
    const auto reps = count_param(spec, "gap_replicates", 200);
    Table tab{"compensator_gap", {"n", "gap_half", "gap_half_se", "gap_literal", "gap_literal_se"}, {}};
    std::vector<double> gaps;
    std::uint64_t salt = 10;
    for (int n : spec.n_list.size() > 1 ? spec.n_list : std::vector<int>{20, 50, 100}) {
      const auto cfg = sine_env(n);
      const EnvironmentFactory factory(cfg);
      const auto steps = static_cast<std::int64_t>(std::llround(t * n * n));
      const std::uint64_t seed = mix(spec.seed, salt++);
      auto res = run_replicates<std::pair<double, double>>(reps, spec.workers, [&](std::size_t rep) {
        auto env = factory.make(Rng(seed, rep, Rng::kEnvironment));
        Rng rng(seed, rep, Rng::kDynamics);
        FunctionalRunOptions o;
        o.steps = steps;
        const FunctionalRun fr = run_functional(snake_config(n, K1), *env, rng, fc, o);
        const LimitTarget lt = limit_target(fr.run.record, fr.run.ledger, *env, steps);
        const double A = fr.series.A.back();
        return std::pair<double, double>{std::abs(A - lt.total(0.5)), std::abs(A - lt.total(1.0))};
      });
      c.failed_replicates += res.failed.size();
      std::vector<double> half, literal;
      for (const auto& [h, l] : res.values) half.push_back(h), literal.push_back(l);
      const MeanSe mh = mean_se(half), ml = mean_se(literal);
      gaps.push_back(mh.mean);
      tab.rows.push_back({double(n), mh.mean, mh.se, ml.mean, ml.se});
      c.stats.push_back(info_stat(label("compensator_gap_half", {{"n", n}}), mh.mean, mh.se));
      c.stats.push_back(info_stat(label("compensator_gap_literal", {{"n", n}}), ml.mean, ml.se));
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < gaps.size(); ++i) decreasing = decreasing && gaps[i] < gaps[i - 1];
    c.stats.push_back(check_stat("compensator_gap_decreasing", decreasing ? 1.0 : 0.0, 0.0, 1.0,
                                 "E|A_t - limit terms| with drift coefficient 1/2", "strictly decreasing in n",
                                 decreasing));
    c.tables.push_back(std::move(tab));
  }

  // B = 0: Tanaka-type quadratic variation.
  {
    const int n = first_n(spec, 50);
    const auto cfg = env_config(n, ZeroKernel{}, 0.0);
    const EnvironmentFactory factory(cfg);
    const auto reps = count_param(spec, "tanaka_replicates", 200);
    const auto steps = static_cast<std::int64_t>(std::llround(t * n * n));
    const std::uint64_t seed = mix(spec.seed, 99);
    auto res = run_replicates<double>(reps, spec.workers, [&](std::size_t rep) {
      auto env = factory.make(Rng(seed, rep, Rng::kEnvironment));
      Rng rng(seed, rep, Rng::kDynamics);
      Horizon h;
      h.steps = steps;
      const SnakeRun run = run_snake(snake_config(n, K1), *env, rng, h);
      return tanaka_quadratic_variation(run.record, steps);
    });
    c.failed_replicates += res.failed.size();
    const MeanSe q = mean_se(res.values);
    c.stats.push_back(check_stat("tanaka_quadratic_variation", q.mean, q.se, t, "realized QV of Y - l^0 + l^K1",
                                 "within 10% of t", std::abs(q.mean - t) <= 0.1 * t));
  }
  finish(c, timer);
  return c;
}

// ---------------------------------------------------------------------------
// Appendix
// ---------------------------------------------------------------------------

CheckResult check_appendix(const ExperimentSpec& spec) {
  Timer timer;
  CheckResult c;
  c.name = "appendix";
  const double K1 = spec.K1;

  // Exit time of Brownian motion from (-1, 1).
  {
    const auto et = exit_time_stats(spec.replicates, mix(spec.seed, 1), spec.param("theta_dt", 1e-4), spec.workers);
    c.stats.push_back(check_stat("exit_time_mean", et.mean, et.stderr_, 1.0, "E theta = 1", "within 3 SE",
                                 std::abs(et.mean - 1.0) <= 3.0 * et.stderr_));
  }

  // Clock convergence of the embedding.
  {
    SigmaReportOptions so;
    so.K1 = K1;
    so.embedding.epsilon = spec.param("sigma_epsilon", 0.01);
    const std::vector<int> sigma_ns = spec.n_list.size() > 1 ? spec.n_list : std::vector<int>{10, 30, 100};
    const auto rows = sigma_convergence_report(sigma_ns, spec.t, count_param(spec, "sigma_replicates", 100),
                                               mix(spec.seed, 2), so, spec.workers);
    Table tab{"sigma_deviation", {"n", "median", "mean", "se"}, {}};
    bool decreasing = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      tab.rows.push_back({double(rows[i].n), rows[i].median, rows[i].mean, rows[i].stderr_});
      c.stats.push_back(info_stat(label("sigma_deviation_median", {{"n", rows[i].n}}), rows[i].median));
      if (i > 0) decreasing = decreasing && rows[i].median < rows[i - 1].median;
    }
    c.stats.push_back(check_stat("sigma_deviation_decreasing", decreasing ? 1.0 : 0.0, 0.0, 1.0,
                                 "sup_s |sigma_{floor(n^2 s)} - s| shrinks with n", "strictly decreasing medians",
                                 decreasing));
    c.tables.push_back(std::move(tab));
  }

  // Embedded vs directly sampled walk in one frozen environment.
  {
    const auto reps = count_param(spec, "walk_replicates", 2000);
    EmbeddingOptions eo;
    eo.epsilon = spec.param("walk_epsilon", 0.01);
    Table tab{"embedded_vs_direct", {"n", "ks", "p", "embedded_mean", "direct_mean"}, {}};
    std::uint64_t salt = 30;
    for (int n : std::vector<int>{10, 30}) {
      const std::uint64_t seed = mix(spec.seed, salt++);
      const int top = static_cast<int>(std::lround(n * K1));
      const double bound = 0.5 * std::sqrt(static_cast<double>(n));
      Rng env_rng(seed, 0, Rng::kEnvironment);
      const auto xi = sample_site_environment(std::max(top - 1, 0), 1.0, bound, env_rng);
      const PotentialProfile profile = build_potential(xi, n, K1, bound);
      const auto m = static_cast<std::int64_t>(n) * n;
      auto emb = run_replicates<double>(reps, spec.workers, [&](std::size_t rep) {
        Rng rng(seed, rep, Rng::kDynamics);
        return static_cast<double>(embed_rwre(profile, m, rng, eo).walk.back());
      });
      auto dir = run_replicates<double>(reps, spec.workers, [&](std::size_t rep) {
        Rng rng(seed, rep, Rng::kAuxiliary);
        return static_cast<double>(direct_rwre(profile, m, rng).back());
      });
      c.failed_replicates += emb.failed.size() + dir.failed.size();
      const KsResult ks = ks_two_sample(emb.values, dir.values, std::min<std::size_t>(50, reps));
      tab.rows.push_back({double(n), ks.statistic, ks.p_value, mean_se(emb.values).mean, mean_se(dir.values).mean});
      c.stats.push_back(check_stat(label("embedded_vs_direct_p_value", {{"n", n}}), ks.p_value, 0.0, 0.01,
                                   "embedded walk has the random-walk law in the frozen environment", ">= 0.01",
                                   ks.p_value >= 0.01));
    }
    c.tables.push_back(std::move(tab));
  }

  // Snake contour vs the reflected embedded walk, annealed.
  {
    const int n = first_n(spec, 100);
    const int top = static_cast<int>(std::lround(n * K1));
    const double bound = 0.5 * std::sqrt(static_cast<double>(n));
    const auto m = static_cast<std::int64_t>(n) * n;
    EmbeddingOptions eo;
    eo.epsilon = spec.param("cross_epsilon", 0.01);
    const auto cfg = env_config(n, ConstantKernel{1.0}, 0.0);
    const EnvironmentFactory factory(cfg);
    const std::uint64_t seed_s = mix(spec.seed, 40), seed_w = mix(spec.seed, 41);
    auto snake_vals = run_replicates<double>(spec.replicates, spec.workers, [&](std::size_t rep) {
      auto env = factory.make(Rng(seed_s, rep, Rng::kEnvironment));
      Rng rng(seed_s, rep, Rng::kDynamics);
      Horizon h;
      h.steps = m;
      const SnakeRun run = run_snake(snake_config(n, K1), *env, rng, h);
      return static_cast<double>(run.record.levels.back()) / n;
    });
    auto walk_vals = run_replicates<double>(spec.replicates, spec.workers, [&](std::size_t rep) {
      Rng env_rng(seed_w, rep, Rng::kEnvironment);
      Rng rng(seed_w, rep, Rng::kDynamics);
      const auto xi = sample_site_environment(std::max(top - 1, 0), 1.0, bound, env_rng);
      const PotentialProfile profile = build_potential(xi, n, K1, bound);
      const auto i = embed_rwre(profile, m, rng, eo).walk.back();
      return tent(static_cast<double>(i), top) / n;
    });
    c.failed_replicates += snake_vals.failed.size() + walk_vals.failed.size();
    const KsResult ks = ks_two_sample(snake_vals.values, walk_vals.values,
                                      std::min<std::size_t>(50, std::min(snake_vals.values.size(), walk_vals.values.size())));
    c.stats.push_back(check_stat("snake_vs_reflected_walk_ks", ks.statistic, 0.0, 0.1,
                                 "contour at t = 1 vs tent-reflected embedded walk", "<= 0.1", ks.statistic <= 0.1));
    c.stats.push_back(info_stat("snake_vs_reflected_walk_p", ks.p_value));
    Table tab{"cross_module", {"snake_mean", "walk_mean", "ks", "p"},
              {{mean_se(snake_vals.values).mean, mean_se(walk_vals.values).mean, ks.statistic, ks.p_value}}};
    c.tables.push_back(std::move(tab));
  }
  finish(c, timer);
  return c;
}

}  // namespace snakesim
