#include "snakesim/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "snakesim/branching.hpp"
#include "snakesim/errors.hpp"
#include "snakesim/experiments.hpp"
#include "snakesim/io.hpp"
#include "snakesim/snake.hpp"
#include "snakesim/stats.hpp"

namespace snakesim {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::informational: return "informational";
  }
  return "informational";
}

SummaryStats check_stat(std::string name, double estimate, double se, double target, std::string provenance,
                        std::string tolerance, bool ok) {
  SummaryStats s;
  s.name = std::move(name);
  s.estimate = estimate;
  s.stderr_ = std::max(0.0, se);
  s.target = target;
  s.provenance = std::move(provenance);
  s.tolerance = std::move(tolerance);
  s.verdict = ok ? Verdict::pass : Verdict::fail;
  return s;
}

SummaryStats info_stat(std::string name, double estimate, double se, double target, std::string provenance) {
  SummaryStats s;
  s.name = std::move(name);
  s.estimate = estimate;
  s.stderr_ = std::max(0.0, se);
  s.target = target;
  s.provenance = std::move(provenance);
  s.tolerance = "informational";
  s.verdict = Verdict::informational;
  return s;
}

bool CheckResult::passed() const {
  return std::none_of(stats.begin(), stats.end(), [](const SummaryStats& s) { return s.verdict == Verdict::fail; });
}

bool ResultBundle::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed(); });
}

std::size_t ResultBundle::failed_replicates() const {
  std::size_t f = 0;
  for (const auto& c : checks) f += c.failed_replicates;
  return f;
}

// --- ExperimentSpec -------------------------------------------------------------

const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids{"survival",   "branching-mp", "snake",    "reversal",
                                            "occupation", "functional",   "brox",     "theorem1"};
  return ids;
}

void ExperimentSpec::validate() const {
  const auto& ids = experiment_ids();
  if (std::find(ids.begin(), ids.end(), id) == ids.end())
    throw ValidationError("experiment.id", "unknown experiment '" + id + "'");
  if (replicates < 1) throw ValidationError("experiment.replicates", "must be >= 1");
  for (int n : n_list)
    if (n < 1) throw ValidationError("experiment.n", "every n must be >= 1");
  if (environment.n < 1) throw ValidationError("environment.n", "must be >= 1");
  if (environment.dim < 1) throw ValidationError("environment.dim", "must be >= 1");
  if (!(delta >= 0.0)) throw ValidationError("horizon.delta", "must be >= 0");
  if (!(t >= 0.0)) throw ValidationError("horizon.t", "must be >= 0");
  if (!(c0 > 0.0)) throw ValidationError("horizon.c0", "must be > 0");
  if (!(r > 0.0)) throw ValidationError("horizon.r", "must be > 0");
  if (!(K1 > 0.0)) throw ValidationError("horizon.K1", "must be > 0");
  for (const auto& f : test_functions) {
    try {
      (void)TestFunctionSpec::parse(f);
    } catch (const UnsupportedError& e) {
      throw ValidationError("test_functions.phi", e.what());
    }
  }
}

double ExperimentSpec::param(const std::string& key, double fallback) const {
  const auto it = params.find(key);
  if (it == params.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ValidationError("params." + key, "not a number: '" + it->second + "'");
  }
}

ResultBundle run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto start = std::chrono::steady_clock::now();
  ResultBundle bundle;
  bundle.spec = spec;
  bundle.checks = run_checks(spec);
  bundle.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!spec.out_dir.empty()) write_bundle(bundle, spec.out_dir);
  return bundle;
}

// --- Test functions -------------------------------------------------------------

double TestFunctionSpec::value(std::span<const double> x) const {
  switch (kind) {
    case Kind::constant: return c;
    case Kind::cosine: return std::cos(x[0]);
    case Kind::bump: {
      double r2 = 0.0;
      for (double v : x) r2 += (v - center) * (v - center);
      return std::exp(-r2 / (2.0 * width * width));
    }
  }
  return 0.0;
}

double TestFunctionSpec::laplacian(std::span<const double> x) const {
  switch (kind) {
    case Kind::constant: return 0.0;
    case Kind::cosine: return -std::cos(x[0]);
    case Kind::bump: {
      double r2 = 0.0;
      for (double v : x) r2 += (v - center) * (v - center);
      const double s2 = width * width;
      return std::exp(-r2 / (2.0 * s2)) * (r2 / (s2 * s2) - static_cast<double>(x.size()) / s2);
    }
  }
  return 0.0;
}

std::string TestFunctionSpec::name() const {
  switch (kind) {
    case Kind::constant: return c == 1.0 ? "1" : "const:" + std::to_string(c);
    case Kind::cosine: return "cos";
    case Kind::bump: return "bump:" + std::to_string(center) + ":" + std::to_string(width);
  }
  return "?";
}

TestFunctionSpec TestFunctionSpec::parse(const std::string& text) {
  TestFunctionSpec f;
  auto number = [&](const std::string& s) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw UnsupportedError("unsupported test function '" + text + "'");
  };
  if (text == "1") return f;
  if (text == "cos") {
    f.kind = Kind::cosine;
    return f;
  }
  if (text.rfind("const:", 0) == 0) {
    f.c = number(text.substr(6));
    return f;
  }
  if (text.rfind("bump:", 0) == 0) {
    const std::string rest = text.substr(5);
    const auto colon = rest.find(':');
    if (colon == std::string::npos) throw UnsupportedError("bump needs center and width: '" + text + "'");
    f.kind = Kind::bump;
    f.center = number(rest.substr(0, colon));
    f.width = number(rest.substr(colon + 1));
    if (!(f.width > 0.0)) throw UnsupportedError("bump width must be positive");
    return f;
  }
  throw UnsupportedError("unsupported test function '" + text + "'");
}

// --- MP residuals ---------------------------------------------------------------

MpSeries mp_series(const std::vector<std::vector<double>>& atoms, int dim, double mass,
                   const TestFunctionSpec& phi, const CovarianceKernel& kernel, Rng& rng, std::size_t pair_cap) {
  if (dim < 1) throw DomainError("dimension must be >= 1");
  if (pair_cap < 2) throw ConfigError("pair cap must be >= 2");
  MpSeries s;
  const std::size_t T = atoms.size();
  s.x_phi.resize(T);
  s.x_lap.resize(T);
  s.x_phi2.resize(T);
  s.pair.resize(T);
  const auto d = static_cast<std::size_t>(dim);
  const bool zero = std::holds_alternative<ZeroKernel>(kernel);
  const bool uniform = is_spatially_uniform(kernel);
  std::vector<double> values;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < T; ++i) {
    const auto& a = atoms[i];
    if (a.size() % d != 0) throw DomainError("atom array length is not a multiple of dim");
    const std::size_t P = a.size() / d;
    values.resize(P);
    double sp = 0.0, sl = 0.0, s2 = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
      const std::span<const double> x(a.data() + p * d, d);
      const double v = phi.value(x);
      values[p] = v;
      sp += v;
      sl += phi.laplacian(x);
      s2 += v * v;
    }
    s.x_phi[i] = mass * sp;
    s.x_lap[i] = mass * sl;
    s.x_phi2[i] = mass * s2;
    if (zero || P == 0) {
      s.pair[i] = 0.0;
    } else if (uniform) {
      s.pair[i] = kernel_sup_diagonal(kernel) * s.x_phi[i] * s.x_phi[i];
    } else {
      auto pt = [&](std::size_t p) { return std::span<const double>(a.data() + p * d, d); };
      double diag = 0.0;
      for (std::size_t p = 0; p < P; ++p) diag += covariance(kernel, pt(p), pt(p)) * values[p] * values[p];
      double off = 0.0;
      if (P <= pair_cap) {
        for (std::size_t p = 0; p < P; ++p)
          for (std::size_t q = p + 1; q < P; ++q) off += 2.0 * covariance(kernel, pt(p), pt(q)) * values[p] * values[q];
      } else {
        // Partial Fisher-Yates: the first pair_cap entries are a uniform subsample.
        idx.resize(P);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t j = 0; j < pair_cap; ++j) {
          const auto k = j + static_cast<std::size_t>(rng.uniform() * static_cast<double>(P - j));
          std::swap(idx[j], idx[std::min(k, P - 1)]);
        }
        double sub = 0.0;
        for (std::size_t p = 0; p < pair_cap; ++p)
          for (std::size_t q = p + 1; q < pair_cap; ++q)
            sub += 2.0 * covariance(kernel, pt(idx[p]), pt(idx[q])) * values[idx[p]] * values[idx[q]];
        const double c = static_cast<double>(pair_cap);
        off = sub * (static_cast<double>(P) * (P - 1.0)) / (c * (c - 1.0));
      }
      s.pair[i] = mass * mass * (diag + off);
    }
  }
  return s;
}

MartingaleTestReport mp_residual_test(std::span<const double> times, std::span<const MpSeries> series,
                                      const MpOptions& o) {
  const std::size_t T = times.size();
  if (T == 0) throw DomainError("empty time grid");
  for (std::size_t i = 1; i < T; ++i)
    if (!(times[i] > times[i - 1])) throw DomainError("time grid must be increasing");
  for (const auto& s : series)
    if (s.x_phi.size() != T || s.x_lap.size() != T || s.x_phi2.size() != T || s.pair.size() != T)
      throw DomainError("trajectory length differs from the time grid");

  const double a = o.nu + 0.5 * o.g_bar;
  MartingaleTestReport rep;
  rep.half_factor = o.half_factor;
  rep.times.assign(times.begin(), times.end());
  std::vector<Accumulator> per_time(T);
  Accumulator real_acc, target_acc, diff_acc;
  std::vector<double> inc_a, inc_b;

  std::vector<double> M(T);
  for (const auto& s : series) {
    auto drift = [&](std::size_t i) {
      return o.half_factor ? 0.5 * (s.x_lap[i] + a * s.x_phi[i]) : 0.5 * s.x_lap[i] + a * s.x_phi[i];
    };
    double integral = 0.0, qv = 0.0, target = 0.0;
    M[0] = 0.0;
    for (std::size_t i = 1; i < T; ++i) {
      const double h = times[i] - times[i - 1];
      integral += 0.5 * h * (drift(i - 1) + drift(i));
      target += 0.5 * h * (2.0 * s.x_phi2[i - 1] + s.pair[i - 1] + 2.0 * s.x_phi2[i] + s.pair[i]);
      M[i] = s.x_phi[i] - s.x_phi[0] - integral;
      const double dm = M[i] - M[i - 1];
      qv += dm * dm;
      if (i >= 2) {
        inc_a.push_back(M[i - 1] - M[i - 2]);
        inc_b.push_back(dm);
      }
    }
    for (std::size_t i = 0; i < T; ++i) per_time[i].add(M[i]);
    real_acc.add(qv);
    target_acc.add(target);
    diff_acc.add(qv - target);
  }

  rep.mean.resize(T);
  rep.se.resize(T);
  for (std::size_t i = 0; i < T; ++i) {
    const MeanSe m = per_time[i].summary();
    rep.mean[i] = m.mean;
    rep.se[i] = m.se;
    double z = 0.0;
    if (m.se > 0.0) {
      z = std::abs(m.mean) / m.se;
    } else if (std::abs(m.mean) > 1e-12) {
      z = std::numeric_limits<double>::infinity();
    }
    rep.max_abs_z = std::max(rep.max_abs_z, z);
  }
  rep.zero_mean_ok = rep.max_abs_z <= o.zero_mean_z;

  rep.lag1_autocorrelation = correlation(inc_a, inc_b);
  rep.autocorrelation_se = inc_a.empty() ? 0.0 : 1.0 / std::sqrt(static_cast<double>(inc_a.size()));
  rep.orthogonal_ok = std::abs(rep.lag1_autocorrelation) <= o.zero_mean_z * rep.autocorrelation_se ||
                      inc_a.empty();

  rep.qv_realized = real_acc.summary().mean;
  rep.qv_target = target_acc.summary().mean;
  rep.qv_difference_se = diff_acc.summary().se;
  rep.qv_ok = std::abs(rep.qv_realized - rep.qv_target) <=
              o.qv_relative * std::abs(rep.qv_target) + o.qv_z * rep.qv_difference_se;
  return rep;
}

MpAdjudication mp_adjudicate(std::span<const double> times, std::span<const MpSeries> series, MpOptions options) {
  MpAdjudication adj;
  options.half_factor = true;
  adj.with_half = mp_residual_test(times, series, options);
  options.half_factor = false;
  adj.without_half = mp_residual_test(times, series, options);
  if (!series.empty() && times.size() > 1) {
    double m0 = 0.0, m1 = 0.0;
    for (const auto& s : series) {
      m0 += s.x_phi.front();
      m1 += s.x_phi.back();
    }
    if (m0 > 0.0 && m1 > 0.0) adj.growth_rate_measured = std::log(m1 / m0) / (times.back() - times.front());
  }
  const bool a = adj.with_half.zero_mean_ok, b = adj.without_half.zero_mean_ok;
  adj.consistent = a && b ? "both" : a ? "with_half" : b ? "without_half" : "neither";
  return adj;
}

// --- Snake vs forward system ----------------------------------------------------

Theorem1Report theorem1_representation_check(const Theorem1Spec& spec) {
  if (!spec.snake_environment.same_law(spec.branching_environment))
    throw ValidationError("environment", "snake and branching environment laws differ");
  if (!(spec.r > 0.0)) throw ValidationError("horizon.r", "must be > 0");
  if (spec.replicates < 1) throw ValidationError("experiment.replicates", "must be >= 1");
  for (double t : spec.times)
    if (t < 0.0 || t > spec.K1) throw PreconditionError("occupation times must lie in [0, K1]");
  const TestFunctionSpec phi = TestFunctionSpec::parse(spec.test_function);

  const EnvironmentConfig& cfg = spec.snake_environment;
  const int n = cfg.n;
  const int dim = cfg.dim;
  const std::vector<double> root(static_cast<std::size_t>(dim), 0.0);
  const auto initial = static_cast<std::size_t>(std::floor(spec.r * n + 1e-9));
  const bool constant_phi = phi.kind == TestFunctionSpec::Kind::constant;
  const bool track = !constant_phi || !is_spatially_uniform(cfg.kernel);
  const EnvironmentFactory factory(cfg);
  const std::uint64_t branching_seed = spec.seed ^ 0x9E3779B97F4A7C15ULL;
  const TestFunction f = [&phi](std::span<const double> x) { return phi.value(x); };

  std::vector<int> gens;
  for (double t : spec.times) gens.push_back(static_cast<int>(std::floor(t * n + 1e-9)));
  const int last_gen = gens.empty() ? 0 : *std::max_element(gens.begin(), gens.end());

  using Pair = std::pair<std::vector<double>, std::vector<double>>;
  auto results = run_replicates<Pair>(spec.replicates, spec.workers, [&](std::size_t rep) {
    Pair out;
    {
      auto env = factory.make(Rng(spec.seed, rep, Rng::kEnvironment));
      Rng rng(spec.seed, rep, Rng::kDynamics);
      SnakeConfig sc;
      sc.n = n;
      sc.K1 = spec.K1;
      sc.root = root;
      Horizon h;
      h.c0 = spec.r;
      const SnakeRun run = run_snake(sc, *env, rng, h);
      if (run.record.truncated) throw ResolutionError("snake run truncated before the stopping time");
      for (double t : spec.times) out.first.push_back(occupation_measure(run.record, run.ledger, 0.0, spec.r, 0.0, t, f));
    }
    {
      auto env = factory.make(Rng(branching_seed, rep, Rng::kEnvironment));
      Rng rng(branching_seed, rep, Rng::kDynamics);
      PopulationState pop = initial_population(n, dim, initial, root, track);
      std::vector<double> value_at(static_cast<std::size_t>(last_gen) + 1, 0.0);
      for (int k = 0; k <= last_gen; ++k) {
        if (k > 0) step_population(pop, *env, rng);
        if (constant_phi) {
          value_at[static_cast<std::size_t>(k)] = phi.c * pop.mass();
        } else {
          double s = 0.0;
          for (std::size_t p = 0; p < pop.particle_count; ++p) s += phi.value(pop.position(p));
          value_at[static_cast<std::size_t>(k)] = s / n;
        }
      }
      for (int g : gens) out.second.push_back(value_at[static_cast<std::size_t>(g)]);
    }
    return out;
  });

  Theorem1Report report;
  report.failed_replicates = results.failed.size();
  for (std::size_t j = 0; j < spec.times.size(); ++j) {
    std::vector<double> a, b;
    a.reserve(results.values.size());
    b.reserve(results.values.size());
    for (const auto& v : results.values) {
      a.push_back(v.first[j]);
      b.push_back(v.second[j]);
    }
    Theorem1Row row;
    row.t = spec.times[j];
    const MeanSe ma = mean_se(a), mb = mean_se(b);
    row.snake_mean = ma.mean;
    row.snake_se = ma.se;
    row.branching_mean = mb.mean;
    row.branching_se = mb.se;
    const KsResult ks = ks_two_sample(a, b, std::clamp<std::size_t>(a.size(), 1, 50));
    row.ks_statistic = ks.statistic;
    row.p_value = ks.p_value;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace snakesim
