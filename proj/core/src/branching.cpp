#include "snakesim/branching.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "snakesim/errors.hpp"
#include "snakesim/parallel.hpp"
#include "snakesim/quadrature.hpp"

namespace snakesim {

PopulationState initial_population(int n, int dim, std::size_t count, std::span<const double> x,
                                   bool track_positions) {
  if (n <= 0) throw ConfigError("n must be positive");
  PopulationState s;
  s.n = n;
  s.dim = dim;
  s.particle_count = count;
  s.track_positions = track_positions;
  if (track_positions) {
    s.positions.reserve(count * dim);
    for (std::size_t i = 0; i < count; ++i)
      for (int a = 0; a < dim; ++a) s.positions.push_back(x.empty() ? 0.0 : x[a]);
  }
  s.mass_history.push_back(s.mass());
  return s;
}

std::int64_t offspring_count(double xi, int n, Rng& rng) {
  return rng.geometric(branch_probabilities(xi, n).down);
}

double offspring_mean(double xi, int n) {
  const auto p = branch_probabilities(xi, n);
  return p.up / p.down;
}

void step_population(PopulationState& state, Environment& env, Rng& rng) {
  const int next = state.k + 1;
  if (state.particle_count == 0) {
    state.k = next;
    state.mass_history.push_back(0.0);
    return;
  }
  if (!state.track_positions) {
    // Uniform slices: the generation's total offspring is negative binomial.
    const std::vector<double> origin(static_cast<std::size_t>(state.dim), 0.0);
    const auto p = branch_probabilities(env.xi(next, origin), state.n);
    std::negative_binomial_distribution<std::int64_t> nb(
        static_cast<std::int64_t>(state.particle_count), p.down);
    state.particle_count = static_cast<std::size_t>(nb(rng.engine()));
  } else {
    const double sd = 1.0 / std::sqrt(static_cast<double>(state.n));
    const int d = state.dim;
    std::vector<double> children;
    children.reserve(state.positions.size() + 4 * d);
    for (std::size_t i = 0; i < state.particle_count; ++i) {
      double* pos = state.positions.data() + i * d;
      for (int a = 0; a < d; ++a) pos[a] += sd * rng.normal();
      const std::int64_t kids = offspring_count(env.xi(next, {pos, static_cast<std::size_t>(d)}), state.n, rng);
      for (std::int64_t c = 0; c < kids; ++c) children.insert(children.end(), pos, pos + d);
    }
    state.positions = std::move(children);
    state.particle_count = state.positions.size() / static_cast<std::size_t>(d);
  }
  state.k = next;
  state.mass_history.push_back(state.mass());
}

// --- Survival oracle ----------------------------------------------------------

SurvivalOracleResult exact_survival_geometric(const SurvivalOracleParams& params) {
  const double n = params.n;
  if (params.n <= 0) throw DomainError("n must be positive");
  if (!(std::abs(params.b_n) < 2.0 * n)) throw DomainError("|b_n| must be below 2n");
  if (params.k < 0) throw DomainError("negative horizon");
  SurvivalOracleResult r;
  if (params.k == 0) return r;

  // f(s) = p / (1 - (1 - p) s), p = P(N = 0), iterated in quad precision on
  // u = 1 - s: u' = 1 - f(1 - u) = (1 - p) u / (p + (1 - p) u). This form never
  // subtracts nearly equal numbers, so tiny survival probabilities keep full precision.
  using quad = __float128;
  const quad p = quad(0.5) - quad(params.b_n) / (quad(4) * quad(n));
  const quad q = quad(1) - p;
  quad u = 1;
  for (long i = 0; i < params.k; ++i) u = q * u / (p + q * u);
  r.iterated = static_cast<double>(u);

  // survival = 1 / (k z_k) = 1 / (d^k + (1 - d^k)/(1 - d)), d = (2n - b)/(2n + b).
  const double b = params.b_n;
  const double k = static_cast<double>(params.k);
  if (b == 0.0) {
    r.closed_form = 1.0 / (1.0 + k);
  } else {
    const double one_minus_d = 2.0 * b / (2.0 * n + b);
    const double log_d = std::log1p(-one_minus_d);
    const double dk = std::exp(k * log_d);
    const double one_minus_dk = -std::expm1(k * log_d);
    r.closed_form = 1.0 / (dk + one_minus_dk / one_minus_d);
  }
  return r;
}

std::vector<double> exact_survival_curve(double b_n, int n, long k_max) {
  if (n <= 0) throw DomainError("n must be positive");
  if (!(std::abs(b_n) < 2.0 * n)) throw DomainError("|b_n| must be below 2n");
  if (k_max < 0) throw DomainError("negative horizon");
  using quad = __float128;
  const quad p = quad(0.5) - quad(b_n) / (quad(4) * quad(n));
  const quad q = quad(1) - p;
  std::vector<double> out(static_cast<std::size_t>(k_max) + 1);
  quad u = 1;
  out[0] = 1.0;
  for (long i = 1; i <= k_max; ++i) {
    u = q * u / (p + q * u);
    out[static_cast<std::size_t>(i)] = static_cast<double>(u);
  }
  return out;
}

double survival_rate_h(double b, double delta) {
  if (!(delta > 0.0)) throw DomainError("delta must be positive");
  if (b == 0.0) return 1.0 / delta;
  return b / (-std::expm1(-b * delta));
}

double GrowthBound::value() const { return std::exp(b * delta); }

SurvivalEstimate estimate_survival_mc(const EnvironmentConfig& config, double delta,
                                      std::size_t replicates, std::uint64_t seed, unsigned workers) {
  if (replicates < 100) throw ConfigError("survival estimate needs at least 100 replicates");
  if (delta < 0.0) throw DomainError("negative horizon");
  const long horizon = static_cast<long>(std::floor(config.n * delta + 1e-9));
  const EnvironmentFactory factory(config);
  const bool count_only = config.mode == FieldMode::random && is_spatially_uniform(config.kernel);
  const std::vector<double> origin(static_cast<std::size_t>(config.dim), 0.0);

  auto alive = parallel_map<char>(replicates, workers, [&](std::size_t rep) -> char {
    Rng dyn(seed, rep, Rng::kDynamics);
    auto env = factory.make(Rng(seed, rep, Rng::kEnvironment));
    auto pop = initial_population(config.n, config.dim, 1, origin, !count_only);
    for (long k = 0; k < horizon && !pop.extinct(); ++k) step_population(pop, *env, dyn);
    return pop.extinct() ? 0 : 1;
  });

  SurvivalEstimate e;
  e.replicates = replicates;
  e.survivors = static_cast<std::size_t>(std::count(alive.begin(), alive.end(), 1));
  e.estimate = static_cast<double>(e.survivors) / static_cast<double>(replicates);
  e.stderr_ = std::sqrt(e.estimate * (1.0 - e.estimate) / static_cast<double>(replicates));
  return e;
}

// --- Mass moments -------------------------------------------------------------

double GaussianBump::operator()(double x) const {
  const double u = x - center;
  return std::exp(-u * u / (2.0 * width * width));
}

double GaussianBump::heat(double t, double x) const {
  const double v = width * width + t;
  const double u = x - center;
  return width / std::sqrt(v) * std::exp(-u * u / (2.0 * v));
}

double expected_offspring_factor(const EnvironmentConfig& config) {
  const double mean = config.nu / config.sqrt_n();
  const double bound = config.xi_bound();
  auto ratio = [&](double xi) {
    xi = std::clamp(xi, -bound, bound);
    return offspring_mean(xi, config.n);
  };
  const double var = kernel_sup_diagonal(config.kernel);
  if (var == 0.0) return ratio(mean);
  return expect_normal(ratio, mean, std::sqrt(var), 64);
}

MassMomentReport mass_moment_report(const EnvironmentConfig& config, double delta,
                                    std::size_t replicates, std::uint64_t seed,
                                    const MassMomentOptions& options, unsigned workers) {
  if (replicates < 100) throw ConfigError("mass report needs at least 100 replicates");
  if (config.dim != 1) throw UnsupportedError("semigroup check is one-dimensional");
  const long horizon = static_cast<long>(std::floor(config.n * delta + 1e-9));
  const EnvironmentFactory factory(config);
  const double x0_mass = static_cast<double>(options.initial_particles) / config.n;
  const double b = config.growth_rate();

  MassMomentReport rep;
  rep.initial_mass = x0_mass;
  rep.generations = horizon;
  rep.levels = options.levels;
  if (rep.levels.empty())
    for (double f : {1.25, 1.5, 2.0, 3.0, 5.0}) rep.levels.push_back(f * x0_mass);

  struct Sample {
    double final_mass;
    double sup_mass;
    double bump;
  };
  const std::vector<double> x0{options.x0};
  auto samples = parallel_map<Sample>(replicates, workers, [&](std::size_t r) {
    Rng dyn(seed, r, Rng::kDynamics);
    auto env = factory.make(Rng(seed, r, Rng::kEnvironment));
    auto pop = initial_population(config.n, 1, options.initial_particles, x0, true);
    double sup = pop.mass();
    for (long k = 0; k < horizon && !pop.extinct(); ++k) {
      step_population(pop, *env, dyn);
      sup = std::max(sup, pop.mass());
    }
    double bump = 0.0;
    for (std::size_t i = 0; i < pop.particle_count; ++i) bump += options.bump(pop.positions[i]);
    return Sample{pop.mass(), sup, bump / config.n};
  });

  const double R = static_cast<double>(replicates);
  auto mean_se = [&](auto get) {
    double s = 0.0, s2 = 0.0;
    for (const auto& x : samples) {
      const double v = get(x);
      s += v;
      s2 += v * v;
    }
    const double m = s / R;
    const double var = std::max(0.0, (s2 - R * m * m) / (R - 1.0));
    return std::pair{m, std::sqrt(var / R)};
  };
  std::tie(rep.mean_mass, rep.mean_mass_se) = mean_se([](const Sample& s) { return s.final_mass; });
  const double per_step = std::pow(1.0 + b / config.n, static_cast<double>(horizon));
  rep.mean_bound = x0_mass * per_step;
  rep.exact_mean = x0_mass * std::pow(expected_offspring_factor(config), static_cast<double>(horizon));
  rep.mean_ok = rep.mean_mass <= rep.mean_bound + options.se_multiplier * rep.mean_mass_se;

  const double tail_factor = std::max(std::exp(b * delta), 1.0);
  rep.tail_ok = true;
  for (double a : rep.levels) {
    double hits = 0.0;
    for (const auto& s : samples) hits += s.sup_mass >= a ? 1.0 : 0.0;
    const double p = hits / R;
    const double se = std::sqrt(p * (1.0 - p) / R);
    const double bound = x0_mass * tail_factor / a;
    rep.tail_prob.push_back(p);
    rep.tail_se.push_back(se);
    rep.tail_bound.push_back(bound);
    if (p > bound + options.se_multiplier * se) rep.tail_ok = false;
  }

  std::tie(rep.bump_mean, rep.bump_se) = mean_se([](const Sample& s) { return s.bump; });
  const double t = static_cast<double>(horizon) / config.n;
  rep.bump_exact = x0_mass * options.bump.heat(t, options.x0);
  rep.bump_rhs = per_step * rep.bump_exact;
  rep.semigroup_ok = rep.bump_mean <= rep.bump_rhs + options.se_multiplier * rep.bump_se;
  rep.growth_rate_measured = t > 0.0 && rep.mean_mass > 0.0 ? std::log(rep.mean_mass / x0_mass) / t : 0.0;
  return rep;
}

}  // namespace snakesim
