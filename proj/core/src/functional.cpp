#include "snakesim/functional.hpp"

#include <algorithm>
#include <cmath>

#include "snakesim/errors.hpp"

namespace snakesim {

double functional_value(const Snake& snake, Environment& env, const FunctionalConfig& config) {
  const int m = snake.level();
  double s = 0.0;
  for (int l = std::max(config.sum_start, 0); l <= m - 1; ++l)
    s += std::exp(-env.cumulative(l, snake.point(l + 1)));
  return s / snake.n();
}

CompensatorEvaluator::CompensatorEvaluator(int n, int dim, const FunctionalConfig& config)
    : n_(n),
      config_(config),
      cubature_(gaussian_cubature(config.quadrature_order, dim, 1.0 / std::sqrt(static_cast<double>(n)))) {
  if (config.quadrature_order < 2) throw ConfigError("quadrature order must be >= 2");
}

double CompensatorEvaluator::term(int l, std::span<const double> y, Environment& env) const {
  return std::exp(-env.cumulative(l, y)) / n_;
}

ConditionalMoments CompensatorEvaluator::operator()(const Snake& snake, Environment& env) const {
  const int m = snake.level();
  const double p_up = snake.up_probability(env);
  const double p_down = 1.0 - p_up;
  const auto tip = snake.tip();
  const int d = snake.dim();

  double up_mean = 0.0, up_sq = 0.0;
  if (p_up > 0.0 && m >= config_.sum_start) {
    std::vector<double> y(static_cast<std::size_t>(d));
    for (std::size_t q = 0; q < cubature_.size(); ++q) {
      for (int a = 0; a < d; ++a) y[a] = tip[a] + cubature_.offsets[q * d + a];
      const double v = term(m, y, env);
      up_mean += cubature_.weights[q] * v;
      up_sq += cubature_.weights[q] * v * v;
    }
  }
  double down = 0.0;
  if (p_down > 0.0 && m - 1 >= config_.sum_start) down = term(m - 1, tip, env);

  ConditionalMoments c;
  c.mean = p_up * up_mean - p_down * down;
  c.second = p_up * up_sq + p_down * down * down;
  return c;
}

ConditionalMoments compensator_increment(const Snake& snake, Environment& env,
                                         const FunctionalConfig& config) {
  return CompensatorEvaluator(snake.n(), snake.dim(), config)(snake, env);
}

double FunctionalSeries::identity_gap() const {
  double worst = 0.0;
  for (std::size_t k = 0; k < F.size(); ++k) {
    const double gap = std::abs(F[k] - F.front() - M[k] - A[k]);
    worst = std::max(worst, gap / std::max(1.0, std::abs(F[k])));
  }
  return worst;
}

FunctionalSeries decompose(double F0, std::span<const double> V, std::span<const double> compensators) {
  if (V.size() != compensators.size()) throw DomainError("increment and compensator lengths differ");
  FunctionalSeries s;
  const std::size_t N = V.size();
  s.F.resize(N + 1);
  s.V.assign(N + 1, 0.0);
  s.compensator.assign(N + 1, 0.0);
  s.A.assign(N + 1, 0.0);
  s.M.assign(N + 1, 0.0);
  s.F[0] = F0;
  for (std::size_t k = 0; k < N; ++k) {
    s.V[k + 1] = V[k];
    s.compensator[k + 1] = compensators[k];
    s.F[k + 1] = s.F[k] + V[k];
    s.A[k + 1] = s.A[k] + compensators[k];
    s.M[k + 1] = s.M[k] + (V[k] - compensators[k]);
  }
  return s;
}

std::vector<double> bracket(std::span<const double> second_moments, std::span<const double> compensators) {
  if (second_moments.size() != compensators.size())
    throw DomainError("second-moment and compensator lengths differ");
  std::vector<double> out(second_moments.size() + 1, 0.0);
  for (std::size_t k = 0; k < second_moments.size(); ++k) {
    // Conditional variance is non-negative; clamp rounding noise.
    const double inc = std::max(0.0, second_moments[k] - compensators[k] * compensators[k]);
    out[k + 1] = out[k] + inc;
  }
  return out;
}

double drift_integrand(Environment& env, int m, std::span<const double> x) {
  if (!env.has_derivatives()) throw UnsupportedError("drift integrand needs a smooth field");
  std::vector<double> grad(x.size());
  env.limit_gradient(m, x, grad);
  double g2 = 0.0;
  for (double g : grad) g2 += g * g;
  return std::exp(-env.limit_value(m, x)) * (-0.5 * env.limit_laplacian(m, x) + 0.5 * g2);
}

LimitTarget limit_target(const ContourRecord& record, const LocalTimeLedger& ledger, Environment& env,
                         std::int64_t K) {
  if (!env.has_derivatives()) throw UnsupportedError("limit target needs a smooth field");
  K = std::min<std::int64_t>(K, static_cast<std::int64_t>(record.steps()));
  const double h = 1.0 / (static_cast<double>(record.n) * record.n);
  LimitTarget t;
  for (std::int64_t k = 0; k <= K; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    const int m = record.levels[idx];
    const auto tip = record.tip(idx);
    const double w = (k == 0 || k == K) ? 0.5 * h : h;
    t.drift += w * drift_integrand(env, m, tip);
    t.integral_exp2B += w * std::exp(-2.0 * env.limit_value(m, tip));
    if (k < K && m == record.top) t.top_term += std::exp(-env.limit_value(m, tip)) / record.n;
  }
  // Transitions 0..K-1 enter A_K; the level-0 ones are the local time up to state K-1.
  t.local_time_zero = K > 0 ? ledger.local_time_steps(0, K - 1) : 0.0;
  return t;
}

FunctionalRun run_functional(const SnakeConfig& snake_config, Environment& env, Rng& rng,
                             const FunctionalConfig& config, const FunctionalRunOptions& options) {
  if (options.steps <= 0) throw ConfigError("functional run needs a positive step count");
  Snake snake(snake_config);
  const CompensatorEvaluator eval(snake.n(), snake.dim(), config);
  const auto N = static_cast<std::size_t>(options.steps);

  FunctionalRun out;
  ContourRecord& rec = out.run.record;
  rec.n = snake_config.n;
  rec.dim = snake_config.dim();
  rec.top = snake_config.top();
  rec.levels.reserve(N + 1);
  rec.tips.reserve((N + 1) * static_cast<std::size_t>(rec.dim));
  rec.push(0, snake.tip());

  std::vector<double> V(N), comp(N), second(N);
  double F = functional_value(snake, env, config);
  const double F0 = F;
  for (std::size_t k = 0; k < N; ++k) {
    const ConditionalMoments cm = eval(snake, env);
    const int m = snake.level();
    double dF;
    if (snake.step(env, rng)) {
      dF = m >= config.sum_start ? eval.term(m, snake.tip(), env) : 0.0;
    } else {
      // The erased tip is the age-m point paired with l = m - 1.
      dF = m - 1 >= config.sum_start ? -eval.term(m - 1, rec.tip(k), env) : 0.0;
    }
    F += dF;
    V[k] = dF;
    comp[k] = cm.mean;
    second[k] = cm.second;
    rec.push(snake.level(), snake.tip());
    if (options.check_stride > 0 && (k + 1) % static_cast<std::size_t>(options.check_stride) == 0) {
      const double direct = functional_value(snake, env, config);
      out.max_reconstruction_gap =
          std::max(out.max_reconstruction_gap, std::abs(direct - F) / std::max(1.0, std::abs(direct)));
    }
  }
  out.run.ledger = LocalTimeLedger::from_record(rec);
  out.series = decompose(F0, V, comp);
  out.series.bracket = bracket(second, comp);
  return out;
}

double tanaka_quadratic_variation(const ContourRecord& record, std::int64_t K) {
  K = std::min<std::int64_t>(K, static_cast<std::int64_t>(record.steps()));
  const double n = record.n;
  // X_k = Y_k - l^0_k + l^{K1}_k, both local times counting visits at states < k.
  double pushes_zero = 0.0, pushes_top = 0.0, qv = 0.0;
  double prev = record.levels[0] / n;
  for (std::int64_t k = 0; k < K; ++k) {
    const int m = record.levels[static_cast<std::size_t>(k)];
    if (m == 0) pushes_zero += 1.0 / n;
    if (m == record.top) pushes_top += 1.0 / n;
    const double x = record.levels[static_cast<std::size_t>(k + 1)] / n - pushes_zero + pushes_top;
    qv += (x - prev) * (x - prev);
    prev = x;
  }
  return qv;
}

}  // namespace snakesim
