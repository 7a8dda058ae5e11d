#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "snakesim/environment.hpp"
#include "snakesim/quadrature.hpp"
#include "snakesim/snake.hpp"

namespace snakesim {

/// F_n = (1/n) sum_{l = sum_start}^{m-1} exp(-B^n_{l/n}(path((l+1)/n))).
/// sum_start = 0 makes F = Y when B = 0 and matches the boundary compensator
/// (+1/n at level 0); sum_start = 1 is the literal lower index.
struct FunctionalConfig {
  int sum_start = 0;
  int quadrature_order = 20;
};

double functional_value(const Snake& snake, Environment& env, const FunctionalConfig& config);

struct ConditionalMoments {
  double mean = 0.0;    // E(V_{k+1} | F_k)
  double second = 0.0;  // E(V_{k+1}^2 | F_k)
  double variance() const { return second - mean * mean; }
};

/// Exact one-step conditional moments of the increment of F_n; the Gaussian
/// endpoint of the appended segment is integrated by Gauss-Hermite cubature.
class CompensatorEvaluator {
 public:
  CompensatorEvaluator(int n, int dim, const FunctionalConfig& config);

  ConditionalMoments operator()(const Snake& snake, Environment& env) const;
  double term(int l, std::span<const double> y, Environment& env) const;

 private:
  int n_;
  FunctionalConfig config_;
  GaussianCubature cubature_;
};

ConditionalMoments compensator_increment(const Snake& snake, Environment& env,
                                         const FunctionalConfig& config);

/// Doob decomposition of F_n along one path. Index k runs over states 0..N;
/// increments are stored at index k for the transition k-1 -> k.
struct FunctionalSeries {
  std::vector<double> F;
  std::vector<double> V;
  std::vector<double> compensator;
  std::vector<double> A;
  std::vector<double> M;
  std::vector<double> bracket;

  std::size_t size() const { return F.size(); }
  // max_k |F_k - F_0 - M_k - A_k| / max(1, |F_k|)
  double identity_gap() const;
};

FunctionalSeries decompose(double F0, std::span<const double> V, std::span<const double> compensators);

/// <M>_m = sum E(V^2|F) - sum (E(V|F))^2.
std::vector<double> bracket(std::span<const double> second_moments, std::span<const double> compensators);

/// e^{-B}(-1/2 Laplacian B + 1/2 |grad B|^2) at lattice time m/n.
double drift_integrand(Environment& env, int m, std::span<const double> x);

struct LimitTarget {
  double drift = 0.0;              // trapezoid of the drift integrand over [0, t]
  double local_time_zero = 0.0;    // l^0_t
  double top_term = 0.0;           // sum over top-level visits of (1/n) e^{-B_{K1}(tip)}
  double integral_exp2B = 0.0;     // trapezoid of e^{-2B}, the bracket limit
  double total(double drift_coefficient = 1.0) const {
    return drift_coefficient * drift + local_time_zero - top_term;
  }
};

/// Non-martingale terms of the limit decomposition evaluated on states 0..K.
LimitTarget limit_target(const ContourRecord& record, const LocalTimeLedger& ledger, Environment& env,
                         std::int64_t K);

struct FunctionalRunOptions {
  std::int64_t steps = 0;
  // Recompute F_n directly every `check_stride` states (0 disables).
  std::int64_t check_stride = 0;
};

struct FunctionalRun {
  SnakeRun run;
  FunctionalSeries series;
  double max_reconstruction_gap = 0.0;  // incremental vs direct F_n, relative
};

FunctionalRun run_functional(const SnakeConfig& snake_config, Environment& env, Rng& rng,
                             const FunctionalConfig& config, const FunctionalRunOptions& options);

/// Sum of squared increments of Y - l^0 + l^{K1} over states 0..K.
double tanaka_quadratic_variation(const ContourRecord& record, std::int64_t K);

}  // namespace snakesim
