#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "snakesim/environment.hpp"
#include "snakesim/rng.hpp"

namespace snakesim {

/// Weighted empirical measure of the particle system: each particle has mass 1/n.
struct PopulationState {
  int k = 0;
  int n = 1;
  int dim = 1;
  // Flattened positions, dim entries per particle. Empty in count-only mode.
  std::vector<double> positions;
  std::size_t particle_count = 0;
  bool track_positions = true;
  std::vector<double> mass_history;

  double mass_scale() const { return 1.0 / n; }
  double mass() const { return static_cast<double>(particle_count) / n; }
  bool extinct() const { return particle_count == 0; }
  std::span<const double> position(std::size_t i) const {
    return {positions.data() + i * dim, static_cast<std::size_t>(dim)};
  }
};

/// `count` particles at `x`. Count-only mode is exact whenever the slices are
/// spatially uniform, since then no particle's position affects any draw.
PopulationState initial_population(int n, int dim, std::size_t count, std::span<const double> x,
                                   bool track_positions = true);

/// Geometric offspring: P(N = m) = p_up^m p_down with the branch probabilities of xi.
std::int64_t offspring_count(double xi, int n, Rng& rng);

/// Exact conditional mean p_up / p_down.
double offspring_mean(double xi, int n);

/// One generation: every particle moves by N(0, I/n) over [k/n, (k+1)/n), then
/// branches at time (k+1)/n using slice xi_{k+1} at its new position.
void step_population(PopulationState& state, Environment& env, Rng& rng);

// ---------------------------------------------------------------------------
// Survival oracle
// ---------------------------------------------------------------------------

struct SurvivalOracleParams {
  double b_n = 0.0;
  int n = 1;
  long k = 0;
};

struct SurvivalOracleResult {
  double iterated = 1.0;     // 1 - f_k(0), extended-precision iteration
  double closed_form = 1.0;  // 1 / (k z_k)
};

SurvivalOracleResult exact_survival_geometric(const SurvivalOracleParams& params);

/// 1 - f_k(0) for every k = 0..k_max from one pass of the same iteration.
std::vector<double> exact_survival_curve(double b_n, int n, long k_max);

/// h(b, delta) = b / (1 - exp(-b delta)), 1/delta at b = 0.
double survival_rate_h(double b, double delta);

/// Lemma-level growth bound e^{b delta}.
struct GrowthBound {
  double b = 0.0;
  double delta = 0.0;
  double value() const;
};

struct SurvivalEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::size_t replicates = 0;
  std::size_t survivors = 0;
};

/// Fraction of single-ancestor runs alive after floor(n delta) generations.
SurvivalEstimate estimate_survival_mc(const EnvironmentConfig& config, double delta,
                                      std::size_t replicates, std::uint64_t seed,
                                      unsigned workers = 0);

// ---------------------------------------------------------------------------
// Mass moments and semigroup bound
// ---------------------------------------------------------------------------

struct GaussianBump {
  double center = 0.0;
  double width = 1.0;  // s in exp(-(x-m)^2 / 2 s^2)
  double operator()(double x) const;
  // Heat semigroup with generator (1/2) d^2/dx^2 applied for time t.
  double heat(double t, double x) const;
};

struct MassMomentReport {
  double initial_mass = 0.0;
  long generations = 0;
  double mean_mass = 0.0;
  double mean_mass_se = 0.0;
  double mean_bound = 0.0;       // X_0(1) (1 + b/n)^{floor(n delta)}
  double exact_mean = 0.0;       // iterated exact per-step mean factor
  std::vector<double> levels;    // a grid
  std::vector<double> tail_prob; // P(sup_k X_k(1) >= a)
  std::vector<double> tail_se;
  std::vector<double> tail_bound;  // X_0(1) max(e^{b delta}, 1) / a
  bool mean_ok = false;
  bool tail_ok = false;

  // Semigroup (bump) part
  double bump_mean = 0.0;
  double bump_se = 0.0;
  double bump_rhs = 0.0;  // (1 + b/n)^{floor(n delta)} X_0(S_delta f)
  double bump_exact = 0.0;  // critical drift-free value X_0(S_t f) with t = floor(n delta)/n
  bool semigroup_ok = false;

  // log(mean mass) / (floor(n delta)/n)
  double growth_rate_measured = 0.0;
};

struct MassMomentOptions {
  std::size_t initial_particles = 1;
  double x0 = 0.0;
  GaussianBump bump{};
  std::vector<double> levels{};
  double se_multiplier = 3.0;
};

/// E[(p_up/p_down)(xi)] for one slice value under the configured marginal law,
/// by Gauss-Hermite quadrature over the clipped Gaussian.
double expected_offspring_factor(const EnvironmentConfig& config);

MassMomentReport mass_moment_report(const EnvironmentConfig& config, double delta,
                                    std::size_t replicates, std::uint64_t seed,
                                    const MassMomentOptions& options, unsigned workers = 0);

}  // namespace snakesim
