#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snakesim/environment.hpp"
#include "snakesim/parallel.hpp"
#include "snakesim/rng.hpp"

namespace snakesim {

// ---------------------------------------------------------------------------
// Verdicts and result bundles
// ---------------------------------------------------------------------------

enum class Verdict { pass, fail, informational };
std::string to_string(Verdict v);

struct SummaryStats {
  std::string name;
  double estimate = 0.0;
  double stderr_ = 0.0;
  double target = 0.0;
  std::string provenance;  // where the target comes from
  std::string tolerance;   // human-readable rule
  Verdict verdict = Verdict::informational;
};

SummaryStats check_stat(std::string name, double estimate, double se, double target, std::string provenance,
                        std::string tolerance, bool ok);
SummaryStats info_stat(std::string name, double estimate, double se = 0.0, double target = 0.0,
                       std::string provenance = {});

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct CheckResult {
  std::string name;
  std::vector<SummaryStats> stats;
  std::vector<Table> tables;
  std::vector<std::string> notes;
  double seconds = 0.0;
  std::size_t failed_replicates = 0;

  bool passed() const;
};

// ---------------------------------------------------------------------------
// Replicate scheduling
// ---------------------------------------------------------------------------

template <class T>
struct ReplicateResults {
  std::vector<T> values;       // successful replicates in index order
  std::vector<std::size_t> failed;
};

/// Runs fn(r) for every replicate; a throwing replicate is recorded as failed
/// and the run continues.
template <class T, class Fn>
ReplicateResults<T> run_replicates(std::size_t count, unsigned workers, Fn&& fn) {
  std::vector<std::optional<T>> slots(count);
  const auto errors = parallel_for(count, workers, [&](std::size_t i) { slots[i].emplace(fn(i)); });
  ReplicateResults<T> out;
  out.values.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (errors[i] || !slots[i]) {
      out.failed.push_back(i);
    } else {
      out.values.push_back(std::move(*slots[i]));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment specification
// ---------------------------------------------------------------------------

struct ExperimentSpec {
  std::string id;
  std::string module;
  EnvironmentConfig environment{};
  std::vector<int> n_list;
  std::size_t replicates = 1000;
  double delta = 1.0;
  double t = 1.0;
  double c0 = 1.0;
  double r = 1.0;
  double K1 = 1.0;
  std::vector<std::string> test_functions{"1"};
  std::uint64_t seed = 1;
  std::string out_dir;
  unsigned workers = 0;
  // Module-specific knobs, e.g. "epsilon" for the embedding.
  std::map<std::string, std::string> params;

  // Throws ValidationError naming the offending field.
  void validate() const;
  double param(const std::string& key, double fallback) const;
};

const std::vector<std::string>& experiment_ids();

struct ResultBundle {
  ExperimentSpec spec;
  std::vector<CheckResult> checks;
  double wall_seconds = 0.0;

  bool passed() const;
  std::size_t failed_replicates() const;
};

/// Validates, runs every check of the experiment and, when spec.out_dir is
/// set, writes summary.json plus one CSV per table there.
ResultBundle run_experiment(const ExperimentSpec& spec);

// ---------------------------------------------------------------------------
// Test functions with known Laplacian
// ---------------------------------------------------------------------------

struct TestFunctionSpec {
  enum class Kind { constant, cosine, bump };
  Kind kind = Kind::constant;
  double c = 1.0;       // constant value
  double center = 0.0;  // bump
  double width = 1.0;

  double value(std::span<const double> x) const;
  double laplacian(std::span<const double> x) const;
  std::string name() const;

  // "1", "const:<c>", "cos", "bump:<center>:<width>"; anything else is unsupported.
  static TestFunctionSpec parse(const std::string& text);
};

// ---------------------------------------------------------------------------
// Martingale-problem residuals
// ---------------------------------------------------------------------------

/// Per-replicate functionals of an occupation trajectory on a common time grid.
struct MpSeries {
  std::vector<double> x_phi;   // <X, phi>
  std::vector<double> x_lap;   // <X, Laplacian phi>
  std::vector<double> x_phi2;  // <X, phi^2>
  std::vector<double> pair;    // int int g phi phi dX dX
};

/// Reduces atom snapshots (flattened positions, every atom of mass `mass`) to
/// MpSeries. Above `pair_cap` atoms the off-diagonal pair sum is estimated from
/// a uniform subsample without replacement, rescaled to stay unbiased.
MpSeries mp_series(const std::vector<std::vector<double>>& atoms, int dim, double mass,
                   const TestFunctionSpec& phi, const CovarianceKernel& kernel, Rng& rng,
                   std::size_t pair_cap = 1000);

struct MartingaleTestReport {
  std::vector<double> times;
  std::vector<double> mean;
  std::vector<double> se;
  double max_abs_z = 0.0;
  double lag1_autocorrelation = 0.0;  // pooled over replicates
  double autocorrelation_se = 0.0;
  double qv_realized = 0.0;
  double qv_target = 0.0;
  double qv_difference_se = 0.0;
  bool zero_mean_ok = true;
  bool orthogonal_ok = true;
  bool qv_ok = true;
  bool half_factor = true;
};

struct MpOptions {
  double nu = 0.0;
  double g_bar = 0.0;          // g(x, x), constant for stationary kernels
  bool half_factor = true;     // 1/2 in front of the whole drift integral
  double zero_mean_z = 4.0;
  double qv_relative = 0.10;
  double qv_z = 3.0;
};

/// M_t = <X_t,phi> - <X_0,phi> - c int (<X,Lap phi> + (nu + g_bar/2) <X,phi>) ds with c = 1/2
/// (half_factor) or the drift written as (1/2)<X,Lap phi> + (nu + g_bar/2)<X,phi>.
/// Trapezoid in time; QV target 2 int <X,phi^2> + int pair.
MartingaleTestReport mp_residual_test(std::span<const double> times, std::span<const MpSeries> series,
                                      const MpOptions& options);

struct MpAdjudication {
  MartingaleTestReport with_half;
  MartingaleTestReport without_half;
  double growth_rate_measured = 0.0;  // log(E X_t(1) / X_0(1)) / t at the last grid time
  std::string consistent;              // "with_half", "without_half", "both", "neither"
};

MpAdjudication mp_adjudicate(std::span<const double> times, std::span<const MpSeries> series,
                             MpOptions options);

// ---------------------------------------------------------------------------
// Snake occupation vs forward branching
// ---------------------------------------------------------------------------

struct Theorem1Spec {
  EnvironmentConfig snake_environment{};
  EnvironmentConfig branching_environment{};
  double r = 1.0;
  double K1 = 1.0;
  std::vector<double> times{0.25, 0.5};
  std::string test_function = "1";
  std::size_t replicates = 10000;
  std::uint64_t seed = 1;
  unsigned workers = 0;
};

struct Theorem1Row {
  double t = 0.0;
  double snake_mean = 0.0, snake_se = 0.0;
  double branching_mean = 0.0, branching_se = 0.0;
  double ks_statistic = 0.0;
  double p_value = 1.0;
};

struct Theorem1Report {
  std::vector<Theorem1Row> rows;
  std::size_t failed_replicates = 0;
};

/// Samples X^{n,r}_{0,t}(phi) from snake runs stopped at the inverse local time
/// r, and <X^n_t, phi> from floor(rn) forward particles at the root, with
/// independent streams; two-sample KS per time.
Theorem1Report theorem1_representation_check(const Theorem1Spec& spec);

}  // namespace snakesim
