#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "snakesim/rng.hpp"

namespace snakesim {

// ---------------------------------------------------------------------------
// Covariance kernels g(x, y)
// ---------------------------------------------------------------------------

struct ZeroKernel {
  bool operator==(const ZeroKernel&) const = default;
};

// g(x, y) = variance for all x, y: perfectly correlated in space.
struct ConstantKernel {
  double variance = 1.0;
  bool operator==(const ConstantKernel&) const = default;
};

// g(x, y) = variance * exp(-|x - y|^2 / (2 length_scale^2)).
struct SquaredExponentialKernel {
  double variance = 1.0;
  double length_scale = 1.0;
  bool operator==(const SquaredExponentialKernel&) const = default;
};

using CovarianceKernel =
    std::variant<ZeroKernel, ConstantKernel, SquaredExponentialKernel>;

double covariance(const CovarianceKernel& kernel, std::span<const double> x,
                  std::span<const double> y);

// sup_x g(x, x); all supported kernels are stationary so this is g(0, 0).
double kernel_sup_diagonal(const CovarianceKernel& kernel);

// True when every slice is constant in space (zero or constant kernel).
bool is_spatially_uniform(const CovarianceKernel& kernel);

std::string kernel_name(const CovarianceKernel& kernel);

// ---------------------------------------------------------------------------
// Spatial lattice
// ---------------------------------------------------------------------------

/// Regular lattice in R^d with the same origin/spacing/count on every axis.
/// Off-grid points are evaluated at the nearest node, ties going to the
/// lower index; points outside the extent are clamped to the boundary.
struct Grid {
  int dim = 1;
  double origin = -8.0;
  double spacing = 0.05;
  int points_per_axis = 321;

  std::size_t size() const;
  void node(std::size_t index, std::span<double> out) const;
  std::size_t nearest(std::span<const double> x, bool* clamped = nullptr) const;

  bool operator==(const Grid&) const = default;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class FieldMode { random, deterministic, smooth_gaussian };

std::string to_string(FieldMode mode);

/// A user-supplied smooth cumulative field B(t, x) used as a degenerate
/// environment. `time_lipschitz` bounds |dB/dt|; when it is finite and
/// time_lipschitz / n < 1/2 no increment can be truncated, and cumulative
/// sums telescope to B(l/n, x) - B(0, x).
struct DeterministicField {
  std::string name;
  std::function<double(double, std::span<const double>)> value;
  std::function<void(double, std::span<const double>, std::span<double>)> gradient;
  std::function<double(double, std::span<const double>)> laplacian;
  double time_lipschitz = std::numeric_limits<double>::infinity();
};

DeterministicField deterministic_zero();
// B(t, x) = slope * t.
DeterministicField deterministic_linear_time(double slope);
// B(t, x) = t * sin(x_1).
DeterministicField deterministic_time_sine();
DeterministicField deterministic_by_name(const std::string& name);

struct EnvironmentConfig {
  int n = 100;
  double nu = 0.0;
  int dim = 1;
  CovarianceKernel kernel = ZeroKernel{};
  Grid grid{};
  FieldMode mode = FieldMode::random;
  std::optional<DeterministicField> deterministic;
  int spectral_order = 64;
  // |xi| bound; defaults to sqrt(n)/2 when unset.
  std::optional<double> xi_bound_override;

  double xi_bound() const;
  double sqrt_n() const;
  // b = nu + ||g_bar||_inf / 2
  double growth_rate() const;

  // Environment laws agree (used to validate paired experiments).
  bool same_law(const EnvironmentConfig& other) const;
};

// ---------------------------------------------------------------------------
// Field slices
// ---------------------------------------------------------------------------

/// One time slice xi_k on the grid. Spatially uniform slices store a
/// single value.
struct EnvironmentField {
  int k = 0;
  std::vector<double> values;
  bool uniform = false;
  std::size_t clip_count = 0;
};

/// Precomputed sampler for a random-mode configuration. Holds the Cholesky
/// factor of the grid gram matrix; immutable and shareable across workers.
class FieldSampler {
 public:
  explicit FieldSampler(const EnvironmentConfig& config);

  EnvironmentField sample(int k, Rng& rng) const;

  const EnvironmentConfig& config() const { return config_; }
  double jitter_used() const { return jitter_; }

 private:
  EnvironmentConfig config_;
  Eigen::MatrixXd chol_;  // lower factor, empty for uniform kernels
  double jitter_ = 0.0;
};

EnvironmentField sample_field_step(const EnvironmentConfig& config, int k, Rng& rng);

/// Nearest-node evaluation. Clamped lookups are counted in `clamp_counter`.
double eval_field(const EnvironmentField& field, const Grid& grid,
                  std::span<const double> x, std::size_t* clamp_counter = nullptr);

struct BranchProbabilities {
  double up = 0.5;
  double down = 0.5;
};

/// p_up = 1/2 + xi/(4 sqrt n), p_down = 1/2 - xi/(4 sqrt n); requires |xi| <= sqrt(n)/2.
BranchProbabilities branch_probabilities(double xi, int n);

// ---------------------------------------------------------------------------
// Smooth cumulative fields and truncated increments
// ---------------------------------------------------------------------------

/// Realization of a smooth Gaussian field B~ with E B~_t(x) = nu t and
/// Cov(dB~_t(x), dB~_s(y)) = delta(t - s) g(x, y), built from a finite
/// random-feature spectral expansion. Values exist at lattice times j/n and
/// are extended lazily; spatial derivatives are analytic.
class SmoothGaussianField {
 public:
  SmoothGaussianField(const EnvironmentConfig& config, Rng rng);

  double value(int j, std::span<const double> x);
  void gradient(int j, std::span<const double> x, std::span<double> out);
  double laplacian(int j, std::span<const double> x);

  int n() const { return n_; }

 private:
  void extend_to(int j);

  int n_;
  int dim_;
  double nu_;
  CovarianceKernel kernel_;
  int order_;
  double amplitude_;
  std::vector<double> frequencies_;   // order_ x dim_
  std::vector<double> cos_coeff_;     // per lattice time, order_ entries
  std::vector<double> sin_coeff_;
  std::vector<double> scalar_path_;   // constant kernel: one Brownian path
  Rng rng_;
};

/// xi_j(y)/sqrt(n) = (B~_{j/n}(y) - B~_{(j-1)/n}(y)) 1{|increment| < 1/2}.
/// Returns xi_j(y) itself.
double xi_from_increment(double increment, int n);

/// Slice xi_j on the grid from a smooth field realization.
EnvironmentField field_from_smooth_increments(SmoothGaussianField& smooth, const Grid& grid,
                                              int j);

// ---------------------------------------------------------------------------
// Environment realizations used by the dynamics
// ---------------------------------------------------------------------------

/// One realization of the environment {xi_k}. Slices are generated lazily,
/// in index order, so values do not depend on query order.
class Environment {
 public:
  virtual ~Environment() = default;

  int n() const { return n_; }
  int dim() const { return dim_; }
  double sqrt_n() const { return sqrt_n_; }

  // xi_k(x)
  virtual double xi(int k, std::span<const double> x) = 0;

  // B^n_{l/n}(x) = n^{-1/2} sum_{i=1}^{l} xi_i(x)
  virtual double cumulative(int l, std::span<const double> x);

  virtual bool has_derivatives() const { return false; }
  // Limit field B at lattice time index m (time m/n) and its spatial derivatives.
  virtual double limit_value(int m, std::span<const double> x);
  virtual void limit_gradient(int m, std::span<const double> x, std::span<double> out);
  virtual double limit_laplacian(int m, std::span<const double> x);

  std::size_t clamp_count() const { return clamp_count_; }
  std::size_t clip_count() const { return clip_count_; }

 protected:
  Environment(int n, int dim);

  int n_;
  int dim_;
  double sqrt_n_;
  std::size_t clamp_count_ = 0;
  std::size_t clip_count_ = 0;
};

/// Random-mode realization backed by grid slices.
class GridEnvironment final : public Environment {
 public:
  GridEnvironment(std::shared_ptr<const FieldSampler> sampler, Rng rng);

  double xi(int k, std::span<const double> x) override;
  double cumulative(int l, std::span<const double> x) override;

  const EnvironmentField& slice(int k);

 private:
  void ensure(int k);

  std::shared_ptr<const FieldSampler> sampler_;
  Rng rng_;
  std::vector<EnvironmentField> slices_;
  std::vector<std::vector<double>> prefix_;  // prefix_[l] = sqrt(n) B^n_{l/n} on the grid
};

/// Environment derived from a smooth or deterministic cumulative field via
/// truncated increments.
class AnalyticEnvironment final : public Environment {
 public:
  AnalyticEnvironment(const EnvironmentConfig& config, DeterministicField field);
  AnalyticEnvironment(const EnvironmentConfig& config, std::unique_ptr<SmoothGaussianField> smooth);

  double xi(int k, std::span<const double> x) override;
  double cumulative(int l, std::span<const double> x) override;

  bool has_derivatives() const override { return true; }
  double limit_value(int m, std::span<const double> x) override;
  void limit_gradient(int m, std::span<const double> x, std::span<double> out) override;
  double limit_laplacian(int m, std::span<const double> x) override;

 private:
  double field_value(int j, std::span<const double> x);

  std::optional<DeterministicField> deterministic_;
  std::unique_ptr<SmoothGaussianField> smooth_;
};

/// Shared per-configuration state (Cholesky factor) reused across replicates.
class EnvironmentFactory {
 public:
  explicit EnvironmentFactory(EnvironmentConfig config);

  std::unique_ptr<Environment> make(Rng rng) const;
  const EnvironmentConfig& config() const { return config_; }

 private:
  EnvironmentConfig config_;
  std::shared_ptr<const FieldSampler> sampler_;
};

}  // namespace snakesim
