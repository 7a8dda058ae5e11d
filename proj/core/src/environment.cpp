#include "snakesim/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "snakesim/errors.hpp"

namespace snakesim {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double squared_distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

constexpr std::size_t kMaxGramSize = 4096;

}  // namespace

double covariance(const CovarianceKernel& kernel, std::span<const double> x,
                  std::span<const double> y) {
  return std::visit(
      overloaded{[](const ZeroKernel&) { return 0.0; },
                 [](const ConstantKernel& k) { return k.variance; },
                 [&](const SquaredExponentialKernel& k) {
                   const double l2 = k.length_scale * k.length_scale;
                   return k.variance * std::exp(-squared_distance(x, y) / (2.0 * l2));
                 }},
      kernel);
}

double kernel_sup_diagonal(const CovarianceKernel& kernel) {
  return std::visit(overloaded{[](const ZeroKernel&) { return 0.0; },
                               [](const ConstantKernel& k) { return k.variance; },
                               [](const SquaredExponentialKernel& k) { return k.variance; }},
                    kernel);
}

bool is_spatially_uniform(const CovarianceKernel& kernel) {
  return !std::holds_alternative<SquaredExponentialKernel>(kernel);
}

std::string kernel_name(const CovarianceKernel& kernel) {
  return std::visit(overloaded{[](const ZeroKernel&) { return std::string("zero"); },
                               [](const ConstantKernel&) { return std::string("constant"); },
                               [](const SquaredExponentialKernel&) {
                                 return std::string("squared_exponential");
                               }},
                    kernel);
}

// --- Grid -------------------------------------------------------------------

std::size_t Grid::size() const {
  if (dim <= 0 || points_per_axis <= 0) return 0;
  std::size_t total = 1;
  for (int i = 0; i < dim; ++i) total *= static_cast<std::size_t>(points_per_axis);
  return total;
}

void Grid::node(std::size_t index, std::span<double> out) const {
  for (int axis = 0; axis < dim; ++axis) {
    const std::size_t j = index % static_cast<std::size_t>(points_per_axis);
    index /= static_cast<std::size_t>(points_per_axis);
    out[axis] = origin + spacing * static_cast<double>(j);
  }
}

std::size_t Grid::nearest(std::span<const double> x, bool* clamped) const {
  std::size_t index = 0;
  std::size_t stride = 1;
  bool any_clamp = false;
  for (int axis = 0; axis < dim; ++axis) {
    // ceil(u - 1/2) picks the nearest node and sends exact midpoints down.
    const double u = (x[axis] - origin) / spacing;
    long j = static_cast<long>(std::ceil(u - 0.5));
    if (j < 0) {
      j = 0;
      any_clamp = true;
    } else if (j >= points_per_axis) {
      j = points_per_axis - 1;
      any_clamp = true;
    }
    index += static_cast<std::size_t>(j) * stride;
    stride *= static_cast<std::size_t>(points_per_axis);
  }
  if (clamped) *clamped = any_clamp;
  return index;
}

// --- Config -----------------------------------------------------------------

std::string to_string(FieldMode mode) {
  switch (mode) {
    case FieldMode::random:
      return "random";
    case FieldMode::deterministic:
      return "deterministic";
    case FieldMode::smooth_gaussian:
      return "smooth_gaussian";
  }
  return "unknown";
}

double EnvironmentConfig::sqrt_n() const { return std::sqrt(static_cast<double>(n)); }

double EnvironmentConfig::xi_bound() const {
  return xi_bound_override ? *xi_bound_override : 0.5 * sqrt_n();
}

double EnvironmentConfig::growth_rate() const { return nu + 0.5 * kernel_sup_diagonal(kernel); }

bool EnvironmentConfig::same_law(const EnvironmentConfig& o) const {
  if (n != o.n || nu != o.nu || dim != o.dim || !(kernel == o.kernel) || mode != o.mode)
    return false;
  if (xi_bound() != o.xi_bound()) return false;
  if (mode == FieldMode::deterministic) {
    return deterministic && o.deterministic && deterministic->name == o.deterministic->name;
  }
  // Grids matter only when the slices vary in space.
  if (!is_spatially_uniform(kernel) && mode == FieldMode::random && !(grid == o.grid))
    return false;
  if (mode == FieldMode::smooth_gaussian && spectral_order != o.spectral_order) return false;
  return true;
}

// --- Deterministic fields ---------------------------------------------------

DeterministicField deterministic_zero() {
  DeterministicField f;
  f.name = "zero";
  f.value = [](double, std::span<const double>) { return 0.0; };
  f.gradient = [](double, std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  f.laplacian = [](double, std::span<const double>) { return 0.0; };
  f.time_lipschitz = 0.0;
  return f;
}

DeterministicField deterministic_linear_time(double slope) {
  DeterministicField f;
  f.name = "linear_time:" + std::to_string(slope);
  f.value = [slope](double t, std::span<const double>) { return slope * t; };
  f.gradient = [](double, std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  f.laplacian = [](double, std::span<const double>) { return 0.0; };
  f.time_lipschitz = std::abs(slope);
  return f;
}

DeterministicField deterministic_time_sine() {
  DeterministicField f;
  f.name = "time_sine";
  f.value = [](double t, std::span<const double> x) { return t * std::sin(x[0]); };
  f.gradient = [](double t, std::span<const double> x, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    out[0] = t * std::cos(x[0]);
  };
  f.laplacian = [](double t, std::span<const double> x) { return -t * std::sin(x[0]); };
  f.time_lipschitz = 1.0;
  return f;
}

DeterministicField deterministic_by_name(const std::string& name) {
  if (name == "zero") return deterministic_zero();
  if (name == "time_sine") return deterministic_time_sine();
  const std::string prefix = "linear_time";
  if (name.rfind(prefix, 0) == 0) {
    double slope = 1.0;
    if (name.size() > prefix.size() + 1 && name[prefix.size()] == ':')
      slope = std::stod(name.substr(prefix.size() + 1));
    return deterministic_linear_time(slope);
  }
  throw ConfigError("unknown deterministic field '" + name + "'");
}

// --- Slices -----------------------------------------------------------------

FieldSampler::FieldSampler(const EnvironmentConfig& config) : config_(config) {
  if (config_.n <= 0) throw ConfigError("n must be positive");
  if (config_.dim <= 0 || config_.dim > 3) throw ConfigError("dimension must be in 1..3");
  if (config_.grid.dim != config_.dim) throw ConfigError("grid dimension differs from d");
  const std::size_t m = config_.grid.size();
  if (m == 0) throw ConfigError("empty grid");
  if (is_spatially_uniform(config_.kernel)) return;
  if (m > kMaxGramSize) throw ConfigError("grid too large for a dense Cholesky factor");

  Eigen::MatrixXd gram(m, m);
  std::vector<double> xi(config_.dim), xj(config_.dim);
  for (std::size_t i = 0; i < m; ++i) {
    config_.grid.node(i, xi);
    for (std::size_t j = 0; j <= i; ++j) {
      config_.grid.node(j, xj);
      gram(i, j) = gram(j, i) = covariance(config_.kernel, xi, xj);
    }
  }
  // Smooth kernels on fine grids are numerically singular; escalate jitter up to 1e-10.
  for (double jitter : {0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10}) {
    Eigen::MatrixXd a = gram;
    a.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
      chol_ = llt.matrixL();
      jitter_ = jitter;
      return;
    }
  }
  throw KernelNotPsdError("Cholesky factorization failed after jitter 1e-10");
}

EnvironmentField FieldSampler::sample(int k, Rng& rng) const {
  EnvironmentField field;
  field.k = k;
  const double mean = config_.nu / config_.sqrt_n();
  const double bound = config_.xi_bound();
  auto clip = [&](double v) {
    if (v > bound) {
      ++field.clip_count;
      return bound;
    }
    if (v < -bound) {
      ++field.clip_count;
      return -bound;
    }
    return v;
  };

  if (std::holds_alternative<ZeroKernel>(config_.kernel)) {
    field.uniform = true;
    field.values.assign(1, clip(mean));
    return field;
  }
  if (const auto* c = std::get_if<ConstantKernel>(&config_.kernel)) {
    field.uniform = true;
    field.values.assign(1, clip(mean + std::sqrt(c->variance) * rng.normal()));
    return field;
  }
  const auto m = static_cast<Eigen::Index>(chol_.rows());
  Eigen::VectorXd z(m);
  for (Eigen::Index i = 0; i < m; ++i) z[i] = rng.normal();
  const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>() * z;
  field.values.resize(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) field.values[static_cast<std::size_t>(i)] = clip(mean + v[i]);
  return field;
}

EnvironmentField sample_field_step(const EnvironmentConfig& config, int k, Rng& rng) {
  if (config.mode != FieldMode::random) throw ConfigError("sample_field_step needs random mode");
  return FieldSampler(config).sample(k, rng);
}

double eval_field(const EnvironmentField& field, const Grid& grid, std::span<const double> x,
                  std::size_t* clamp_counter) {
  if (field.uniform) return field.values.front();
  bool clamped = false;
  const std::size_t idx = grid.nearest(x, &clamped);
  if (clamped && clamp_counter) ++*clamp_counter;
  return field.values[idx];
}

BranchProbabilities branch_probabilities(double xi, int n) {
  const double sn = std::sqrt(static_cast<double>(n));
  if (!(std::abs(xi) <= 0.5 * sn)) throw DomainError("|xi| exceeds sqrt(n)/2");
  const double shift = xi / (4.0 * sn);
  return {0.5 + shift, 0.5 - shift};
}

// --- Smooth fields ----------------------------------------------------------

SmoothGaussianField::SmoothGaussianField(const EnvironmentConfig& config, Rng rng)
    : n_(config.n),
      dim_(config.dim),
      nu_(config.nu),
      kernel_(config.kernel),
      order_(config.spectral_order),
      amplitude_(0.0),
      rng_(std::move(rng)) {
  if (config.mode != FieldMode::smooth_gaussian) throw ConfigError("smooth field needs smooth_gaussian mode");
  if (order_ < 1) throw ConfigError("spectral order must be >= 1");
  if (const auto* se = std::get_if<SquaredExponentialKernel>(&kernel_)) {
    // Random Fourier features: omega ~ N(0, I / lambda^2) reproduces the SE kernel.
    amplitude_ = std::sqrt(se->variance / order_);
    frequencies_.resize(static_cast<std::size_t>(order_ * dim_));
    for (auto& w : frequencies_) w = rng_.normal() / se->length_scale;
    cos_coeff_.assign(static_cast<std::size_t>(order_), 0.0);
    sin_coeff_.assign(static_cast<std::size_t>(order_), 0.0);
  } else if (const auto* c = std::get_if<ConstantKernel>(&kernel_)) {
    amplitude_ = std::sqrt(c->variance);
    scalar_path_.assign(1, 0.0);
  } else {
    scalar_path_.assign(1, 0.0);
  }
}

void SmoothGaussianField::extend_to(int j) {
  const double sd = 1.0 / std::sqrt(static_cast<double>(n_));
  if (std::holds_alternative<SquaredExponentialKernel>(kernel_)) {
    const auto m = static_cast<std::size_t>(order_);
    while (cos_coeff_.size() / m <= static_cast<std::size_t>(j)) {
      const std::size_t base = cos_coeff_.size() - m;
      for (std::size_t i = 0; i < m; ++i) cos_coeff_.push_back(cos_coeff_[base + i] + sd * rng_.normal());
      for (std::size_t i = 0; i < m; ++i) sin_coeff_.push_back(sin_coeff_[base + i] + sd * rng_.normal());
    }
  } else if (std::holds_alternative<ConstantKernel>(kernel_)) {
    while (scalar_path_.size() <= static_cast<std::size_t>(j))
      scalar_path_.push_back(scalar_path_.back() + sd * rng_.normal());
  }
}

double SmoothGaussianField::value(int j, std::span<const double> x) {
  if (j <= 0) return 0.0;
  extend_to(j);
  double v = nu_ * j / n_;
  if (std::holds_alternative<SquaredExponentialKernel>(kernel_)) {
    const auto m = static_cast<std::size_t>(order_);
    const std::size_t base = static_cast<std::size_t>(j) * m;
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double phase = 0.0;
      for (int a = 0; a < dim_; ++a) phase += frequencies_[i * dim_ + a] * x[a];
      s += cos_coeff_[base + i] * std::cos(phase) + sin_coeff_[base + i] * std::sin(phase);
    }
    v += amplitude_ * s;
  } else if (std::holds_alternative<ConstantKernel>(kernel_)) {
    v += amplitude_ * scalar_path_[static_cast<std::size_t>(j)];
  }
  return v;
}

void SmoothGaussianField::gradient(int j, std::span<const double> x, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  if (j <= 0 || !std::holds_alternative<SquaredExponentialKernel>(kernel_)) return;
  extend_to(j);
  const auto m = static_cast<std::size_t>(order_);
  const std::size_t base = static_cast<std::size_t>(j) * m;
  for (std::size_t i = 0; i < m; ++i) {
    double phase = 0.0;
    for (int a = 0; a < dim_; ++a) phase += frequencies_[i * dim_ + a] * x[a];
    const double d = -cos_coeff_[base + i] * std::sin(phase) + sin_coeff_[base + i] * std::cos(phase);
    for (int a = 0; a < dim_; ++a) out[a] += amplitude_ * frequencies_[i * dim_ + a] * d;
  }
}

double SmoothGaussianField::laplacian(int j, std::span<const double> x) {
  if (j <= 0 || !std::holds_alternative<SquaredExponentialKernel>(kernel_)) return 0.0;
  extend_to(j);
  const auto m = static_cast<std::size_t>(order_);
  const std::size_t base = static_cast<std::size_t>(j) * m;
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double phase = 0.0, w2 = 0.0;
    for (int a = 0; a < dim_; ++a) {
      phase += frequencies_[i * dim_ + a] * x[a];
      w2 += frequencies_[i * dim_ + a] * frequencies_[i * dim_ + a];
    }
    s -= w2 * (cos_coeff_[base + i] * std::cos(phase) + sin_coeff_[base + i] * std::sin(phase));
  }
  return amplitude_ * s;
}

double xi_from_increment(double increment, int n) {
  if (!(std::abs(increment) < 0.5)) return 0.0;
  return std::sqrt(static_cast<double>(n)) * increment;
}

EnvironmentField field_from_smooth_increments(SmoothGaussianField& smooth, const Grid& grid, int j) {
  if (j < 1) throw ConfigError("smooth increments start at generation 1");
  EnvironmentField field;
  field.k = j;
  const std::size_t m = grid.size();
  if (m == 0) throw ConfigError("empty grid");
  field.values.resize(m);
  std::vector<double> x(static_cast<std::size_t>(grid.dim));
  for (std::size_t i = 0; i < m; ++i) {
    grid.node(i, x);
    const double inc = smooth.value(j, x) - smooth.value(j - 1, x);
    field.values[i] = xi_from_increment(inc, smooth.n());
    if (field.values[i] == 0.0 && inc != 0.0) ++field.clip_count;
  }
  return field;
}

// --- Environment realizations -----------------------------------------------

Environment::Environment(int n, int dim)
    : n_(n), dim_(dim), sqrt_n_(std::sqrt(static_cast<double>(n))) {}

double Environment::cumulative(int l, std::span<const double> x) {
  double s = 0.0;
  for (int i = 1; i <= l; ++i) s += xi(i, x);
  return s / sqrt_n_;
}

double Environment::limit_value(int, std::span<const double>) {
  throw UnsupportedError("environment has no smooth limit field");
}
void Environment::limit_gradient(int, std::span<const double>, std::span<double>) {
  throw UnsupportedError("environment has no smooth limit field");
}
double Environment::limit_laplacian(int, std::span<const double>) {
  throw UnsupportedError("environment has no smooth limit field");
}

GridEnvironment::GridEnvironment(std::shared_ptr<const FieldSampler> sampler, Rng rng)
    : Environment(sampler->config().n, sampler->config().dim),
      sampler_(std::move(sampler)),
      rng_(std::move(rng)) {}

void GridEnvironment::ensure(int k) {
  if (k < 0) throw DomainError("negative generation index");
  while (slices_.size() <= static_cast<std::size_t>(k)) {
    slices_.push_back(sampler_->sample(static_cast<int>(slices_.size()), rng_));
    clip_count_ += slices_.back().clip_count;
    const auto& cur = slices_.back();
    if (prefix_.empty()) {
      // B^n_0 = 0: slice 0 never enters a cumulative sum.
      prefix_.emplace_back(cur.values.size(), 0.0);
    } else {
      std::vector<double> next = prefix_.back();
      for (std::size_t i = 0; i < next.size(); ++i) next[i] += cur.values[i];
      prefix_.push_back(std::move(next));
    }
  }
}

const EnvironmentField& GridEnvironment::slice(int k) {
  ensure(k);
  return slices_[static_cast<std::size_t>(k)];
}

double GridEnvironment::xi(int k, std::span<const double> x) {
  ensure(k);
  return eval_field(slices_[static_cast<std::size_t>(k)], sampler_->config().grid, x, &clamp_count_);
}

double GridEnvironment::cumulative(int l, std::span<const double> x) {
  if (l <= 0) return 0.0;
  ensure(l);
  const auto& row = prefix_[static_cast<std::size_t>(l)];
  if (slices_.front().uniform) return row.front() / sqrt_n_;
  bool clamped = false;
  const std::size_t idx = sampler_->config().grid.nearest(x, &clamped);
  if (clamped) ++clamp_count_;
  return row[idx] / sqrt_n_;
}

AnalyticEnvironment::AnalyticEnvironment(const EnvironmentConfig& config, DeterministicField field)
    : Environment(config.n, config.dim), deterministic_(std::move(field)) {}

AnalyticEnvironment::AnalyticEnvironment(const EnvironmentConfig& config,
                                         std::unique_ptr<SmoothGaussianField> smooth)
    : Environment(config.n, config.dim), smooth_(std::move(smooth)) {}

double AnalyticEnvironment::field_value(int j, std::span<const double> x) {
  if (smooth_) return smooth_->value(j, x);
  return deterministic_->value(static_cast<double>(j) / n_, x);
}

double AnalyticEnvironment::xi(int k, std::span<const double> x) {
  if (k < 1) return 0.0;
  const double inc = field_value(k, x) - field_value(k - 1, x);
  const double v = xi_from_increment(inc, n_);
  if (v == 0.0 && inc != 0.0) ++clip_count_;
  return v;
}

double AnalyticEnvironment::cumulative(int l, std::span<const double> x) {
  if (l <= 0) return 0.0;
  if (deterministic_ && deterministic_->time_lipschitz / n_ < 0.5) {
    // No increment can reach the truncation level, so the sum telescopes.
    return field_value(l, x) - field_value(0, x);
  }
  double s = 0.0;
  for (int i = 1; i <= l; ++i) s += xi(i, x);
  return s / sqrt_n_;
}

double AnalyticEnvironment::limit_value(int m, std::span<const double> x) {
  return field_value(m, x) - field_value(0, x);
}

void AnalyticEnvironment::limit_gradient(int m, std::span<const double> x, std::span<double> out) {
  if (smooth_) {
    smooth_->gradient(m, x, out);
    return;
  }
  std::vector<double> g0(out.size());
  deterministic_->gradient(static_cast<double>(m) / n_, x, out);
  deterministic_->gradient(0.0, x, g0);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= g0[i];
}

double AnalyticEnvironment::limit_laplacian(int m, std::span<const double> x) {
  if (smooth_) return smooth_->laplacian(m, x);
  return deterministic_->laplacian(static_cast<double>(m) / n_, x) - deterministic_->laplacian(0.0, x);
}

EnvironmentFactory::EnvironmentFactory(EnvironmentConfig config) : config_(std::move(config)) {
  if (config_.n <= 0) throw ConfigError("n must be positive");
  switch (config_.mode) {
    case FieldMode::random:
      sampler_ = std::make_shared<const FieldSampler>(config_);
      break;
    case FieldMode::deterministic:
      if (!config_.deterministic) throw ConfigError("deterministic mode needs a field");
      break;
    case FieldMode::smooth_gaussian:
      if (config_.dim <= 0) throw ConfigError("dimension must be positive");
      break;
  }
}

std::unique_ptr<Environment> EnvironmentFactory::make(Rng rng) const {
  switch (config_.mode) {
    case FieldMode::random:
      return std::make_unique<GridEnvironment>(sampler_, std::move(rng));
    case FieldMode::deterministic:
      return std::make_unique<AnalyticEnvironment>(config_, *config_.deterministic);
    case FieldMode::smooth_gaussian:
      return std::make_unique<AnalyticEnvironment>(
          config_, std::make_unique<SmoothGaussianField>(config_, std::move(rng)));
  }
  throw ConfigError("unknown field mode");
}

}  // namespace snakesim
