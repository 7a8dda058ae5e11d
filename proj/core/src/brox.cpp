#include "snakesim/brox.hpp"

#include <algorithm>
#include <cmath>

#include "snakesim/errors.hpp"
#include "snakesim/parallel.hpp"
#include "snakesim/stats.hpp"

namespace snakesim {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

double tent(double x, double K1) {
  if (!(K1 > 0.0)) throw DomainError("tent map needs K1 > 0");
  const double period = 2.0 * K1;
  double r = std::fmod(x, period);
  if (r < 0.0) r += period;
  return r <= K1 ? r : period - r;
}

// --- PotentialProfile -----------------------------------------------------------

double PotentialProfile::segment(std::int64_t i) const {
  const std::int64_t period = 2 * static_cast<std::int64_t>(top);
  std::int64_t j = i % period;
  if (j < 0) j += period;
  if (j < top) return values[static_cast<std::size_t>(j)];
  return values[static_cast<std::size_t>(period - j - 1)];
}

double PotentialProfile::value(double x) const {
  if (x < 0.0 || x >= top) throw OutOfRangeError("unreflected potential is defined on [0, top)");
  return values[static_cast<std::size_t>(std::floor(x))];
}

double PotentialProfile::reflected(double x) const {
  return segment(static_cast<std::int64_t>(std::floor(x)));
}

double PotentialProfile::up_probability(std::int64_t i) const {
  return 1.0 / (1.0 + std::exp(segment(i) - segment(i - 1)));
}

PotentialProfile PotentialProfile::constant(int n, int top, double c) {
  if (n < 1 || top < 1) throw DomainError("profile needs n >= 1 and top >= 1");
  PotentialProfile p;
  p.n = n;
  p.top = top;
  p.increments.assign(static_cast<std::size_t>(top), 0.0);
  p.values.assign(static_cast<std::size_t>(top), c);
  return p;
}

PotentialProfile build_potential(std::span<const double> xi, int n, double K1, double bound) {
  if (n < 1 || !(K1 > 0.0)) throw DomainError("potential needs n >= 1 and K1 > 0");
  const double sn = std::sqrt(static_cast<double>(n));
  if (!(bound >= 0.0) || bound >= 2.0 * sn) throw DomainError("site bound must lie in [0, 2 sqrt(n))");
  const int top = static_cast<int>(std::lround(n * K1));
  if (top < 1) throw DomainError("n K1 rounds to zero sites");
  if (xi.size() + 1 < static_cast<std::size_t>(top)) throw DomainError("too few site variables");

  PotentialProfile p;
  p.n = n;
  p.top = top;
  p.increments.assign(static_cast<std::size_t>(top), 0.0);
  p.values.assign(static_cast<std::size_t>(top), 0.0);
  for (int i = 1; i < top; ++i) {
    const double x = xi[static_cast<std::size_t>(i - 1)];
    if (std::abs(x) > bound * (1.0 + 1e-12)) throw DomainError("site variable exceeds its bound");
    const double c = x / (2.0 * sn);
    p.increments[static_cast<std::size_t>(i)] = std::log1p(-c) - std::log1p(c);
    p.values[static_cast<std::size_t>(i)] = p.values[static_cast<std::size_t>(i - 1)] +
                                            p.increments[static_cast<std::size_t>(i)];
  }
  return p;
}

std::vector<double> sample_site_environment(int count, double variance, double bound, Rng& rng) {
  if (count < 0 || variance < 0.0 || bound < 0.0) throw DomainError("bad site environment parameters");
  const double sd = std::sqrt(variance);
  std::vector<double> xi(static_cast<std::size_t>(count));
  for (auto& x : xi) x = std::clamp(sd * rng.normal(), -bound, bound);
  return xi;
}

// --- ScaleFunction --------------------------------------------------------------

ScaleFunction::ScaleFunction(const PotentialProfile& profile)
    : profile_(&profile), period_(2 * static_cast<std::int64_t>(profile.top)) {
  const auto P = static_cast<std::size_t>(period_);
  prefix_.assign(P + 1, 0.0);
  exp_v_.resize(P);
  rate_.resize(P);
  for (std::size_t r = 0; r < P; ++r) {
    const double v = profile.segment(static_cast<std::int64_t>(r));
    exp_v_[r] = std::exp(v);
    rate_[r] = std::exp(-2.0 * v);
    prefix_[r + 1] = prefix_[r] + exp_v_[r] / profile.n;
  }
}

double ScaleFunction::node(std::int64_t i) const {
  const std::int64_t q = floor_div(i, period_);
  const auto r = static_cast<std::size_t>(i - q * period_);
  return static_cast<double>(q) * prefix_.back() + prefix_[r];
}

double ScaleFunction::rate(std::int64_t segment) const {
  const std::int64_t q = floor_div(segment, period_);
  return rate_[static_cast<std::size_t>(segment - q * period_)];
}

std::int64_t ScaleFunction::segment_of(double x) const {
  return static_cast<std::int64_t>(std::floor(x * profile_->n));
}

double ScaleFunction::operator()(double x) const {
  const std::int64_t i = segment_of(x);
  const std::int64_t q = floor_div(i, period_);
  const auto r = static_cast<std::size_t>(i - q * period_);
  return node(i) + (x - static_cast<double>(i) / profile_->n) * exp_v_[r];
}

double ScaleFunction::inverse(double w) const {
  const double P = prefix_.back();
  const double qf = std::floor(w / P);
  double rem = w - qf * P;
  if (rem < 0.0) rem = 0.0;
  if (rem >= P) rem = std::nextafter(P, 0.0);
  auto it = std::upper_bound(prefix_.begin(), prefix_.end(), rem);
  const auto r = static_cast<std::size_t>(std::distance(prefix_.begin(), it) - 1);
  const auto i = static_cast<std::int64_t>(qf) * period_ + static_cast<std::int64_t>(r);
  return static_cast<double>(i) / profile_->n + (rem - prefix_[r]) / exp_v_[r];
}

// --- Diffusion ------------------------------------------------------------------

BmrePath simulate_bmre(const PotentialProfile& profile, std::span<const double> times, double du,
                       Rng& rng) {
  if (!(du > 0.0)) throw ConfigError("W step must be positive");
  if (!std::is_sorted(times.begin(), times.end()) || (!times.empty() && times.front() < 0.0))
    throw ConfigError("query times must be sorted and non-negative");
  const ScaleFunction A(profile);
  BmrePath path;
  path.times.assign(times.begin(), times.end());
  path.values.resize(times.size());

  const double sq = std::sqrt(du);
  double w = 0.0, T = 0.0;
  std::size_t q = 0;
  while (q < times.size() && times[q] <= 0.0) path.values[q++] = 0.0;
  while (q < times.size()) {
    const double dT = A.rate(A.segment_of(A.inverse(w))) * du;
    const double w1 = w + sq * rng.normal();
    const double T1 = T + dT;
    while (q < times.size() && times[q] <= T1) {
      // Linear interpolation of W on the step.
      const double f = (times[q] - T) / dT;
      path.values[q++] = A.inverse(w + f * (w1 - w));
    }
    w = w1;
    T = T1;
    ++path.steps;
  }
  return path;
}

EmbeddingSchedule embed_rwre(const PotentialProfile& profile, std::int64_t m_max, Rng& rng,
                             const EmbeddingOptions& options) {
  if (m_max < 0) throw DomainError("negative crossing count");
  if (!(options.epsilon > 0.0) || options.epsilon > 1.0) throw ConfigError("epsilon must lie in (0, 1]");
  const ScaleFunction A(profile);
  EmbeddingSchedule s;
  s.n = profile.n;
  s.sigma.reserve(static_cast<std::size_t>(m_max) + 1);
  s.walk.reserve(static_cast<std::size_t>(m_max) + 1);
  s.sigma.push_back(0.0);
  s.walk.push_back(0);

  std::int64_t i = 0;
  double T = 0.0;
  double w = A.node(0);
  for (std::int64_t m = 0; m < m_max; ++m) {
    const double lo = A.node(i - 1), mid = A.node(i), hi = A.node(i + 1);
    const double lo2 = A.node(i - 2), hi2 = A.node(i + 2);
    const double r_left = A.rate(i - 1), r_right = A.rate(i);
    const double du = options.epsilon * std::pow(std::min(mid - lo, hi - mid), 2);
    const double sq = std::sqrt(du);
    int dir = 0;
    while (dir == 0) {
      const double w0 = w;
      const double w1 = w0 + sq * rng.normal();
      const double rate = w0 < mid ? r_left : r_right;
      ++s.euler_steps;
      if (w1 >= hi || w1 <= lo) {
        if (w1 >= hi2 || w1 <= lo2) throw ResolutionError("W step jumped past the next barrier");
        const double bar = w1 >= hi ? hi : lo;
        T += du * rate * (bar - w0) / (w1 - w0);
        w = bar;
        dir = w1 >= hi ? 1 : -1;
        break;
      }
      if (options.bridge_correction) {
        // exp(-32) ~ 1e-14: skip both exponentials far from the barriers.
        const double a_hi = 2.0 * (hi - w0) * (hi - w1) / du;
        const double a_lo = 2.0 * (w0 - lo) * (w1 - lo) / du;
        if (a_hi < 32.0 || a_lo < 32.0) {
          const double p_hi = std::exp(-a_hi);
          const double p_lo = std::exp(-a_lo);
          const double u = rng.uniform();
          if (u < p_hi) {
            dir = 1;
          } else if (u < p_hi + (1.0 - p_hi) * p_lo) {
            dir = -1;
          }
          if (dir != 0) {
            T += 0.5 * du * rate;
            w = dir > 0 ? hi : lo;
            break;
          }
        }
      }
      T += du * rate;
      w = w1;
    }
    i += dir;
    s.sigma.push_back(T);
    s.walk.push_back(i);
  }
  return s;
}

std::vector<std::int64_t> direct_rwre(const PotentialProfile& profile, std::int64_t m_max, Rng& rng) {
  if (m_max < 0) throw DomainError("negative step count");
  std::vector<std::int64_t> walk(static_cast<std::size_t>(m_max) + 1, 0);
  std::int64_t i = 0;
  for (std::int64_t m = 1; m <= m_max; ++m) {
    i += rng.bernoulli(profile.up_probability(i)) ? 1 : -1;
    walk[static_cast<std::size_t>(m)] = i;
  }
  return walk;
}

double sigma_deviation(const EmbeddingSchedule& schedule, double t) {
  if (t < 0.0) throw DomainError("negative time");
  const double n2 = static_cast<double>(schedule.n) * schedule.n;
  const auto M = static_cast<std::int64_t>(std::floor(n2 * t + 1e-9));
  if (static_cast<std::size_t>(M) >= schedule.sigma.size())
    throw OutOfRangeError("schedule too short for the requested time");
  double dev = 0.0;
  for (std::int64_t m = 0; m < M; ++m) {
    const double s = schedule.sigma[static_cast<std::size_t>(m)];
    dev = std::max({dev, std::abs(s - m / n2), std::abs(s - (m + 1) / n2)});
  }
  const double sM = schedule.sigma[static_cast<std::size_t>(M)];
  return std::max({dev, std::abs(sM - M / n2), std::abs(sM - t)});
}

ExitTimeStats exit_time_stats(std::size_t replicates, std::uint64_t seed, double dt, unsigned workers) {
  if (replicates == 0) throw ConfigError("need at least one replicate");
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  ExitTimeStats out;
  out.samples = parallel_map<double>(replicates, workers, [&](std::size_t r) {
    Rng rng(seed, r, Rng::kDynamics);
    const double sq = std::sqrt(dt);
    double w = 0.0, t = 0.0;
    for (;;) {
      const double w1 = w + sq * rng.normal();
      if (std::abs(w1) >= 1.0) {
        const double bar = w1 > 0.0 ? 1.0 : -1.0;
        return t + dt * (bar - w) / (w1 - w);
      }
      const double p_hi = std::exp(-2.0 * (1.0 - w) * (1.0 - w1) / dt);
      const double p_lo = std::exp(-2.0 * (1.0 + w) * (1.0 + w1) / dt);
      if ((p_hi > 1e-14 || p_lo > 1e-14) && rng.uniform() < 1.0 - (1.0 - p_hi) * (1.0 - p_lo))
        return t + 0.5 * dt;
      t += dt;
      w = w1;
    }
  });
  const MeanSe ms = mean_se(out.samples);
  out.mean = ms.mean;
  out.stderr_ = ms.se;
  out.median = median(out.samples);
  out.min = *std::min_element(out.samples.begin(), out.samples.end());
  return out;
}

std::vector<SigmaRow> sigma_convergence_report(std::span<const int> ns, double t, std::size_t replicates,
                                               std::uint64_t seed, const SigmaReportOptions& options,
                                               unsigned workers) {
  if (replicates == 0) throw ConfigError("need at least one replicate");
  std::vector<SigmaRow> rows;
  for (int n : ns) {
    const int top = static_cast<int>(std::lround(n * options.K1));
    const double bound = options.bound_factor * std::sqrt(static_cast<double>(n));
    const auto m_max = static_cast<std::int64_t>(std::floor(static_cast<double>(n) * n * t + 1e-9));
    const std::uint64_t s = seed + 1'000'003ULL * static_cast<std::uint64_t>(n);
    auto devs = parallel_map<double>(replicates, workers, [&](std::size_t r) {
      Rng env_rng(s, r, Rng::kEnvironment);
      Rng dyn(s, r, Rng::kDynamics);
      const auto xi = sample_site_environment(std::max(top - 1, 0), options.variance, bound, env_rng);
      const auto profile = build_potential(xi, n, options.K1, bound);
      return sigma_deviation(embed_rwre(profile, m_max, dyn, options.embedding), t);
    });
    SigmaRow row;
    row.n = n;
    row.median = median(devs);
    const MeanSe ms = mean_se(devs);
    row.mean = ms.mean;
    row.stderr_ = ms.se;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace snakesim
