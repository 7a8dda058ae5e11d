#include "snakesim/stats.hpp"

#include <algorithm>
#include <cmath>

#include "snakesim/errors.hpp"

namespace snakesim {

MeanSe mean_se(std::span<const double> xs) {
  Accumulator acc;
  for (double x : xs) acc.add(x);
  return acc.summary();
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw DomainError("median of an empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t h = xs.size() / 2;
  return xs.size() % 2 ? xs[h] : 0.5 * (xs[h - 1] + xs[h]);
}

void Accumulator::add(double x) {
  ++n_;
  const double d = x - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (x - mean_);
}

void Accumulator::merge(const Accumulator& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_);
  const double d = o.mean_ - mean_;
  mean_ += d * nb / (na + nb);
  m2_ += o.m2_ + d * d * na * nb / (na + nb);
  n_ += o.n_;
}

MeanSe Accumulator::summary() const {
  MeanSe s;
  s.count = n_;
  s.mean = mean_;
  if (n_ > 1) {
    s.sd = std::sqrt(std::max(0.0, m2_ / static_cast<double>(n_ - 1)));
    s.se = s.sd / std::sqrt(static_cast<double>(n_));
  }
  return s;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double kolmogorov_tail(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;  // series converges slowly; tail is 1 to double precision
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

namespace {

double ks_p(double d, double ne) {
  const double s = std::sqrt(ne);
  return kolmogorov_tail((s + 0.12 + 0.11 / s) * d);
}

}  // namespace

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b, std::size_t min_size) {
  if (a.size() < min_size || b.size() < min_size) throw DomainError("KS samples are too small");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    // Advance past every copy of the smaller value so ties are compared once.
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  KsResult r;
  r.statistic = d;
  r.p_value = ks_p(d, na * nb / (na + nb));
  return r;
}

KsResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf,
                       std::size_t min_size) {
  if (sample.size() < min_size) throw DomainError("KS sample is too small");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  KsResult r;
  r.statistic = d;
  r.p_value = ks_p(d, n);
  return r;
}

double correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("correlation needs paired samples");
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double lag1_autocorrelation(std::span<const double> xs) {
  if (xs.size() < 3) return 0.0;
  return correlation(xs.subspan(0, xs.size() - 1), xs.subspan(1));
}

}  // namespace snakesim
