#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace snakesim {

struct MeanSe {
  double mean = 0.0;
  double sd = 0.0;
  double se = 0.0;  // sd / sqrt(count)
  std::size_t count = 0;
};

/// Sample mean, unbiased SD and SE = SD / sqrt(R).
MeanSe mean_se(std::span<const double> xs);

double median(std::vector<double> xs);

/// Running mean/variance (Welford); merge is associative.
class Accumulator {
 public:
  void add(double x);
  void merge(const Accumulator& other);
  MeanSe summary() const;
  std::size_t count() const { return n_; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

double normal_cdf(double x);

/// Asymptotic Kolmogorov tail P(K > lambda).
double kolmogorov_tail(double lambda);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample KS with ties handled on the merged support; p-value from the
/// asymptotic law with the usual small-sample correction. Both samples need
/// at least `min_size` entries.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b, std::size_t min_size = 50);

KsResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf,
                       std::size_t min_size = 50);

/// Pearson correlation of consecutive terms; 0 when undefined.
double lag1_autocorrelation(std::span<const double> xs);

/// Correlation of paired samples; 0 when undefined.
double correlation(std::span<const double> x, std::span<const double> y);

}  // namespace snakesim
