#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "snakesim/rng.hpp"

namespace snakesim {

/// Tent map: period 2 K1, h(x) = |x| on [-K1, K1].
double tent(double x, double K1);

/// Piecewise-constant potential on unit site intervals. V^n(x) on [i, i+1) is
/// the sum of log(p_down/p_up) over sites 1..i; the reflected version mirrors
/// it through the tent map with period 2 n K1 in site units.
struct PotentialProfile {
  int n = 1;
  int top = 1;                    // n K1
  std::vector<double> increments;  // increments[i] for sites 1..top-1; [0] = 0
  std::vector<double> values;      // V^n on [i, i+1), i = 0..top-1

  // V-hat on [i, i+1) for any integer i.
  double segment(std::int64_t i) const;
  // V^n(x) for 0 <= x < top, and V-hat^n(x) for any real x (site units).
  double value(double x) const;
  double reflected(double x) const;
  // Up probability of the embedded walk at site i, read off the potential.
  double up_probability(std::int64_t i) const;

  // Profile with every segment equal to c (a pure gauge shift).
  static PotentialProfile constant(int n, int top, double c);
};

/// `xi[i-1]` holds xi(i) for sites i = 1..top-1; |xi| <= bound is required.
PotentialProfile build_potential(std::span<const double> xi, int n, double K1, double bound);

/// Site variables: i.i.d. N(0, variance) clipped to [-bound, bound].
std::vector<double> sample_site_environment(int count, double variance, double bound, Rng& rng);

/// A_x = int_0^x exp(V-hat(n y)) dy in the diffusion's scaled coordinate.
class ScaleFunction {
 public:
  explicit ScaleFunction(const PotentialProfile& profile);

  // A at the lattice node i/n.
  double node(std::int64_t i) const;
  double operator()(double x) const;
  double inverse(double w) const;
  // exp(-2 V-hat(n x)) on [i/n, (i+1)/n): the clock rate.
  double rate(std::int64_t segment) const;
  std::int64_t segment_of(double x) const;
  const PotentialProfile& profile() const { return *profile_; }

 private:
  const PotentialProfile* profile_;
  std::int64_t period_;
  std::vector<double> prefix_;  // A at nodes 0..period
  std::vector<double> exp_v_;
  std::vector<double> rate_;
};

struct BmrePath {
  std::vector<double> times;
  std::vector<double> values;
  std::int64_t steps = 0;
};

/// Z(t) = A^{-1}(W(T^{-1}(t))) with T accumulated by the left-endpoint rule on a
/// W-grid of spacing du.
BmrePath simulate_bmre(const PotentialProfile& profile, std::span<const double> times, double du, Rng& rng);

struct EmbeddingSchedule {
  int n = 1;
  std::vector<double> sigma;        // sigma_0 = 0, ...
  std::vector<std::int64_t> walk;   // n Z(sigma_m)
  std::int64_t euler_steps = 0;
};

struct EmbeddingOptions {
  // W step = epsilon * min(barrier distances)^2, fixed within each crossing.
  double epsilon = 1e-2;
  bool bridge_correction = true;
};

/// Successive first passages of Z by 1/n, detected on W between the barriers
/// A((i-1)/n) and A((i+1)/n).
EmbeddingSchedule embed_rwre(const PotentialProfile& profile, std::int64_t m_max, Rng& rng,
                             const EmbeddingOptions& options = {});

/// The same walk sampled directly from its transition law.
std::vector<std::int64_t> direct_rwre(const PotentialProfile& profile, std::int64_t m_max, Rng& rng);

/// sup_{0 <= s <= t} |sigma_{floor(n^2 s)} - s|.
double sigma_deviation(const EmbeddingSchedule& schedule, double t);

struct ExitTimeStats {
  double mean = 0.0;
  double stderr_ = 0.0;
  double median = 0.0;
  double min = 0.0;
  std::vector<double> samples;
};

/// theta = inf{t : |W(t)| = 1} by Euler steps with bridge crossing correction.
ExitTimeStats exit_time_stats(std::size_t replicates, std::uint64_t seed, double dt = 1e-4,
                              unsigned workers = 0);

struct SigmaRow {
  int n = 0;
  double median = 0.0;
  double mean = 0.0;
  double stderr_ = 0.0;
};

struct SigmaReportOptions {
  double variance = 1.0;
  double K1 = 1.0;
  // Site bound as a multiple of sqrt(n).
  double bound_factor = 0.5;
  EmbeddingOptions embedding{};
};

std::vector<SigmaRow> sigma_convergence_report(std::span<const int> ns, double t, std::size_t replicates,
                                               std::uint64_t seed, const SigmaReportOptions& options = {},
                                               unsigned workers = 0);

}  // namespace snakesim
