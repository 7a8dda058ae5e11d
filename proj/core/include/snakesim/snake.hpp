#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "snakesim/environment.hpp"
#include "snakesim/rng.hpp"

namespace snakesim {

using TestFunction = std::function<double(std::span<const double>)>;

struct SnakeConfig {
  int n = 10;
  double K1 = 1.0;
  std::vector<double> root{0.0};

  int dim() const { return static_cast<int>(root.size()); }
  // Reflection level n K1 (rounded to the lattice).
  int top() const;
};

/// Live snake: contour level m and the lattice tip path at ages 0, 1/n, ..., m/n.
class Snake {
 public:
  explicit Snake(const SnakeConfig& config);

  int n() const { return n_; }
  int dim() const { return dim_; }
  int top() const { return top_; }
  int level() const { return level_; }
  std::int64_t step_index() const { return k_; }
  std::span<const double> tip() const { return point(level_); }
  std::span<const double> point(int age) const {
    return {path_.data() + static_cast<std::size_t>(age) * dim_, static_cast<std::size_t>(dim_)};
  }

  // Probability of an up move from the current state (1 at level 0, 0 at the top).
  double up_probability(Environment& env) const;
  bool forced() const { return level_ == 0 || level_ == top_; }

  // Up appends tip + N(0, I/n); down erases the tip. Forced moves use no draws.
  bool step(Environment& env, Rng& rng);
  void move(bool up, Rng& rng);

 private:
  int n_;
  int dim_;
  int top_;
  int level_ = 0;
  std::int64_t k_ = 0;
  double sd_;
  std::vector<double> path_;
};

/// Levels and tips for states 0..N (N transitions).
struct ContourRecord {
  int n = 1;
  int dim = 1;
  int top = 1;
  std::vector<int> levels;
  std::vector<double> tips;
  // Set when the run stopped by the inverse-local-time rule at level 0: the next
  // (forced) upcrossing from 0 is then part of the record's local time.
  bool stopped_at_tau = false;
  bool truncated = false;

  std::size_t states() const { return levels.size(); }
  std::size_t steps() const { return levels.empty() ? 0 : levels.size() - 1; }
  std::span<const double> tip(std::size_t k) const {
    return {tips.data() + k * dim, static_cast<std::size_t>(dim)};
  }
  bool forced(std::size_t k) const { return levels[k] == 0 || levels[k] == top; }
  void push(int level, std::span<const double> tip);

  // Throws PreconditionError on broken contour invariants.
  void validate() const;

  // Lattice path (ages 0..level) at state k by backward scan.
  std::vector<double> reconstruct_path(std::size_t k) const;
};

/// Per-level upcrossing indices: transition i with Y_i = m, Y_{i+1} = m + 1.
/// Local time counts transitions i <= floor(s n^2).
class LocalTimeLedger {
 public:
  static LocalTimeLedger from_record(const ContourRecord& record);

  int n() const { return n_; }
  int top() const { return top_; }
  std::size_t end_index() const { return end_; }

  // Realized upcrossing indices of level m (strictly increasing).
  const std::vector<std::int64_t>& upcrossings(int m) const;
  // Transitions m+1 -> m.
  std::int64_t downcrossings(int m) const;
  // Upcrossings available to queries, including the forced terminal one.
  std::size_t available(int m) const;

  int level_of(double a) const;

  // n * local time at level m after state k.
  std::int64_t count_through(int m, std::int64_t k) const;
  double local_time_steps(int m, std::int64_t k) const;
  double local_time(double a, double s) const;

  // inf{k : l^{n,m}_k > r} as a step index.
  std::int64_t inverse_index(int m, double r) const;
  double inverse_local_time(double a, double r) const;

  double terminal(int m) const;

 private:
  std::optional<std::int64_t> entry(int m, std::size_t j) const;

  int n_ = 1;
  int top_ = 1;
  std::size_t end_ = 0;
  bool forced_terminal_ = false;
  std::vector<std::vector<std::int64_t>> up_;
  std::vector<std::int64_t> down_;
};

struct Horizon {
  std::optional<std::int64_t> steps;
  std::optional<double> c0;
  std::int64_t max_steps = 200'000'000;
};

struct SnakeRun {
  ContourRecord record;
  LocalTimeLedger ledger;
};

/// Runs the snake for a fixed number of steps or until tau^{n,0}_{c0}.
SnakeRun run_snake(const SnakeConfig& config, Environment& env, Rng& rng, const Horizon& horizon);

// ---------------------------------------------------------------------------
// Occupation measures
// ---------------------------------------------------------------------------

/// Integral of phi(tip) against l^{n,t} over (tau^{n,a}_{r1}, tau^{n,a}_{r2}].
double occupation_measure(const ContourRecord& record, const LocalTimeLedger& ledger, double r1,
                          double r2, double a, double t, const TestFunction& phi);

/// Same window, every target level m = 0..top at once.
std::vector<double> occupation_by_level(const ContourRecord& record, const LocalTimeLedger& ledger,
                                        double r1, double r2, double a, const TestFunction& phi);

/// Tip positions carried by the window's upcrossings of level m (the atoms of
/// X_{a, m/n}, each with mass 1/n).
std::vector<double> occupation_atoms(const ContourRecord& record, const LocalTimeLedger& ledger,
                                     double r1, double r2, double a, int m);

struct OccupationIdentityReport {
  double lhs_raw = 0.0;  // (1/n) sum_{m/n <= y} l^{n, m/n}_t
  double lhs = 0.0;      // 2 lhs_raw, the occupation-density normalization
  double rhs = 0.0;      // n^{-2} #{k <= t n^2 : Y_k <= y}
  double gap = 0.0;      // |lhs - rhs|
};

OccupationIdentityReport occupation_identity_report(const ContourRecord& record,
                                                    const LocalTimeLedger& ledger, double t,
                                                    double y);

// ---------------------------------------------------------------------------
// Excursion reordering
// ---------------------------------------------------------------------------

/// Within each maximal stretch at or above level z, reverse the order of the
/// excursions from z; each excursion keeps its internal orientation.
ContourRecord reverse_transform(const ContourRecord& record, int z);

/// T_{top-1} o ... o T_0.
ContourRecord full_reversal(const ContourRecord& record);

/// The states of `record` in reverse order.
ContourRecord time_reversed(const ContourRecord& record);

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

/// Upcrossings of level floor((a + delta) n) whose tip lies farther than
/// delta^{1/2 - eta} from the same path's point at age floor(a n)/n.
std::int64_t displacement_count(const ContourRecord& record, double a, double delta, double eta);

/// Independent recount by per-event path reconstruction.
std::int64_t displacement_count_bruteforce(const ContourRecord& record, double a, double delta,
                                           double eta);

}  // namespace snakesim
