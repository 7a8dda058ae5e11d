#include "snakesim/snake.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "snakesim/errors.hpp"

namespace snakesim {

namespace {

constexpr double kLatticeTol = 1e-9;

double distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s);
}

}  // namespace

int SnakeConfig::top() const {
  return static_cast<int>(std::lround(n * K1));
}

// --- Snake ----------------------------------------------------------------------

Snake::Snake(const SnakeConfig& config)
    : n_(config.n),
      dim_(config.dim()),
      top_(config.top()),
      sd_(1.0 / std::sqrt(static_cast<double>(config.n))) {
  if (n_ <= 0) throw ConfigError("n must be positive");
  if (dim_ <= 0) throw ConfigError("root must have at least one coordinate");
  if (top_ < 1) throw ConfigError("n K1 must be at least 1");
  path_ = config.root;
}

double Snake::up_probability(Environment& env) const {
  if (level_ == 0) return 1.0;
  if (level_ == top_) return 0.0;
  return branch_probabilities(env.xi(level_, tip()), n_).up;
}

void Snake::move(bool up, Rng& rng) {
  if (up) {
    const std::size_t base = path_.size() - static_cast<std::size_t>(dim_);
    for (int a = 0; a < dim_; ++a) path_.push_back(path_[base + a] + sd_ * rng.normal());
    ++level_;
  } else {
    path_.resize(path_.size() - static_cast<std::size_t>(dim_));
    --level_;
  }
  ++k_;
}

bool Snake::step(Environment& env, Rng& rng) {
  bool up;
  if (level_ == 0) {
    up = true;
  } else if (level_ == top_) {
    up = false;
  } else {
    up = rng.uniform() < up_probability(env);
  }
  move(up, rng);
  return up;
}

// --- ContourRecord --------------------------------------------------------------

void ContourRecord::push(int level, std::span<const double> tip) {
  levels.push_back(level);
  tips.insert(tips.end(), tip.begin(), tip.end());
}

void ContourRecord::validate() const {
  if (levels.empty()) throw PreconditionError("empty contour record");
  if (tips.size() != levels.size() * static_cast<std::size_t>(dim))
    throw PreconditionError("tip storage does not match the level count");
  if (levels.front() != 0) throw PreconditionError("contour must start at level 0");
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (levels[k] < 0 || levels[k] > top)
      throw PreconditionError("level out of [0, top] at state " + std::to_string(k));
    if (k + 1 == levels.size()) break;
    const int diff = levels[k + 1] - levels[k];
    if (diff != 1 && diff != -1)
      throw PreconditionError("non-unit step at state " + std::to_string(k));
    if (levels[k] == 0 && diff != 1) throw PreconditionError("level 0 not followed by an up move");
    if (levels[k] == top && diff != -1) throw PreconditionError("top level not followed by a down move");
  }
}

std::vector<double> ContourRecord::reconstruct_path(std::size_t k) const {
  const int m = levels.at(k);
  std::vector<double> path(static_cast<std::size_t>(m + 1) * dim);
  int need = m;
  // The newest visit at or before k to each age carries that age's point.
  for (std::size_t i = k + 1; i-- > 0 && need >= 0;) {
    if (levels[i] == need) {
      auto t = tip(i);
      std::copy(t.begin(), t.end(), path.begin() + static_cast<std::ptrdiff_t>(need) * dim);
      --need;
    }
  }
  return path;
}

// --- LocalTimeLedger ------------------------------------------------------------

LocalTimeLedger LocalTimeLedger::from_record(const ContourRecord& record) {
  if (record.levels.empty()) throw PreconditionError("empty contour record");
  LocalTimeLedger l;
  l.n_ = record.n;
  l.top_ = record.top;
  l.end_ = record.steps();
  l.up_.assign(static_cast<std::size_t>(record.top + 1), {});
  l.down_.assign(static_cast<std::size_t>(record.top + 1), 0);
  for (std::size_t i = 0; i + 1 < record.levels.size(); ++i) {
    const int m = record.levels[i];
    if (record.levels[i + 1] == m + 1)
      l.up_[static_cast<std::size_t>(m)].push_back(static_cast<std::int64_t>(i));
    else
      ++l.down_[static_cast<std::size_t>(m - 1)];
  }
  l.forced_terminal_ = record.stopped_at_tau && record.levels.back() == 0;
  return l;
}

const std::vector<std::int64_t>& LocalTimeLedger::upcrossings(int m) const {
  if (m < 0 || m > top_) throw DomainError("level outside [0, top]");
  return up_[static_cast<std::size_t>(m)];
}

std::int64_t LocalTimeLedger::downcrossings(int m) const {
  if (m < 0 || m > top_) throw DomainError("level outside [0, top]");
  return down_[static_cast<std::size_t>(m)];
}

std::size_t LocalTimeLedger::available(int m) const {
  return upcrossings(m).size() + ((m == 0 && forced_terminal_) ? 1 : 0);
}

std::optional<std::int64_t> LocalTimeLedger::entry(int m, std::size_t j) const {
  const auto& v = upcrossings(m);
  if (j < v.size()) return v[j];
  if (m == 0 && forced_terminal_ && j == v.size()) return static_cast<std::int64_t>(end_);
  return std::nullopt;
}

int LocalTimeLedger::level_of(double a) const {
  if (!(a >= 0.0) || a > static_cast<double>(top_) / n_ + kLatticeTol)
    throw DomainError("level outside [0, K1]");
  return static_cast<int>(std::floor(a * n_ + kLatticeTol));
}

std::int64_t LocalTimeLedger::count_through(int m, std::int64_t k) const {
  const auto& v = upcrossings(m);
  auto c = static_cast<std::int64_t>(std::upper_bound(v.begin(), v.end(), k) - v.begin());
  if (m == 0 && forced_terminal_ && k >= static_cast<std::int64_t>(end_)) ++c;
  return c;
}

double LocalTimeLedger::local_time_steps(int m, std::int64_t k) const {
  return static_cast<double>(count_through(m, k)) / n_;
}

double LocalTimeLedger::local_time(double a, double s) const {
  if (s < 0.0) throw DomainError("negative time");
  const auto k = static_cast<std::int64_t>(std::floor(s * n_ * n_ + kLatticeTol));
  return local_time_steps(level_of(a), k);
}

std::int64_t LocalTimeLedger::inverse_index(int m, double r) const {
  if (r < 0.0) throw DomainError("negative local-time mass");
  const auto j = static_cast<std::size_t>(std::floor(r * n_ + kLatticeTol));
  const auto e = entry(m, j);
  if (!e) throw OutOfRangeError("local-time mass beyond the run");
  return *e;
}

double LocalTimeLedger::inverse_local_time(double a, double r) const {
  return static_cast<double>(inverse_index(level_of(a), r)) / (static_cast<double>(n_) * n_);
}

double LocalTimeLedger::terminal(int m) const { return static_cast<double>(available(m)) / n_; }

// --- run_snake ------------------------------------------------------------------

SnakeRun run_snake(const SnakeConfig& config, Environment& env, Rng& rng, const Horizon& horizon) {
  if (!horizon.steps && !horizon.c0) throw ConfigError("horizon needs a step count or c0");
  if (horizon.steps && *horizon.steps <= 0) throw ConfigError("step count must be positive");
  if (horizon.c0 && !(*horizon.c0 > 0.0)) throw ConfigError("c0 must be positive");
  Snake snake(config);
  ContourRecord rec;
  rec.n = config.n;
  rec.dim = config.dim();
  rec.top = config.top();
  rec.push(0, snake.tip());

  // tau^{n,0}_{c0}: the state where the (floor(c0 n) + 1)-th upcrossing of 0 starts.
  const std::int64_t excursions =
      horizon.c0 ? static_cast<std::int64_t>(std::floor(*horizon.c0 * config.n + kLatticeTol)) : 0;
  std::int64_t completed = 0;
  const std::int64_t budget = horizon.steps ? std::min(*horizon.steps, horizon.max_steps) : horizon.max_steps;

  auto done = [&] { return horizon.c0 && snake.level() == 0 && completed >= excursions; };
  while (!done()) {
    if (snake.step_index() >= budget) {
      if (horizon.c0 || (horizon.steps && *horizon.steps > horizon.max_steps)) rec.truncated = true;
      break;
    }
    snake.step(env, rng);
    rec.push(snake.level(), snake.tip());
    if (snake.level() == 0) ++completed;
  }
  rec.stopped_at_tau = horizon.c0.has_value() && !rec.truncated;
  SnakeRun run{std::move(rec), {}};
  run.ledger = LocalTimeLedger::from_record(run.record);
  return run;
}

// --- Occupation -----------------------------------------------------------------

namespace {

struct Window {
  std::int64_t lo;  // exclusive
  std::int64_t hi;  // inclusive
};

Window window_of(const LocalTimeLedger& ledger, double r1, double r2, double a) {
  if (!(r1 >= 0.0) || !(r1 < r2)) throw DomainError("window needs 0 <= r1 < r2");
  const int m = ledger.level_of(a);
  return {ledger.inverse_index(m, r1), ledger.inverse_index(m, r2)};
}

// Upcrossing indices of level m that fall in the window, including the forced terminal one.
template <class Fn>
void for_each_in_window(const LocalTimeLedger& ledger, const Window& w, int m, Fn&& fn) {
  const auto& v = ledger.upcrossings(m);
  auto it = std::upper_bound(v.begin(), v.end(), w.lo);
  for (; it != v.end() && *it <= w.hi; ++it) fn(*it);
  if (ledger.available(m) > v.size() && static_cast<std::int64_t>(ledger.end_index()) > w.lo &&
      static_cast<std::int64_t>(ledger.end_index()) <= w.hi)
    fn(static_cast<std::int64_t>(ledger.end_index()));
}

}  // namespace

double occupation_measure(const ContourRecord& record, const LocalTimeLedger& ledger, double r1,
                          double r2, double a, double t, const TestFunction& phi) {
  if (t < a) throw DomainError("target level below window level");
  const Window w = window_of(ledger, r1, r2, a);
  const int m = ledger.level_of(t);
  double s = 0.0;
  for_each_in_window(ledger, w, m, [&](std::int64_t i) { s += phi(record.tip(static_cast<std::size_t>(i))); });
  return s / record.n;
}

std::vector<double> occupation_by_level(const ContourRecord& record, const LocalTimeLedger& ledger,
                                        double r1, double r2, double a, const TestFunction& phi) {
  const Window w = window_of(ledger, r1, r2, a);
  std::vector<double> out(static_cast<std::size_t>(ledger.top() + 1), 0.0);
  for (int m = ledger.level_of(a); m <= ledger.top(); ++m) {
    double s = 0.0;
    for_each_in_window(ledger, w, m,
                       [&](std::int64_t i) { s += phi(record.tip(static_cast<std::size_t>(i))); });
    out[static_cast<std::size_t>(m)] = s / record.n;
  }
  return out;
}

std::vector<double> occupation_atoms(const ContourRecord& record, const LocalTimeLedger& ledger,
                                     double r1, double r2, double a, int m) {
  const Window w = window_of(ledger, r1, r2, a);
  std::vector<double> atoms;
  for_each_in_window(ledger, w, m, [&](std::int64_t i) {
    auto t = record.tip(static_cast<std::size_t>(i));
    atoms.insert(atoms.end(), t.begin(), t.end());
  });
  return atoms;
}

OccupationIdentityReport occupation_identity_report(const ContourRecord& record,
                                                    const LocalTimeLedger& ledger, double t,
                                                    double y) {
  const int n = record.n;
  const auto k_end = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(t * n * n + kLatticeTol)),
                                            static_cast<std::int64_t>(record.steps()));
  const int M = std::min(record.top, static_cast<int>(std::floor(y * n + kLatticeTol)));
  OccupationIdentityReport r;
  double sum = 0.0;
  for (int m = 0; m <= M; ++m) sum += ledger.local_time_steps(m, k_end);
  r.lhs_raw = sum / n;
  r.lhs = 2.0 * r.lhs_raw;
  std::int64_t visits = 0;
  for (std::int64_t k = 0; k <= k_end; ++k)
    if (record.levels[static_cast<std::size_t>(k)] <= M) ++visits;
  r.rhs = static_cast<double>(visits) / (static_cast<double>(n) * n);
  r.gap = std::abs(r.lhs - r.rhs);
  return r;
}

// --- Reordering -----------------------------------------------------------------

ContourRecord reverse_transform(const ContourRecord& record, int z) {
  record.validate();
  if (record.levels.back() != 0) throw PreconditionError("record must end at level 0");
  if (z < 0 || z > record.top) throw DomainError("reversal level outside [0, top]");
  ContourRecord out = record;
  const std::size_t N = record.levels.size();
  const int d = record.dim;
  auto copy_state = [&](std::size_t from, std::size_t to) {
    out.levels[to] = record.levels[from];
    std::copy_n(record.tips.begin() + static_cast<std::ptrdiff_t>(from * d), d,
                out.tips.begin() + static_cast<std::ptrdiff_t>(to * d));
  };

  std::size_t k = 0;
  std::vector<std::size_t> visits;
  while (k < N) {
    if (record.levels[k] < z) {
      ++k;
      continue;
    }
    // Maximal block [s, e] at or above z; it starts and ends at z.
    const std::size_t s = k;
    std::size_t e = s;
    while (e + 1 < N && record.levels[e + 1] >= z) ++e;
    visits.clear();
    for (std::size_t i = s; i <= e; ++i)
      if (record.levels[i] == z) visits.push_back(i);
    // Excursion j occupies states (visits[j], visits[j+1]]; write them back to front.
    std::size_t pos = s + 1;
    for (std::size_t j = visits.size() - 1; j-- > 0;)
      for (std::size_t i = visits[j] + 1; i <= visits[j + 1]; ++i) copy_state(i, pos++);
    k = e + 1;
  }
  return out;
}

ContourRecord full_reversal(const ContourRecord& record) {
  ContourRecord cur = record;
  for (int z = 0; z < record.top; ++z) cur = reverse_transform(cur, z);
  return cur;
}

ContourRecord time_reversed(const ContourRecord& record) {
  ContourRecord out = record;
  const std::size_t N = record.levels.size();
  const int d = record.dim;
  for (std::size_t k = 0; k < N; ++k) {
    out.levels[k] = record.levels[N - 1 - k];
    std::copy_n(record.tips.begin() + static_cast<std::ptrdiff_t>((N - 1 - k) * d), d,
                out.tips.begin() + static_cast<std::ptrdiff_t>(k * d));
  }
  return out;
}

// --- Diagnostics ----------------------------------------------------------------

namespace {
struct DisplacementLevels {
  int base;
  int target;
  double threshold;
};

DisplacementLevels displacement_levels(const ContourRecord& record, double a, double delta, double eta) {
  if (!(delta > 0.0) || a < 0.0) throw DomainError("need a >= 0 and delta > 0");
  return {static_cast<int>(std::floor(a * record.n + kLatticeTol)),
          static_cast<int>(std::floor((a + delta) * record.n + kLatticeTol)), std::pow(delta, 0.5 - eta)};
}
}  // namespace

std::int64_t displacement_count(const ContourRecord& record, double a, double delta, double eta) {
  const auto lv = displacement_levels(record, a, delta, eta);
  if (lv.target >= record.top) return 0;  // no upcrossing of the top level exists
  const int d = record.dim;
  std::vector<double> path;
  std::int64_t count = 0;
  for (std::size_t k = 0; k < record.levels.size(); ++k) {
    const int m = record.levels[k];
    path.resize(static_cast<std::size_t>(m + 1) * d);
    auto t = record.tip(k);
    std::copy(t.begin(), t.end(), path.begin() + static_cast<std::ptrdiff_t>(m) * d);
    if (m == lv.target && k + 1 < record.levels.size() && record.levels[k + 1] == m + 1) {
      std::span<const double> base(path.data() + static_cast<std::size_t>(lv.base) * d, static_cast<std::size_t>(d));
      if (distance(t, base) > lv.threshold) ++count;
    }
  }
  return count;
}

std::int64_t displacement_count_bruteforce(const ContourRecord& record, double a, double delta, double eta) {
  const auto lv = displacement_levels(record, a, delta, eta);
  if (lv.target >= record.top) return 0;
  const LocalTimeLedger ledger = LocalTimeLedger::from_record(record);
  const int d = record.dim;
  std::int64_t count = 0;
  for (std::int64_t i : ledger.upcrossings(lv.target)) {
    const auto path = record.reconstruct_path(static_cast<std::size_t>(i));
    std::span<const double> base(path.data() + static_cast<std::size_t>(lv.base) * d, static_cast<std::size_t>(d));
    if (distance(record.tip(static_cast<std::size_t>(i)), base) > lv.threshold) ++count;
  }
  return count;
}

}  // namespace snakesim
