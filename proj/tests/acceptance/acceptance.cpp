// Acceptance run: one PASS/FAIL line per criterion at full scale.
// Tolerances live inside the checks; runtime budgets are pinned here.
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "snakesim/experiments.hpp"

using namespace snakesim;

namespace {

struct Criterion {
  int number;
  const char* title;
  const char* experiment;
  std::function<CheckResult(const ExperimentSpec&)> check;
  double budget_seconds;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> c{
      {1, "survival oracle vs closed form", "survival", check_survival_oracle, 1.0},
      {2, "critical survival 1/(k+1)", "survival", check_critical_survival, 1.0},
      {3, "rescaled survival limit h(1,1)", "survival", check_h_limit, 1.0},
      {4, "Monte Carlo survival, degenerate environment", "survival", check_survival_mc, 300.0},
      {5, "survival upper bound, constant kernel", "survival", check_survival_upper_bound, 600.0},
      {6, "mass bounds and heat semigroup", "branching-mp", check_mass_bounds, 300.0},
      {7, "excursion reversal, pathwise and in law", "reversal", check_reversal, 60.0},
      {8, "occupation identity gap", "occupation", check_occupation_identity, 120.0},
      {9, "snake occupation vs branching mass in law", "theorem1", check_law_equality, 900.0},
      {10, "martingale-problem residuals", "branching-mp", check_mp_residuals, 900.0},
      {11, "Doob decomposition of the exponential functional", "functional", check_decomposition, 1200.0},
      {12, "diffusion embedding and reflected contour", "brox", check_appendix, 1800.0},
  };
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  // Optional argument: a single criterion number.
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failures = 0;
  for (const auto& c : criteria()) {
    if (only && c.number != only) continue;
    bool ok = false;
    std::string detail;
    double seconds = 0.0;
    try {
      const CheckResult r = c.check(default_spec(c.experiment));
      seconds = r.seconds;
      const bool in_budget = r.seconds <= c.budget_seconds;
      ok = r.passed() && r.failed_replicates == 0 && in_budget;
      for (const auto& s : r.stats)
        if (s.verdict == Verdict::fail) detail += " " + s.name + "=" + std::to_string(s.estimate);
      if (r.failed_replicates) detail += " failed_replicates=" + std::to_string(r.failed_replicates);
      if (!in_budget) detail += " over budget";
    } catch (const std::exception& e) {
      detail = std::string(" error: ") + e.what();
    }
    failures += !ok;
    std::printf("%s C%-2d %s (%.2fs of %.0fs)%s\n", ok ? "PASS" : "FAIL", c.number, c.title, seconds,
                c.budget_seconds, detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
