#pragma once

#include <string>
#include <vector>

#include "snakesim/harness.hpp"

namespace snakesim {

/// Built-in defaults for each experiment id, at acceptance scale. An empty
/// n_list means every check uses its own n values.
ExperimentSpec default_spec(const std::string& id);

/// Every check belonging to spec.id, in a fixed order.
std::vector<CheckResult> run_checks(const ExperimentSpec& spec);

// Individual checks. Each reads seed, workers, replicates, n_list and params
// from the spec; CheckResult::seconds holds the wall time.

// Iterated generating function vs closed form, k = n.
CheckResult check_survival_oracle(const ExperimentSpec& spec);
// b = 0: survival(k) = 1/(k+1).
CheckResult check_critical_survival(const ExperimentSpec& spec);
// n * survival(b = 1, k = n) -> h(1, 1).
CheckResult check_h_limit(const ExperimentSpec& spec);
// Monte Carlo survival in the degenerate environment vs the exact chain.
CheckResult check_survival_mc(const ExperimentSpec& spec);
// Monte Carlo survival under a constant kernel vs the h(b, delta) bound.
CheckResult check_survival_upper_bound(const ExperimentSpec& spec);
// Mean, maximal-inequality and semigroup bounds for the total mass.
CheckResult check_mass_bounds(const ExperimentSpec& spec);
// Martingale-problem residuals of the snake occupation process, plus the
// informational drift-factor adjudication.
CheckResult check_mp_residuals(const ExperimentSpec& spec);
// Contour sanity: interior up-frequency, ledger consistency, local-time round
// trip, displacement recount.
CheckResult check_snake_basics(const ExperimentSpec& spec);
// Pathwise full reversal and per-level distributional invariance.
CheckResult check_reversal(const ExperimentSpec& spec);
// Level-sum of local times vs occupation count.
CheckResult check_occupation_identity(const ExperimentSpec& spec);
// Snake occupation mass vs forward branching mass in law.
CheckResult check_law_equality(const ExperimentSpec& spec);
// Doob decomposition of the exponential functional.
CheckResult check_decomposition(const ExperimentSpec& spec);
// Exit time, embedding clock convergence, embedded vs direct walk, and the
// snake contour vs the reflected diffusion.
CheckResult check_appendix(const ExperimentSpec& spec);

}  // namespace snakesim
