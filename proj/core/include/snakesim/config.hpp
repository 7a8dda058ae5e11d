#pragma once

#include <filesystem>
#include <istream>
#include <string>

#include "snakesim/harness.hpp"

namespace snakesim {

/// INI experiment file. Sections and keys:
///   [experiment]     seed, replicates, workers, n (comma list)
///   [environment]    n, nu, dim, kernel (zero|constant|sqexp), variance, length_scale,
///                    mode (random|deterministic|smooth_gaussian), field, spectral_order,
///                    xi_bound, grid_origin, grid_spacing, grid_points
///   [horizon]        delta, t, c0, r, K1
///   [test_functions] phi (comma list: 1, cos, const:<c>, bump:<m>:<s>)
///   [params]         free-form numeric knobs for a module
/// Keys absent from the file keep the values of `base`. Unknown sections or
/// keys raise ValidationError naming "section.key".
ExperimentSpec read_spec(std::istream& in, ExperimentSpec base);
ExperimentSpec load_spec(const std::filesystem::path& path, ExperimentSpec base);

/// Serializes every field so that read_spec(spec_to_ini(s), default) == s.
std::string spec_to_ini(const ExperimentSpec& spec);

CovarianceKernel parse_kernel(const std::string& name, double variance, double length_scale);

}  // namespace snakesim
