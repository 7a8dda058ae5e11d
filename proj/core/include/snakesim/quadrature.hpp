#pragma once

#include <functional>
#include <span>
#include <vector>

namespace snakesim {

/// Physicists' Gauss-Hermite rule: sum_i w_i f(x_i) ~ int f(x) e^{-x^2} dx.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Golub-Welsch; cached per order. Order must be >= 2.
const GaussHermiteRule& gauss_hermite(int order);

/// Tensor-product rule for E f(mean + sd Z), Z ~ N(0, I_d), flattened as
/// (points: count x dim, probability weights: count).
struct GaussianCubature {
  int dim = 1;
  std::vector<double> offsets;  // count x dim, already scaled by sd
  std::vector<double> weights;  // sum to 1
  std::size_t size() const { return weights.size(); }
};

GaussianCubature gaussian_cubature(int order, int dim, double sd);

double expect_normal(const std::function<double(double)>& f, double mean, double sd, int order = 40);

}  // namespace snakesim
