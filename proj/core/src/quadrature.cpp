#include "snakesim/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "snakesim/errors.hpp"

namespace snakesim {

const GaussHermiteRule& gauss_hermite(int order) {
  if (order < 2) throw ConfigError("quadrature order must be >= 2");
  static std::mutex mutex;
  static std::map<int, GaussHermiteRule> cache;
  std::lock_guard lock(mutex);
  if (auto it = cache.find(order); it != cache.end()) return it->second;

  // Jacobi matrix of the Hermite recurrence: off-diagonal sqrt(k/2).
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  GaussHermiteRule rule;
  const double mu0 = std::sqrt(std::numbers::pi);
  for (int i = 0; i < order; ++i) {
    rule.nodes.push_back(eig.eigenvalues()[i]);
    const double v = eig.eigenvectors()(0, i);
    rule.weights.push_back(mu0 * v * v);
  }
  return cache.emplace(order, std::move(rule)).first->second;
}

GaussianCubature gaussian_cubature(int order, int dim, double sd) {
  const auto& rule = gauss_hermite(order);
  GaussianCubature c;
  c.dim = dim;
  std::size_t count = 1;
  for (int a = 0; a < dim; ++a) count *= rule.nodes.size();
  c.offsets.resize(count * dim);
  c.weights.resize(count);
  const double scale = std::sqrt(2.0) * sd;
  const double norm = std::pow(std::numbers::pi, -0.5 * dim);
  for (std::size_t idx = 0; idx < count; ++idx) {
    std::size_t rest = idx;
    double w = norm;
    for (int a = 0; a < dim; ++a) {
      const std::size_t j = rest % rule.nodes.size();
      rest /= rule.nodes.size();
      c.offsets[idx * dim + a] = scale * rule.nodes[j];
      w *= rule.weights[j];
    }
    c.weights[idx] = w;
  }
  return c;
}

double expect_normal(const std::function<double(double)>& f, double mean, double sd, int order) {
  const auto& rule = gauss_hermite(order);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    s += rule.weights[i] * f(mean + std::sqrt(2.0) * sd * rule.nodes[i]);
  return s / std::sqrt(std::numbers::pi);
}

}  // namespace snakesim
