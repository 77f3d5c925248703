#include "bbcopas/quadrature.hpp"

#include "bbcopas/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace bbcopas {

namespace {

// Orthonormal Hermite recurrence at x. Returns (p_n(x), p_{n-1}(x)).
std::pair<double, double> orthonormal_hermite(int n, double x) {
  double p1 = 1.0 / std::sqrt(std::sqrt(std::numbers::pi));
  double p2 = 0.0;
  for (int j = 1; j <= n; ++j) {
    const double p3 = p2;
    p2 = p1;
    p1 = x * std::sqrt(2.0 / j) * p2 - std::sqrt(static_cast<double>(j - 1) / j) * p3;
  }
  return {p1, p2};
}

} // namespace

QuadratureRule QuadratureRule::gauss_hermite(int order) {
  if (order < kMinOrder)
    throw InvalidArgument("quadrature order must be >= " + std::to_string(kMinOrder) +
                          ", got " + std::to_string(order));

  // Golub-Welsch for starting values, then Newton on the orthonormal
  // recurrence; weights from the derivative formula keep full relative
  // accuracy in the tails where eigenvector weights do not.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(k / 2.0);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi, Eigen::EigenvaluesOnly);

  QuadratureRule rule;
  rule.nodes_.resize(order);
  rule.weights_.resize(order);
  for (int i = 0; i < order; ++i) {
    double x = eig.eigenvalues()(i);
    double pp = 0.0;
    for (int it = 0; it < 20; ++it) {
      const auto [pn, pn1] = orthonormal_hermite(order, x);
      pp = std::sqrt(2.0 * order) * pn1;
      const double dx = pn / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    const auto [pn, pn1] = orthonormal_hermite(order, x);
    (void)pn;
    pp = std::sqrt(2.0 * order) * pn1;
    // Physicists' weight 2/pp^2 for exp(-x^2); divide by sqrt(pi) and map
    // x -> sqrt(2) x for the standard normal density.
    rule.nodes_[i] = std::numbers::sqrt2 * x;
    rule.weights_[i] = 2.0 / (pp * pp) / std::sqrt(std::numbers::pi);
  }
  // Symmetrize against round-off.
  for (int i = 0; i < order / 2; ++i) {
    const int j = order - 1 - i;
    const double node = 0.5 * (rule.nodes_[j] - rule.nodes_[i]);
    const double w = 0.5 * (rule.weights_[i] + rule.weights_[j]);
    rule.nodes_[i] = -node;
    rule.nodes_[j] = node;
    rule.weights_[i] = rule.weights_[j] = w;
  }
  if (order % 2 == 1) rule.nodes_[order / 2] = 0.0;
  return rule;
}

} // namespace bbcopas
