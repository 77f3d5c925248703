#pragma once

#include <vector>

namespace bbcopas {

// Gauss-Hermite rule rescaled to the standard normal weight:
//   E[f(Z)] ~= sum_k weights[k] * f(nodes[k]),  Z ~ N(0, 1),
// so the weights sum to one. Exact for polynomials of degree <= 2*order - 1.
class QuadratureRule {
public:
  static constexpr int kMinOrder = 5;

  // Throws InvalidArgument for order < kMinOrder.
  static QuadratureRule gauss_hermite(int order);

  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  int order() const noexcept { return static_cast<int>(nodes_.size()); }

private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

// How the random-effects integral is laid over the rule.
//   adaptive: centred on the per-study posterior mode, scaled by the local
//             curvature (one 2-D Newton solve per study and evaluation).
//   fixed:    the plain tensor rule on the random-effects prior.
enum class QuadratureMode { adaptive, fixed };

} // namespace bbcopas
