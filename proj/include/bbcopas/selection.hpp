#pragma once

// t-statistic selection model. A study is published with probability
// a(t) = H(gamma0 + gamma1 * t), where t is the studentized linear
// combination c1*logit(sensitivity) + c0*logit(specificity), H = Phi.

#include "bbcopas/core_model.hpp"

#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace bbcopas {

enum class SelectionFunction { probit };

struct SelectionSpec {
  double c0 = 0.70710678118654752440;
  double c1 = 0.70710678118654752440;
  double gamma1 = 1.0;
  double p = 1.0;
  SelectionFunction h = SelectionFunction::probit;

  // Rescales (c0, c1) onto the unit circle; throws if both are zero.
  static SelectionSpec normalized(double c0, double c1, double gamma1, double p);
  // Throws InvalidArgument unless c0^2 + c1^2 = 1 (1e-10), gamma1 >= 0 and
  // 0 < p <= 1.
  void check() const;
};

enum class SelectionMethod { approx, exact };
SelectionMethod parse_selection_method(const std::string& name);
std::string to_string(SelectionMethod method);

inline constexpr std::size_t kDefaultExactCap = 1'000'000;

struct SelectionOptions {
  SelectionMethod method = SelectionMethod::approx;
  std::size_t exact_cap = kDefaultExactCap; // max n1*n0 for the exact sum
  double variance = 1.0;                    // variance of the studentized t
};

// Cells may be fractional after continuity correction.
double t_statistic_cells(double tp, double fp, double fn, double tn, double c0, double c1);

// With continuity on, 0.5 is added to every cell. Throws DomainError naming
// the cell when continuity is off and a cell is zero.
double t_statistic(const Study2x2& study, double c0, double c1, bool continuity);

// Continuity correction applied exactly when the study has a zero cell.
double observed_t_statistic(const Study2x2& study, double c0, double c1);

// Phi(gamma0 + gamma1 * t); gamma0 = +inf means certain publication.
double selection_prob(double t, double gamma0, double gamma1);

struct TStatMoments {
  double mean;
  double variance;
};

// Large-sample moments of the studentized t at true rates (pi1, pi0):
// mean = (c1*logit(pi1) + c0*logit(1-pi0)) / sqrt(v), with
// v = c1^2/(n1 pi1 (1-pi1)) + c0^2/(n0 spe (1-spe)); variance 1.
// MomentOrder::second adds the O(1/n) delta-method bias of the ratio; it
// tracks E[t] more closely but is unstable when n*pi*(1-pi) is small.
enum class MomentOrder { first, second };

TStatMoments t_asymptotic_moments(double pi1, double pi0, int n1, int n0, double c0, double c1,
                                  MomentOrder order = MomentOrder::first);

// P(select | n1, n0) by summing a(t(m11, m00)) over every table with the
// given margins, weighted by the random-effects mixture of the cell pmfs.
// Throws SizeError when n1*n0 exceeds cap.
double marginal_select_prob_exact(const ModelParams& params, const SelectionSpec& spec,
                                  double gamma0, int n1, int n0, const LikelihoodConfig& cfg,
                                  std::size_t cap = kDefaultExactCap);

// P(select | n1, n0) with t replaced by its normal approximation at each
// quadrature node; the inner expectation is closed form:
// E[Phi(g0 + g1 T)] = Phi((g0 + g1 mu) / sqrt(1 + g1^2 var)).
double marginal_select_prob_approx(const ModelParams& params, const SelectionSpec& spec,
                                   double gamma0, int n1, int n0, const LikelihoodConfig& cfg,
                                   double variance = 1.0);

// Precomputed P(select | n1, n0) for a set of study sizes at fixed Theta and
// (c0, c1); evaluation in (gamma0, gamma1) is then cheap. This is what the
// estimator uses inside the gamma0 root solve.
class MarginalSelection {
public:
  MarginalSelection(const ModelParams& params, double c0, double c1,
                    const std::vector<std::pair<int, int>>& sizes, const LikelihoodConfig& cfg,
                    const SelectionOptions& options);

  std::size_t size() const noexcept { return studies_.size(); }
  double probability(std::size_t s, double gamma0, double gamma1) const;
  std::vector<double> probabilities(double gamma0, double gamma1) const;
  // P_s and dP_s/dgamma0 for every study.
  std::vector<std::pair<double, double>> probabilities_with_slope(double gamma0,
                                                                  double gamma1) const;
  // Mean and variance of t per study under the fitted model (exact: over the
  // table mixture; approx: node means plus the working variance).
  std::vector<TStatMoments> t_moments() const;

  struct PerStudy {
    // approx: node means and weights; exact: t table and mixture weights.
    std::vector<double> t_or_mean;
    std::vector<double> weights;
  };

private:
  SelectionMethod method_;
  double variance_;
  ExecPolicy exec_;
  std::vector<PerStudy> studies_;
};

std::vector<std::pair<int, int>> study_sizes(const std::vector<Study2x2>& studies);

} // namespace bbcopas
