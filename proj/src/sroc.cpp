#include "bbcopas/sroc.hpp"

#include "bbcopas/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace bbcopas {

OperatingPoint sop(const ModelParams& params, Link link) {
  const double sens = link_cdf(link, (params.theta + 0.5 * params.alpha) * std::exp(-0.5 * params.beta));
  const double spec = link_cdf(link, -(params.theta - 0.5 * params.alpha) * std::exp(0.5 * params.beta));
  return {sens, spec};
}

double sroc_curve(double alpha, double beta, double x, Link link) {
  if (!(x > 0.0 && x < 1.0)) throw DomainError("sroc_curve: x must lie in (0,1)");
  const double arg = -alpha * std::exp(-0.5 * beta) + std::exp(-beta) * link_quantile(link, 1.0 - x);
  return link_cdf(link, -arg);
}

double sauc(double alpha, double beta, Link link) {
  if (!std::isfinite(alpha) || !std::isfinite(beta))
    throw InvalidArgument("sauc: non-finite alpha or beta");
  const double shift = alpha * std::exp(-0.5 * beta);
  const double scale = std::exp(-beta);
  // x = 1 - G(z): SAUC = int G(shift - scale*z) g(z) dz over the real line.
  auto integrand = [&](double z) { return link_cdf(link, shift - scale * z) * link_pdf(link, z); };
  using boost::math::quadrature::gauss_kronrod;
  // The link density is below 1e-17 outside this window.
  const double half = link == Link::logistic ? 40.0 : 9.0;
  double err = 0.0;
  const double value = gauss_kronrod<double, 61>::integrate(integrand, -half, half, 12, 1e-13, &err);
  return std::clamp(value, 0.0, 1.0);
}

Eigen::Vector2d sauc_gradient(double alpha, double beta, Link link, double relative_step) {
  const double ha = relative_step * std::max(1.0, std::abs(alpha));
  const double hb = relative_step * std::max(1.0, std::abs(beta));
  Eigen::Vector2d g;
  g(0) = (sauc(alpha + ha, beta, link) - sauc(alpha - ha, beta, link)) / (2.0 * ha);
  g(1) = (sauc(alpha, beta + hb, link) - sauc(alpha, beta - hb, link)) / (2.0 * hb);
  return g;
}

double sauc_variance(double alpha, double beta, const Eigen::Matrix2d& cov_ab, Link link) {
  if (!cov_ab.allFinite()) throw InvalidArgument("sauc_variance: non-finite covariance");
  const double scale = std::max(1.0, cov_ab.cwiseAbs().maxCoeff());
  if (std::abs(cov_ab(0, 1) - cov_ab(1, 0)) > 1e-10 * scale)
    throw InvalidArgument("sauc_variance: covariance is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov_ab, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-12 * scale)
    throw InvalidArgument("sauc_variance: covariance is not positive semidefinite");
  const Eigen::Vector2d g = sauc_gradient(alpha, beta, link);
  return std::max(0.0, g.dot(cov_ab * g));
}

std::pair<double, double> sauc_ci(double s, double variance, double level) {
  if (!(s > 0.0 && s < 1.0)) throw InvalidArgument("sauc_ci: sauc must lie in (0,1)");
  if (!(variance >= 0.0)) throw InvalidArgument("sauc_ci: variance must be non-negative");
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("sauc_ci: level must lie in (0,1)");
  if (variance == 0.0) return {s, s};
  const double z = normal_quantile(0.5 + 0.5 * level);
  const double half = z * std::sqrt(variance) / (s * (1.0 - s));
  const double centre = logit(s);
  // inv_logit rounds to exactly 0 or 1 for huge half-widths.
  const double lo = std::max(inv_logit(centre - half), std::numeric_limits<double>::min());
  const double hi = std::min(inv_logit(centre + half), std::nextafter(1.0, 0.0));
  return {lo, hi};
}

SrocSummary summarize_sroc(const ModelParams& params, const Eigen::Matrix2d& cov_ab, Link link,
                           double level) {
  SrocSummary out;
  out.level = level;
  out.sauc = sauc(params.alpha, params.beta, link);
  out.sauc_variance = sauc_variance(params.alpha, params.beta, cov_ab, link);
  std::tie(out.ci_low, out.ci_high) = sauc_ci(out.sauc, out.sauc_variance, level);
  const auto op = sop(params, link);
  out.sop_sensitivity = op.sensitivity;
  out.sop_specificity = op.specificity;
  return out;
}

} // namespace bbcopas
