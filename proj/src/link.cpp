#include "bbcopas/link.hpp"

#include "bbcopas/errors.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <numbers>
#include <string>

namespace bbcopas {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  if (x > 35.0) return x;
  if (x < -35.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

// phi(x) / Phi(x), stable for very negative x.
double inverse_mills(double x) {
  if (x < -30.0) {
    const double x2 = x * x;
    return -x / (1.0 - 1.0 / x2 + 3.0 / (x2 * x2));
  }
  return kInvSqrt2Pi * std::exp(-0.5 * x * x) / normal_cdf(x);
}

} // namespace

Link parse_link(std::string_view name) {
  if (name == "logistic" || name == "logit") return Link::logistic;
  if (name == "probit" || name == "normal") return Link::probit;
  throw InvalidArgument("unknown link '" + std::string(name) +
                        "' (expected logistic|probit)");
}

std::string_view to_string(Link link) {
  return link == Link::logistic ? "logistic" : "probit";
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw DomainError("normal_quantile: p must lie in (0,1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double log_normal_cdf(double x) {
  if (x < -30.0) {
    const double x2 = x * x;
    return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) +
           std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
  }
  if (x > 5.0) return std::log1p(-normal_cdf(-x));
  return std::log(normal_cdf(x));
}

double logit(double p) { return std::log(p / (1.0 - p)); }

double inv_logit(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double link_cdf(Link link, double x) {
  return link == Link::logistic ? inv_logit(x) : normal_cdf(x);
}

double link_pdf(Link link, double x) {
  if (link == Link::logistic) {
    const double g = inv_logit(x);
    return g * (1.0 - g);
  }
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double link_quantile(Link link, double p) {
  if (!(p > 0.0 && p < 1.0))
    throw DomainError("link_quantile: argument must lie in the open interval (0,1)");
  return link == Link::logistic ? logit(p) : normal_quantile(p);
}

double log_link_cdf(Link link, double x) {
  return link == Link::logistic ? -softplus(-x) : log_normal_cdf(x);
}

double binomial_kernel_value(Link link, int k, int n, double eta) {
  if (link == Link::logistic) return k * eta - n * softplus(eta);
  double v = 0.0;
  if (k > 0) v += k * log_normal_cdf(eta);
  if (n - k > 0) v += (n - k) * log_normal_cdf(-eta);
  return v;
}

BinomialKernel binomial_kernel(Link link, int k, int n, double eta) {
  if (link == Link::logistic) {
    const double g = inv_logit(eta);
    return {k * eta - n * softplus(eta), k - n * g, -n * g * (1.0 - g)};
  }
  BinomialKernel out{0.0, 0.0, 0.0};
  if (k > 0) {
    const double lam = inverse_mills(eta);
    out.value += k * log_normal_cdf(eta);
    out.d1 += k * lam;
    out.d2 -= k * lam * (eta + lam);
  }
  if (n - k > 0) {
    const double lam = inverse_mills(-eta);
    out.value += (n - k) * log_normal_cdf(-eta);
    out.d1 -= (n - k) * lam;
    out.d2 -= (n - k) * lam * (-eta + lam);
  }
  return out;
}

} // namespace bbcopas
