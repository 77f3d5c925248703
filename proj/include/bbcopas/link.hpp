#pragma once

#include <string_view>

namespace bbcopas {

// The CDF G linking linear predictors to probabilities. Both supported links
// are symmetric, so 1 - G(-x) = G(x).
enum class Link { logistic, probit };

Link parse_link(std::string_view name);
std::string_view to_string(Link link);

double link_cdf(Link link, double x);
double link_pdf(Link link, double x);
// Throws DomainError outside (0, 1).
double link_quantile(Link link, double p);

// log G(x), accurate far into both tails.
double log_link_cdf(Link link, double x);

// Binomial kernel k*log G(eta) + (n-k)*log(1 - G(eta)) and its first two
// derivatives with respect to eta. Log-concave for both links.
struct BinomialKernel {
  double value;
  double d1;
  double d2;
};
BinomialKernel binomial_kernel(Link link, int k, int n, double eta);
double binomial_kernel_value(Link link, int k, int n, double eta);

// Standard normal helpers shared by selection and CI code.
double normal_cdf(double x);
double normal_quantile(double p);
double log_normal_cdf(double x);

double logit(double p);
double inv_logit(double x);

} // namespace bbcopas
