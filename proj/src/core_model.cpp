#include "bbcopas/core_model.hpp"

#include "bbcopas/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bbcopas {

namespace {

double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// Log integrand over the random effects (u, v), excluding the binomial
// coefficients and the normal normalizing constants.
struct LogIntegrand {
  Link link;
  int n11, n1, n10, n0;
  double theta, alpha, a1, a0; // a1 = exp(-beta/2), a0 = exp(beta/2)
  double prec_u, prec_v;       // 1/sigma^2

  double value(double u, double v) const {
    const double centre = theta + u;
    const double half_acc = 0.5 * (alpha + v);
    return binomial_kernel_value(link, n11, n1, (centre + half_acc) * a1) +
           binomial_kernel_value(link, n10, n0, (centre - half_acc) * a0) -
           0.5 * (prec_u * u * u + prec_v * v * v);
  }

  // value, gradient and negative Hessian
  struct Local {
    double value, gu, gv, huu, huv, hvv;
  };
  Local local(double u, double v) const {
    const double centre = theta + u;
    const double half_acc = 0.5 * (alpha + v);
    const auto k1 = binomial_kernel(link, n11, n1, (centre + half_acc) * a1);
    const auto k0 = binomial_kernel(link, n10, n0, (centre - half_acc) * a0);
    Local out{};
    out.value = k1.value + k0.value - 0.5 * (prec_u * u * u + prec_v * v * v);
    out.gu = k1.d1 * a1 + k0.d1 * a0 - prec_u * u;
    out.gv = 0.5 * (k1.d1 * a1 - k0.d1 * a0) - prec_v * v;
    const double c1 = k1.d2 * a1 * a1;
    const double c0 = k0.d2 * a0 * a0;
    out.huu = -(c1 + c0) + prec_u;
    out.huv = -0.5 * (c1 - c0);
    out.hvv = -0.25 * (c1 + c0) + prec_v;
    return out;
  }
};

// Damped Newton ascent to the mode of a strictly log-concave integrand.
LogIntegrand::Local find_mode(const LogIntegrand& f, double& u, double& v) {
  auto cur = f.local(u, v);
  for (int it = 0; it < 100; ++it) {
    const double det = cur.huu * cur.hvv - cur.huv * cur.huv;
    if (!(det > 0.0) || !std::isfinite(det)) break;
    const double du = (cur.hvv * cur.gu - cur.huv * cur.gv) / det;
    const double dv = (cur.huu * cur.gv - cur.huv * cur.gu) / det;
    double step = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      const double nu = u + step * du;
      const double nv = v + step * dv;
      const double val = f.value(nu, nv);
      if (val >= cur.value - 1e-14 * std::abs(cur.value)) {
        u = nu;
        v = nv;
        cur = f.local(u, v);
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
    const double scale_u = 1.0 / std::sqrt(cur.huu);
    const double scale_v = 1.0 / std::sqrt(cur.hvv);
    if (std::abs(step * du) < 1e-11 * scale_u && std::abs(step * dv) < 1e-11 * scale_v)
      break;
  }
  return cur;
}

double log_sum_exp_weighted(const std::vector<double>& logs, const std::vector<double>& w) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double l : logs) mx = std::max(mx, l);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) s += w[i] * std::exp(logs[i] - mx);
  return mx + std::log(s);
}

} // namespace

LinearPredictors linear_predictors(const ModelParams& params, double re_theta,
                                   double re_alpha) noexcept {
  const double centre = params.theta + re_theta;
  const double half_acc = 0.5 * (params.alpha + re_alpha);
  return {(centre + half_acc) * std::exp(-0.5 * params.beta),
          (centre - half_acc) * std::exp(0.5 * params.beta)};
}

StudyProbabilities study_probabilities(const ModelParams& params, double re_theta,
                                       double re_alpha, Link link) {
  if (!std::isfinite(re_theta) || !std::isfinite(re_alpha) || !std::isfinite(params.theta) ||
      !std::isfinite(params.alpha) || !std::isfinite(params.beta))
    throw InvalidArgument("study_probabilities: non-finite input");
  const auto eta = linear_predictors(params, re_theta, re_alpha);
  auto clamp = [](double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); };
  return {clamp(link_cdf(link, eta.eta1)), clamp(link_cdf(link, eta.eta0))};
}

double log_binomial_coefficients(const Study2x2& study) {
  return log_choose(study.n1(), study.n11) + log_choose(study.n0(), study.n10);
}

double within_study_log_pmf(const Study2x2& study, double pi1, double pi0) {
  if (!(pi1 > 0.0 && pi1 < 1.0 && pi0 > 0.0 && pi0 < 1.0))
    throw InvalidArgument("within_study_log_pmf: probabilities must lie in (0,1)");
  auto term = [](int k, int n, double p) {
    double v = 0.0;
    if (k > 0) v += k * std::log(p);
    if (n - k > 0) v += (n - k) * std::log1p(-p);
    return v;
  };
  return log_binomial_coefficients(study) + term(study.n11, study.n1(), pi1) +
         term(study.n10, study.n0(), pi0);
}

double study_log_marginal(const ModelParams& params, const Study2x2& study,
                          const LikelihoodConfig& cfg) {
  LogIntegrand f{cfg.link,
                 study.n11,
                 study.n1(),
                 study.n10,
                 study.n0(),
                 params.theta,
                 params.alpha,
                 std::exp(-0.5 * params.beta),
                 std::exp(0.5 * params.beta),
                 1.0 / (params.sigma_theta * params.sigma_theta),
                 1.0 / (params.sigma_alpha * params.sigma_alpha)};

  const auto& z = cfg.rule.nodes();
  const auto& w = cfg.rule.weights();
  const std::size_t q = z.size();
  std::vector<double> logs(q * q);
  std::vector<double> weights(q * q);
  const double log_coef = log_binomial_coefficients(study);

  if (cfg.mode == QuadratureMode::fixed) {
    for (std::size_t i = 0; i < q; ++i) {
      for (std::size_t j = 0; j < q; ++j) {
        const double u = params.sigma_theta * z[i];
        const double v = params.sigma_alpha * z[j];
        logs[i * q + j] = f.value(u, v) + 0.5 * (f.prec_u * u * u + f.prec_v * v * v);
        weights[i * q + j] = w[i] * w[j];
      }
    }
    return log_coef + log_sum_exp_weighted(logs, weights);
  }

  double mu = 0.0, mv = 0.0;
  const auto at_mode = find_mode(f, mu, mv);
  // Cholesky of the negative Hessian; u = m + L^{-T} z.
  const double l11 = std::sqrt(at_mode.huu);
  const double l21 = at_mode.huv / l11;
  const double l22 = std::sqrt(at_mode.hvv - l21 * l21);
  if (!(l11 > 0.0) || !(l22 > 0.0) || !std::isfinite(l11) || !std::isfinite(l22))
    return std::numeric_limits<double>::quiet_NaN();

  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      const double v = mv + z[j] / l22;
      const double u = mu + (z[i] - l21 * z[j] / l22) / l11;
      logs[i * q + j] = f.value(u, v) - at_mode.value + 0.5 * (z[i] * z[i] + z[j] * z[j]);
      weights[i * q + j] = w[i] * w[j];
    }
  }
  return log_coef - std::log(params.sigma_theta) - std::log(params.sigma_alpha) -
         std::log(l11 * l22) + at_mode.value + log_sum_exp_weighted(logs, weights);
}

std::vector<double> study_log_marginals(const ModelParams& params,
                                        const std::vector<Study2x2>& studies,
                                        const LikelihoodConfig& cfg) {
  params.check();
  auto out = map_indexed<double>(studies.size(), cfg.exec, [&](std::size_t s) {
    return study_log_marginal(params, studies[s], cfg);
  });
  for (std::size_t s = 0; s < out.size(); ++s) {
    if (!std::isfinite(out[s]))
      throw NumericFailure("non-finite marginal likelihood for study " + std::to_string(s) +
                               " at " + to_string(params),
                           s);
  }
  return out;
}

double marginal_log_likelihood_unadjusted(const ModelParams& params,
                                          const std::vector<Study2x2>& studies,
                                          const LikelihoodConfig& cfg) {
  if (studies.size() < 2)
    throw InvalidArgument("marginal_log_likelihood_unadjusted: need at least 2 studies");
  return ordered_sum(study_log_marginals(params, studies, cfg));
}

ModelParams default_initial_params(const std::vector<Study2x2>& studies, Link link) {
  if (studies.empty()) throw InvalidArgument("default_initial_params: no studies");
  double theta = 0.0, alpha = 0.0;
  for (const auto& s : studies) {
    const double eta1 = link_quantile(link, (s.n11 + 0.5) / (s.n1() + 1.0));
    const double eta0 = link_quantile(link, (s.n10 + 0.5) / (s.n0() + 1.0));
    theta += 0.5 * (eta1 + eta0);
    alpha += eta1 - eta0;
  }
  const double n = static_cast<double>(studies.size());
  return {theta / n, alpha / n, 0.0, 0.5, 0.5};
}

} // namespace bbcopas
