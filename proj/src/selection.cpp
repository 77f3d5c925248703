#include "bbcopas/selection.hpp"

#include "bbcopas/errors.hpp"
#include "bbcopas/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bbcopas {

SelectionSpec SelectionSpec::normalized(double c0, double c1, double gamma1, double p) {
  const double norm = std::hypot(c0, c1);
  if (!(norm > 0.0)) throw InvalidArgument("selection: c0 and c1 cannot both be zero");
  SelectionSpec s;
  s.c0 = c0 / norm;
  s.c1 = c1 / norm;
  s.gamma1 = gamma1;
  s.p = p;
  return s;
}

void SelectionSpec::check() const {
  if (std::abs(c0 * c0 + c1 * c1 - 1.0) > 1e-10)
    throw InvalidArgument("selection: c0^2 + c1^2 must equal 1");
  if (!(gamma1 >= 0.0) || !std::isfinite(gamma1))
    throw InvalidArgument("selection: gamma1 must be finite and >= 0");
  if (!(p > 0.0 && p <= 1.0))
    throw InvalidArgument("selection: marginal selection probability p must lie in (0,1]");
}

SelectionMethod parse_selection_method(const std::string& name) {
  if (name == "approx") return SelectionMethod::approx;
  if (name == "exact") return SelectionMethod::exact;
  throw InvalidArgument("unknown selection method '" + name + "' (expected approx|exact)");
}

std::string to_string(SelectionMethod method) {
  return method == SelectionMethod::approx ? "approx" : "exact";
}

double t_statistic_cells(double tp, double fp, double fn, double tn, double c0, double c1) {
  const double key = c1 * std::log(tp / fn) + c0 * std::log(tn / fp);
  const double var = c1 * c1 * (1.0 / tp + 1.0 / fn) + c0 * c0 * (1.0 / tn + 1.0 / fp);
  return key / std::sqrt(var);
}

double t_statistic(const Study2x2& study, double c0, double c1, bool continuity) {
  if (!continuity) {
    if (study.n11 == 0) throw DomainError("t_statistic: TP cell is zero");
    if (study.n10 == 0) throw DomainError("t_statistic: FP cell is zero");
    if (study.n01 == 0) throw DomainError("t_statistic: FN cell is zero");
    if (study.n00 == 0) throw DomainError("t_statistic: TN cell is zero");
  }
  const double add = continuity ? 0.5 : 0.0;
  return t_statistic_cells(study.n11 + add, study.n10 + add, study.n01 + add, study.n00 + add,
                           c0, c1);
}

double observed_t_statistic(const Study2x2& study, double c0, double c1) {
  return t_statistic(study, c0, c1, study.has_zero_cell());
}

double selection_prob(double t, double gamma0, double gamma1) {
  if (gamma0 == std::numeric_limits<double>::infinity()) return 1.0;
  return normal_cdf(gamma0 + gamma1 * t);
}

TStatMoments t_asymptotic_moments(double pi1, double pi0, int n1, int n0, double c0, double c1,
                                  MomentOrder order) {
  const double p1 = std::clamp(pi1, kProbClamp, 1.0 - kProbClamp);
  const double spe = std::clamp(1.0 - pi0, kProbClamp, 1.0 - kProbClamp);
  const double mu = c1 * logit(p1) + c0 * logit(spe);
  const double v = c1 * c1 / (n1 * p1 * (1.0 - p1)) + c0 * c0 / (n0 * spe * (1.0 - spe));
  if (order == MomentOrder::first) return {mu / std::sqrt(v), 1.0};

  // Expansion of A / sqrt(B) with A = sum c*logit(phat), B = sum c^2/(n phat (1-phat)).
  double ea = 0.0, eab = 0.0, eb = 0.0, eb2 = 0.0;
  const struct { double p, n, c; } groups[] = {{p1, double(n1), c1}, {spe, double(n0), c0}};
  for (const auto& g : groups) {
    const double q = g.p * (1.0 - g.p);
    const double l1 = 1.0 / q;
    const double l2 = (2.0 * g.p - 1.0) / (q * q);
    const double l3 = 2.0 / (q * q) + 2.0 * (1.0 - 2.0 * g.p) * (1.0 - 2.0 * g.p) / (q * q * q);
    const double s2 = q / g.n;
    ea += g.c * 0.5 * l2 * s2;
    eab += g.c * g.c * g.c * l1 * l2 * s2 / g.n;
    eb += g.c * g.c * 0.5 * l3 * s2 / g.n;
    eb2 += g.c * g.c * g.c * g.c * l2 * l2 * s2 / (g.n * g.n);
  }
  const double num = mu + ea - eab / (2.0 * v) - mu * eb / (2.0 * v) + 3.0 * mu * eb2 / (8.0 * v * v);
  return {num / std::sqrt(v), 1.0};
}

namespace {

constexpr double kMixtureFloor = 1e-16;

// t for every table with margins (n1, n0); m11 = TP, m00 = TN.
std::vector<double> t_table(int n1, int n0, double c0, double c1) {
  std::vector<double> out(static_cast<std::size_t>(n1 + 1) * (n0 + 1));
  for (int m11 = 0; m11 <= n1; ++m11) {
    for (int m00 = 0; m00 <= n0; ++m00) {
      const bool zero = m11 == 0 || m11 == n1 || m00 == 0 || m00 == n0;
      const double add = zero ? 0.5 : 0.0;
      out[static_cast<std::size_t>(m11) * (n0 + 1) + m00] =
          t_statistic_cells(m11 + add, n0 - m00 + add, n1 - m11 + add, m00 + add, c0, c1);
    }
  }
  return out;
}

void check_cap(int n1, int n0, std::size_t cap) {
  if (static_cast<std::size_t>(n1) * static_cast<std::size_t>(n0) > cap)
    throw SizeError("exact marginal selection probability: n1*n0 = " +
                    std::to_string(static_cast<long long>(n1) * n0) + " exceeds the cap of " +
                    std::to_string(cap) + "; use the approximation");
}

std::vector<double> node_means(const ModelParams& params, int n1, int n0, double c0, double c1,
                               const LikelihoodConfig& cfg) {
  const auto& z = cfg.rule.nodes();
  std::vector<double> out;
  out.reserve(z.size() * z.size());
  for (double zi : z) {
    for (double zj : z) {
      const auto pr =
          study_probabilities(params, params.sigma_theta * zi, params.sigma_alpha * zj, cfg.link);
      out.push_back(t_asymptotic_moments(pr.pi1, pr.pi0, n1, n0, c0, c1).mean);
    }
  }
  return out;
}

std::vector<double> node_weights(const LikelihoodConfig& cfg) {
  const auto& w = cfg.rule.weights();
  std::vector<double> out;
  out.reserve(w.size() * w.size());
  for (double wi : w)
    for (double wj : w) out.push_back(wi * wj);
  return out;
}

double approx_probability(const std::vector<double>& means, const std::vector<double>& weights,
                          double gamma0, double gamma1, double variance) {
  if (gamma0 == std::numeric_limits<double>::infinity()) return 1.0;
  const double scale = 1.0 / std::sqrt(1.0 + gamma1 * gamma1 * variance);
  double acc = 0.0;
  for (std::size_t k = 0; k < means.size(); ++k)
    acc += weights[k] * normal_cdf((gamma0 + gamma1 * means[k]) * scale);
  return std::clamp(acc, 0.0, 1.0);
}

double exact_probability(const std::vector<double>& t, const std::vector<double>& mixture,
                         double gamma0, double gamma1) {
  if (gamma0 == std::numeric_limits<double>::infinity()) return 1.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) acc += mixture[k] * normal_cdf(gamma0 + gamma1 * t[k]);
  return std::clamp(acc, 0.0, 1.0);
}

// Keeps only the tables carrying mixture mass.
MarginalSelection::PerStudy compact(const std::vector<double>& t,
                                    const std::vector<double>& mixture) {
  MarginalSelection::PerStudy out;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (mixture[k] < kMixtureFloor) continue;
    out.t_or_mean.push_back(t[k]);
    out.weights.push_back(mixture[k]);
  }
  return out;
}

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Sum of weights[k] * Phi(scale * (gamma0 + gamma1 * x[k])) and its gamma0 slope.
std::pair<double, double> probit_mixture(const std::vector<double>& x,
                                         const std::vector<double>& weights, double gamma0,
                                         double gamma1, double scale) {
  double acc = 0.0, slope = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double z = scale * (gamma0 + gamma1 * x[k]);
    acc += weights[k] * normal_cdf(z);
    slope += weights[k] * kInvSqrt2Pi * std::exp(-0.5 * z * z);
  }
  return {std::clamp(acc, 0.0, 1.0), slope * scale};
}

} // namespace

double marginal_select_prob_exact(const ModelParams& params, const SelectionSpec& spec,
                                  double gamma0, int n1, int n0, const LikelihoodConfig& cfg,
                                  std::size_t cap) {
  if (n1 < 1 || n0 < 1) throw InvalidArgument("marginal selection: n1 and n0 must be >= 1");
  check_cap(n1, n0, cap);
  params.check();
  const auto t = t_table(n1, n0, spec.c0, spec.c1);
  const auto mixture = kernels::cell_mixture(params, n1, n0, cfg);
  return exact_probability(t, mixture, gamma0, spec.gamma1);
}

double marginal_select_prob_approx(const ModelParams& params, const SelectionSpec& spec,
                                   double gamma0, int n1, int n0, const LikelihoodConfig& cfg,
                                   double variance) {
  if (n1 < 1 || n0 < 1) throw InvalidArgument("marginal selection: n1 and n0 must be >= 1");
  params.check();
  return approx_probability(node_means(params, n1, n0, spec.c0, spec.c1, cfg), node_weights(cfg),
                            gamma0, spec.gamma1, variance);
}

MarginalSelection::MarginalSelection(const ModelParams& params, double c0, double c1,
                                     const std::vector<std::pair<int, int>>& sizes,
                                     const LikelihoodConfig& cfg, const SelectionOptions& options)
    : method_(options.method), variance_(options.variance), exec_(cfg.exec) {
  params.check();
  if (method_ == SelectionMethod::exact)
    for (const auto& [n1, n0] : sizes) check_cap(n1, n0, options.exact_cap);

  const auto weights = node_weights(cfg);
  studies_ = map_indexed<PerStudy>(sizes.size(), cfg.exec, [&](std::size_t s) {
    const auto [n1, n0] = sizes[s];
    if (method_ == SelectionMethod::exact) {
      LikelihoodConfig serial = cfg;
      serial.exec = ExecPolicy::serial;
      return compact(t_table(n1, n0, c0, c1), kernels::cell_mixture(params, n1, n0, serial));
    }
    return PerStudy{node_means(params, n1, n0, c0, c1, cfg), weights};
  });
}

double MarginalSelection::probability(std::size_t s, double gamma0, double gamma1) const {
  const auto& st = studies_.at(s);
  return method_ == SelectionMethod::exact
             ? exact_probability(st.t_or_mean, st.weights, gamma0, gamma1)
             : approx_probability(st.t_or_mean, st.weights, gamma0, gamma1, variance_);
}

std::vector<double> MarginalSelection::probabilities(double gamma0, double gamma1) const {
  return map_indexed<double>(studies_.size(), exec_,
                             [&](std::size_t s) { return probability(s, gamma0, gamma1); });
}

std::vector<std::pair<double, double>>
MarginalSelection::probabilities_with_slope(double gamma0, double gamma1) const {
  const double scale =
      method_ == SelectionMethod::exact ? 1.0 : 1.0 / std::sqrt(1.0 + gamma1 * gamma1 * variance_);
  return map_indexed<std::pair<double, double>>(studies_.size(), exec_, [&](std::size_t s) {
    return probit_mixture(studies_[s].t_or_mean, studies_[s].weights, gamma0, gamma1, scale);
  });
}

std::vector<TStatMoments> MarginalSelection::t_moments() const {
  std::vector<TStatMoments> out;
  out.reserve(studies_.size());
  for (const auto& st : studies_) {
    double mass = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t k = 0; k < st.weights.size(); ++k) {
      mass += st.weights[k];
      m1 += st.weights[k] * st.t_or_mean[k];
      m2 += st.weights[k] * st.t_or_mean[k] * st.t_or_mean[k];
    }
    const double mean = m1 / mass;
    double var = std::max(0.0, m2 / mass - mean * mean);
    if (method_ == SelectionMethod::approx) var += variance_;
    out.push_back({mean, var});
  }
  return out;
}

std::vector<std::pair<int, int>> study_sizes(const std::vector<Study2x2>& studies) {
  std::vector<std::pair<int, int>> out;
  out.reserve(studies.size());
  for (const auto& s : studies) out.emplace_back(s.n1(), s.n0());
  return out;
}

} // namespace bbcopas
