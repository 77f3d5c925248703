#include "bbcopas/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace bbcopas::kernels {

namespace {

struct NodeProbabilities {
  double weight;
  double pi1;
  double spe; // 1 - pi0
};

std::vector<NodeProbabilities> node_probabilities(const ModelParams& params,
                                                  const LikelihoodConfig& cfg) {
  const auto& z = cfg.rule.nodes();
  const auto& w = cfg.rule.weights();
  std::vector<NodeProbabilities> out;
  out.reserve(z.size() * z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    for (std::size_t j = 0; j < z.size(); ++j) {
      const auto pr = study_probabilities(params, params.sigma_theta * z[i],
                                          params.sigma_alpha * z[j], cfg.link);
      out.push_back({w[i] * w[j], pr.pi1, 1.0 - pr.pi0});
    }
  }
  return out;
}

// Contributions below these are dropped from the mixture; the total dropped
// mass stays far below double rounding of the selection probability.
constexpr double kNodeWeightFloor = 1e-18;
constexpr double kLogPmfDrop = 46.0; // e^-46 ~ 1e-20 relative to the mode

std::vector<double> log_binomial_row(int n) {
  std::vector<double> out(static_cast<std::size_t>(n) + 1);
  const double lgn = std::lgamma(n + 1.0);
  for (int m = 0; m <= n; ++m) out[m] = lgn - std::lgamma(m + 1.0) - std::lgamma(n - m + 1.0);
  return out;
}

struct PmfWindow {
  long long first = 0;
  std::vector<double> values;
};

// Binomial pmf restricted to the contiguous range around the mode where it is
// within kLogPmfDrop of its peak.
PmfWindow pmf_window(const std::vector<double>& lc, double p) {
  const int n = static_cast<int>(lc.size()) - 1;
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  auto logpmf = [&](int m) { return lc[m] + m * lp + (n - m) * lq; };
  const int mode = std::clamp(static_cast<int>(std::floor((n + 1) * p)), 0, n);
  const double peak = logpmf(mode);
  int lo = mode, hi = mode;
  while (lo > 0 && logpmf(lo - 1) > peak - kLogPmfDrop) --lo;
  while (hi < n && logpmf(hi + 1) > peak - kLogPmfDrop) ++hi;
  PmfWindow w;
  w.first = lo;
  w.values.resize(static_cast<std::size_t>(hi - lo) + 1);
  for (int m = lo; m <= hi; ++m) w.values[static_cast<std::size_t>(m - lo)] = std::exp(logpmf(m));
  return w;
}

} // namespace

std::vector<double> binomial_pmf(int n, double p) {
  std::vector<double> out(n + 1);
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double lgn = std::lgamma(n + 1.0);
  for (int m = 0; m <= n; ++m) {
    out[m] = std::exp(lgn - std::lgamma(m + 1.0) - std::lgamma(n - m + 1.0) + m * lp +
                      (n - m) * lq);
  }
  return out;
}

std::vector<double> cell_mixture(const ModelParams& params, int n1, int n0,
                                 const LikelihoodConfig& cfg) {
  const auto nodes = node_probabilities(params, cfg);
  const std::size_t rows = static_cast<std::size_t>(n1) + 1;
  const std::size_t cols = static_cast<std::size_t>(n0) + 1;
  const auto lc1 = log_binomial_row(n1);
  const auto lc0 = log_binomial_row(n0);

  std::vector<std::size_t> live;
  for (std::size_t k = 0; k < nodes.size(); ++k)
    if (nodes[k].weight >= kNodeWeightFloor) live.push_back(k);

  // Weighted pmf windows per node, computed once.
  const auto pmf1 = map_indexed<PmfWindow>(live.size(), cfg.exec, [&](std::size_t i) {
    auto a = pmf_window(lc1, nodes[live[i]].pi1);
    for (double& x : a.values) x *= nodes[live[i]].weight;
    return a;
  });
  const auto pmf0 = map_indexed<PmfWindow>(live.size(), cfg.exec, [&](std::size_t i) {
    return pmf_window(lc0, nodes[live[i]].spe);
  });

  std::vector<double> out(rows * cols, 0.0);
  const long long nrows = static_cast<long long>(rows);
#pragma omp parallel for schedule(static) if (cfg.exec == ExecPolicy::parallel)
  for (long long r = 0; r < nrows; ++r) {
    double* row = out.data() + static_cast<std::size_t>(r) * cols;
    for (std::size_t i = 0; i < live.size(); ++i) {
      const auto& w1 = pmf1[i];
      if (r < w1.first || r >= w1.first + static_cast<long long>(w1.values.size())) continue;
      const double a = w1.values[static_cast<std::size_t>(r - w1.first)];
      const auto& w0 = pmf0[i];
      double* dst = row + w0.first;
      const double* b = w0.values.data();
      for (std::size_t c = 0; c < w0.values.size(); ++c) dst[c] += a * b[c];
    }
  }
  return out;
}

std::vector<double> cell_mixture_serial(const ModelParams& params, int n1, int n0,
                                        const LikelihoodConfig& cfg) {
  const auto nodes = node_probabilities(params, cfg);
  auto log_pmf = [](int n, int m, double p) {
    return std::lgamma(n + 1.0) - std::lgamma(m + 1.0) - std::lgamma(n - m + 1.0) +
           m * std::log(p) + (n - m) * std::log1p(-p);
  };
  std::vector<double> out(static_cast<std::size_t>(n1 + 1) * (n0 + 1), 0.0);
  for (int m11 = 0; m11 <= n1; ++m11) {
    for (int m00 = 0; m00 <= n0; ++m00) {
      double acc = 0.0;
      for (const auto& node : nodes) {
        acc += node.weight *
               std::exp(log_pmf(n1, m11, node.pi1) + log_pmf(n0, m00, node.spe));
      }
      out[static_cast<std::size_t>(m11) * (n0 + 1) + m00] = acc;
    }
  }
  return out;
}

std::vector<double> log_marginals(const ModelParams& params, const std::vector<Study2x2>& studies,
                                  const LikelihoodConfig& cfg) {
  return map_indexed<double>(studies.size(), ExecPolicy::parallel, [&](std::size_t s) {
    return study_log_marginal(params, studies[s], cfg);
  });
}

std::vector<double> log_marginals_serial(const ModelParams& params,
                                         const std::vector<Study2x2>& studies,
                                         const LikelihoodConfig& cfg) {
  std::vector<double> out;
  out.reserve(studies.size());
  for (const auto& s : studies) out.push_back(study_log_marginal(params, s, cfg));
  return out;
}

} // namespace bbcopas::kernels
