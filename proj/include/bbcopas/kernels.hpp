#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP implementation used by
// the library and a plain serial reference kept for tests and benchmarks.

#include "bbcopas/core_model.hpp"

#include <vector>

namespace bbcopas::kernels {

// Random-effects mixture of the cell pmfs for fixed margins (n1, n0):
//   W[m11 * (n0 + 1) + m00] = E_{u,v}[ Bin(m11 | n1, pi1) * Bin(m00 | n0, 1 - pi0) ]
// over the fixed tensor rule on the random-effects prior. Sums to one.
std::vector<double> cell_mixture(const ModelParams& params, int n1, int n0,
                                 const LikelihoodConfig& cfg);
std::vector<double> cell_mixture_serial(const ModelParams& params, int n1, int n0,
                                        const LikelihoodConfig& cfg);

// Per-study log f_P in study order.
std::vector<double> log_marginals(const ModelParams& params, const std::vector<Study2x2>& studies,
                                  const LikelihoodConfig& cfg);
std::vector<double> log_marginals_serial(const ModelParams& params,
                                         const std::vector<Study2x2>& studies,
                                         const LikelihoodConfig& cfg);

// Binomial pmf over 0..n.
std::vector<double> binomial_pmf(int n, double p);

} // namespace bbcopas::kernels
