#pragma once

#include "bbcopas/io.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace bbcopas::testing {

inline const std::vector<Study2x2>& cd64() {
  static const auto data = read_studies_file(std::string(BBCOPAS_DATA_DIR) + "/cd64.csv").studies;
  return data;
}

// log Bin(k | n, p) from factorials.
inline double log_binom_pmf(int k, int n, double p) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
         k * std::log(p) + (n - k) * std::log1p(-p);
}

inline double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double trapezoid_sauc(double alpha, double beta, int points) {
  double acc = 0.0, prev = 0.0;
  for (int i = 1; i <= points; ++i) {
    const double x = static_cast<double>(i) / (points + 1);
    const double y = sroc_curve(alpha, beta, x);
    acc += 0.5 * (prev + y) / (points + 1);
    prev = y;
  }
  return acc + 0.5 * (prev + 1.0) / (points + 1);
}

} // namespace bbcopas::testing
