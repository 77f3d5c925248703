#pragma once

#include <Eigen/Core>

#include <array>
#include <string>

namespace bbcopas {

// Theta = (theta, alpha, beta, sigma_theta, sigma_alpha).
//   theta: cut-off location, alpha: accuracy, beta: scale (asymmetry of the
//   SROC curve), sigma_*: standard deviations of the independent normal
//   random effects on theta and alpha.
struct ModelParams {
  double theta = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double sigma_theta = 1.0;
  double sigma_alpha = 1.0;

  static constexpr int kSize = 5;
  static constexpr std::array<const char*, kSize> kNames = {
      "theta", "alpha", "beta", "sigma_theta", "sigma_alpha"};
  // Names in the optimizer coordinates, which are the covariance coordinates.
  static constexpr std::array<const char*, kSize> kUnconstrainedNames = {
      "theta", "alpha", "beta", "log_sigma_theta", "log_sigma_alpha"};

  // (theta, alpha, beta, log sigma_theta, log sigma_alpha)
  Eigen::VectorXd to_unconstrained() const;
  // Reads the first five entries of x.
  static ModelParams from_unconstrained(const Eigen::Ref<const Eigen::VectorXd>& x);

  bool valid() const noexcept;
  // Throws InvalidArgument when not valid().
  void check() const;
};

std::string to_string(const ModelParams& p);

} // namespace bbcopas
