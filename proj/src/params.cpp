#include "bbcopas/params.hpp"

#include "bbcopas/errors.hpp"

#include <cmath>
#include <sstream>

namespace bbcopas {

Eigen::VectorXd ModelParams::to_unconstrained() const {
  Eigen::VectorXd x(kSize);
  x << theta, alpha, beta, std::log(sigma_theta), std::log(sigma_alpha);
  return x;
}

ModelParams ModelParams::from_unconstrained(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() < kSize)
    throw InvalidArgument("from_unconstrained: vector shorter than 5");
  return {x(0), x(1), x(2), std::exp(x(3)), std::exp(x(4))};
}

bool ModelParams::valid() const noexcept {
  return std::isfinite(theta) && std::isfinite(alpha) && std::isfinite(beta) &&
         std::isfinite(sigma_theta) && std::isfinite(sigma_alpha) &&
         sigma_theta > 0.0 && sigma_alpha > 0.0;
}

void ModelParams::check() const {
  if (!valid()) throw InvalidArgument("invalid model parameters: " + to_string(*this));
}

std::string to_string(const ModelParams& p) {
  std::ostringstream os;
  os.precision(6);
  os << "(theta=" << p.theta << ", alpha=" << p.alpha << ", beta=" << p.beta
     << ", sigma_theta=" << p.sigma_theta << ", sigma_alpha=" << p.sigma_alpha << ")";
  return os.str();
}

} // namespace bbcopas
