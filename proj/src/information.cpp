#include "bbcopas/information.hpp"

#include "bbcopas/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <string>

namespace bbcopas {

Eigen::MatrixXd numerical_hessian(const Objective& f, const Eigen::VectorXd& at,
                                  double relative_step) {
  const Eigen::Index n = at.size();
  Eigen::VectorXd h(n);
  for (Eigen::Index i = 0; i < n; ++i)
    h(i) = relative_step * std::max(1.0, std::abs(at(i)));

  const double f0 = f(at);
  Eigen::MatrixXd hess(n, n);
  Eigen::VectorXd x = at;
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i) = at(i) + h(i);
    const double fp = f(x);
    x(i) = at(i) - h(i);
    const double fm = f(x);
    x(i) = at(i);
    hess(i, i) = (fp - 2.0 * f0 + fm) / (h(i) * h(i));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double acc = 0.0;
      for (int si : {1, -1}) {
        for (int sj : {1, -1}) {
          x(i) = at(i) + si * h(i);
          x(j) = at(j) + sj * h(j);
          acc += si * sj * f(x);
        }
      }
      x(i) = at(i);
      x(j) = at(j);
      hess(i, j) = hess(j, i) = acc / (4.0 * h(i) * h(j));
    }
  }
  return hess;
}

InformationResult observed_information(const Objective& negative_loglik,
                                       const Eigen::VectorXd& at, double relative_step) {
  InformationResult out;
  out.hessian = numerical_hessian(negative_loglik, at, relative_step);
  if (!out.hessian.allFinite())
    throw SingularInformation("observed information has non-finite entries",
                              std::numeric_limits<double>::infinity());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.hessian);
  const Eigen::VectorXd ev = eig.eigenvalues();
  const double max_abs = ev.cwiseAbs().maxCoeff();
  const double min_abs = ev.cwiseAbs().minCoeff();
  out.condition_number = min_abs > 0.0 ? max_abs / min_abs
                                       : std::numeric_limits<double>::infinity();
  if (!(max_abs > 0.0) || out.condition_number > 1e12)
    throw SingularInformation("observed information is singular (condition number " +
                                  std::to_string(out.condition_number) + ")",
                              out.condition_number);

  Eigen::VectorXd inv_ev = ev.cwiseInverse();
  for (Eigen::Index i = 0; i < inv_ev.size(); ++i) {
    if (inv_ev(i) < -1e-6) {
      inv_ev(i) = 0.0;
      out.projected = true;
    } else if (inv_ev(i) < 0.0) {
      inv_ev(i) = 0.0;
    }
  }
  out.covariance = eig.eigenvectors() * inv_ev.asDiagonal() * eig.eigenvectors().transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

} // namespace bbcopas
