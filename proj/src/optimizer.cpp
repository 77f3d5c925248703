#include "bbcopas/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace bbcopas {

namespace {

constexpr double kPenalty = 1e4;

struct BoxedObjective {
  const Objective& f;
  const Eigen::VectorXd& lower;
  int evaluations = 0;

  Eigen::VectorXd project(const Eigen::VectorXd& x) const { return x.cwiseMax(lower); }

  double operator()(const Eigen::VectorXd& x) {
    ++evaluations;
    const Eigen::VectorXd px = project(x);
    double v = f(px);
    if (!std::isfinite(v)) v = std::numeric_limits<double>::infinity();
    return v + kPenalty * (x - px).squaredNorm();
  }
};

// Zero the gradient components that push a coordinate through its bound.
Eigen::VectorXd projected_gradient(const Eigen::VectorXd& g, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& lower) {
  Eigen::VectorXd pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) <= lower(i) + 1e-12 && g(i) > 0.0) pg(i) = 0.0;
  }
  return pg;
}

// Central differences, one-sided where the backward probe would cross a bound.
Eigen::VectorXd bounded_gradient(const Objective& f, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& lower, double relative_step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  double fx = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = relative_step * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + h;
    const double fp = f(xp);
    if (x(i) - h < lower(i)) {
      if (std::isnan(fx)) fx = f(x);
      g(i) = (fp - fx) / h;
    } else {
      xp(i) = x(i) - h;
      g(i) = (fp - f(xp)) / (2.0 * h);
    }
    xp(i) = x(i);
  }
  return g;
}

int nelder_mead(BoxedObjective& f, Eigen::VectorXd& x, double& fx, const OptimOptions& opt,
                int budget) {
  const Eigen::Index n = x.size();
  std::vector<Eigen::VectorXd> simplex(n + 1, x);
  std::vector<double> values(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    simplex[i + 1](i) += opt.initial_step * std::max(1.0, std::abs(x(i)));
  }
  for (Eigen::Index i = 0; i <= n; ++i) values[i] = f(simplex[i]);

  std::vector<Eigen::Index> order(n + 1);
  int it = 0;
  for (; it < budget; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return values[a] < values[b]; });
    const auto best = order.front();
    const auto worst = order.back();
    const auto second = order[n - 1];

    double size = 0.0;
    for (Eigen::Index i = 0; i <= n; ++i)
      size = std::max(size, (simplex[i] - simplex[best]).cwiseAbs().maxCoeff());
    if (values[worst] - values[best] < 1e-10 * (1.0 + std::abs(values[best])) && size < 1e-5)
      break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i <= n; ++i)
      if (i != worst) centroid += simplex[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd xr = centroid + (centroid - simplex[worst]);
    const double fr = f(xr);
    if (fr < values[best]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = f(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        values[worst] = fe;
      } else {
        simplex[worst] = xr;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = xr;
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < values[worst];
    const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                       : Eigen::VectorXd(centroid + 0.5 * (simplex[worst] - centroid));
    const double fc = f(xc);
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = xc;
      values[worst] = fc;
      continue;
    }
    for (Eigen::Index i = 0; i <= n; ++i) {
      if (i == best) continue;
      simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
      values[i] = f(simplex[i]);
    }
  }
  const auto best = std::min_element(values.begin(), values.end()) - values.begin();
  x = simplex[best];
  fx = values[best];
  return it;
}

} // namespace

Eigen::VectorXd central_gradient(const Objective& f, const Eigen::VectorXd& x,
                                 double relative_step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = relative_step * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + h;
    const double fp = f(xp);
    xp(i) = x(i) - h;
    const double fm = f(xp);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

OptimResult minimize(const Objective& objective, const Eigen::VectorXd& x0,
                     const Eigen::VectorXd& lower, const OptimOptions& opt) {
  BoxedObjective f{objective, lower};
  const Objective boxed = [&f](const Eigen::VectorXd& x) { return f(x); };

  OptimResult res;
  Eigen::VectorXd x = f.project(x0);
  double fx = f(x);
  res.iterations = nelder_mead(f, x, fx, opt,
                               std::min(opt.simplex_max_iterations, opt.max_iterations));
  x = f.project(x);
  fx = f(x);

  const Eigen::Index n = x.size();
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g = bounded_gradient(boxed, x, lower, opt.gradient_step);
  bool scaled = false;
  bool reset_once = false;

  while (res.iterations < opt.max_iterations) {
    ++res.iterations;
    const Eigen::VectorXd pg = projected_gradient(g, x, lower);
    res.gradient_norm = pg.norm();
    if (res.gradient_norm < 1e-8) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd d = -hinv * pg;
    if (!(pg.dot(d) < 0.0)) {
      hinv.setIdentity();
      d = -pg;
    }

    double step = 1.0;
    Eigen::VectorXd x_new;
    double f_new = fx;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      x_new = f.project(x + step * d);
      f_new = f(x_new);
      if (f_new <= fx + 1e-4 * pg.dot(x_new - x)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // At the noise floor of the finite-difference gradient.
      if (res.gradient_norm < 1e-3) {
        res.converged = true;
        break;
      }
      if (reset_once) break;
      reset_once = true;
      hinv.setIdentity();
      continue;
    }
    reset_once = false;

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd g_new = bounded_gradient(boxed, x_new, lower, opt.gradient_step);
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        hinv *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
      hinv = (eye - rho * s * y.transpose()) * hinv * (eye - rho * y * s.transpose()) +
             rho * s * s.transpose();
    }
    const double df = std::abs(fx - f_new);
    const double dx = s.cwiseAbs().maxCoeff();
    x = x_new;
    fx = f_new;
    g = g_new;
    res.gradient_norm = projected_gradient(g, x, lower).norm();
    // A heavily backtracked step can be tiny far from the optimum.
    if (df < opt.f_tolerance && dx < opt.x_tolerance && res.gradient_norm < 1e-3) {
      res.converged = true;
      break;
    }
  }

  res.x = x;
  res.value = objective(x);
  res.evaluations = f.evaluations;
  if (!std::isfinite(res.gradient_norm))
    res.gradient_norm = projected_gradient(g, x, lower).norm();
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::isfinite(lower(i)) && x(i) <= lower(i) + 1e-6) res.boundary_hit = true;
  return res;
}

} // namespace bbcopas
