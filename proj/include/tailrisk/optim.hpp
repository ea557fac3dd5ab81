#ifndef TAILRISK_OPTIM_HPP_
#define TAILRISK_OPTIM_HPP_

// Unconstrained minimizers used by the maximum-likelihood fits. Constraints
// are handled by the callers through smooth reparameterizations, so every
// routine here works on R^k. Objectives may return +inf (or NaN) to reject a
// point.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace tailrisk::optim {

using Vector = std::vector<double>;
using Objective = std::function<double(const Vector&)>;

struct Result {
  Vector x;
  double value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {
inline double sanitize(double v) {
  return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
}
}  // namespace detail

struct NelderMeadOptions {
  int max_evaluations = 4000;
  double f_tolerance = 1e-9;
  double x_tolerance = 1e-8;
  double initial_step = 0.5;
};

/// Nelder-Mead with dimension-adaptive coefficients (Gao and Han 2012).
inline Result nelder_mead(const Objective& f, Vector x0, const NelderMeadOptions& opt = {}) {
  const std::size_t k = x0.size();
  Result res;
  if (k == 0) {
    res.x = x0;
    res.value = detail::sanitize(f(x0));
    res.evaluations = 1;
    res.converged = true;
    return res;
  }
  const double dim = static_cast<double>(k);
  const double alpha = 1.0;
  const double beta = 1.0 + 2.0 / dim;
  const double gamma = 0.75 - 1.0 / (2.0 * dim);
  const double delta = 1.0 - 1.0 / dim;

  std::vector<Vector> simplex(k + 1, x0);
  std::vector<double> fv(k + 1);
  int evals = 0;
  auto eval = [&](const Vector& x) {
    ++evals;
    return detail::sanitize(f(x));
  };
  fv[0] = eval(x0);
  for (std::size_t i = 0; i < k; ++i) {
    simplex[i + 1][i] += opt.initial_step;
    fv[i + 1] = eval(simplex[i + 1]);
  }

  std::vector<std::size_t> order(k + 1);
  Vector centroid(k), xr(k), xe(k), xc(k);
  int iter = 0;
  bool converged = false;
  while (evals < opt.max_evaluations) {
    ++iter;
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[k - 1];

    double spread = 0.0;
    for (std::size_t i = 0; i <= k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        spread = std::max(spread, std::abs(simplex[i][j] - simplex[best][j]));
      }
    }
    const double frange = fv[worst] - fv[best];
    if (std::isfinite(fv[worst]) && frange <= opt.f_tolerance * (1.0 + std::abs(fv[best])) &&
        spread <= opt.x_tolerance * 1e3) {
      converged = true;
      break;
    }
    if (spread <= opt.x_tolerance) {
      converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= k; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < k; ++j) centroid[j] += simplex[i][j] / dim;
    }
    for (std::size_t j = 0; j < k; ++j) {
      xr[j] = centroid[j] + alpha * (centroid[j] - simplex[worst][j]);
    }
    const double fr = eval(xr);
    if (fr < fv[best]) {
      for (std::size_t j = 0; j < k; ++j) {
        xe[j] = centroid[j] + beta * (xr[j] - centroid[j]);
      }
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        fv[worst] = fe;
      } else {
        simplex[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      simplex[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    for (std::size_t j = 0; j < k; ++j) {
      xc[j] = outside ? centroid[j] + gamma * (xr[j] - centroid[j])
                      : centroid[j] - gamma * (centroid[j] - simplex[worst][j]);
    }
    const double fc = eval(xc);
    if (fc < std::min(fr, fv[worst])) {
      simplex[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= k; ++i) {
      if (i == best) continue;
      for (std::size_t j = 0; j < k; ++j) {
        simplex[i][j] = simplex[best][j] + delta * (simplex[i][j] - simplex[best][j]);
      }
      fv[i] = eval(simplex[i]);
    }
  }
  const auto it = std::min_element(fv.begin(), fv.end());
  res.x = simplex[static_cast<std::size_t>(it - fv.begin())];
  res.value = *it;
  res.evaluations = evals;
  res.iterations = iter;
  res.converged = converged;
  return res;
}

/// Central-difference gradient. Falls back to one-sided differences when a
/// neighbouring point is rejected by the objective.
inline Vector numerical_gradient(const Objective& f, const Vector& x, double fx, int& evals) {
  Vector g(x.size(), 0.0);
  Vector xp = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    const double fp = detail::sanitize(f(xp));
    xp[i] = x[i] - h;
    const double fm = detail::sanitize(f(xp));
    xp[i] = x[i];
    evals += 2;
    if (std::isfinite(fp) && std::isfinite(fm)) {
      g[i] = (fp - fm) / (2.0 * h);
    } else if (std::isfinite(fp)) {
      g[i] = (fp - fx) / h;
    } else if (std::isfinite(fm)) {
      g[i] = (fx - fm) / h;
    }
  }
  return g;
}

struct BfgsOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  double f_tolerance = 1e-12;
};

/// Quasi-Newton BFGS with numerical gradients and a backtracking Armijo line
/// search. Never returns a point worse than `x0`.
inline Result bfgs(const Objective& f, Vector x0, const BfgsOptions& opt = {}) {
  const std::size_t k = x0.size();
  Result res;
  res.x = x0;
  res.value = detail::sanitize(f(x0));
  res.evaluations = 1;
  if (k == 0 || !std::isfinite(res.value)) return res;

  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k),
                                                   static_cast<Eigen::Index>(k));
  Vector x = x0;
  double fx = res.value;
  int evals = 1;
  Vector g = numerical_gradient(f, x, fx, evals);
  auto to_eigen = [k](const Vector& v) {
    Eigen::VectorXd e(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) e[static_cast<Eigen::Index>(i)] = v[i];
    return e;
  };

  int iter = 0;
  bool converged = false;
  Vector xn(k);
  for (; iter < opt.max_iterations; ++iter) {
    Eigen::VectorXd ge = to_eigen(g);
    if (ge.lpNorm<Eigen::Infinity>() < opt.gradient_tolerance) {
      converged = true;
      break;
    }
    Eigen::VectorXd dir = -hinv * ge;
    double slope = ge.dot(dir);
    if (!(slope < 0.0)) {
      hinv.setIdentity();
      dir = -ge;
      slope = ge.dot(dir);
    }
    double step = 1.0;
    double fn = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      for (std::size_t i = 0; i < k; ++i) xn[i] = x[i] + step * dir[static_cast<Eigen::Index>(i)];
      fn = detail::sanitize(f(xn));
      ++evals;
      if (std::isfinite(fn) && fn <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    Vector gn = numerical_gradient(f, xn, fn, evals);
    Eigen::VectorXd s = to_eigen(xn) - to_eigen(x);
    Eigen::VectorXd y = to_eigen(gn) - ge;
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const auto id = Eigen::MatrixXd::Identity(hinv.rows(), hinv.cols());
      hinv = (id - rho * s * y.transpose()) * hinv * (id - rho * y * s.transpose()) +
             rho * s * s.transpose();
    }
    const double improvement = fx - fn;
    x = xn;
    fx = fn;
    g = std::move(gn);
    if (improvement <= opt.f_tolerance * (1.0 + std::abs(fx))) {
      converged = true;
      ++iter;
      break;
    }
  }
  if (fx <= res.value) {
    res.x = x;
    res.value = fx;
  }
  res.evaluations = evals;
  res.iterations = iter;
  res.converged = converged;
  return res;
}

/// Nelder-Mead followed by a BFGS polish.
inline Result minimize(const Objective& f, const Vector& x0, const NelderMeadOptions& nm = {},
                       const BfgsOptions& bf = {}) {
  Result a = nelder_mead(f, x0, nm);
  Result b = bfgs(f, a.x, bf);
  b.evaluations += a.evaluations;
  b.iterations += a.iterations;
  b.converged = b.converged || a.converged;
  return b;
}

/// Central-difference Hessian with relative steps. Entries are NaN when the
/// stencil leaves the objective's domain.
inline Eigen::MatrixXd numerical_hessian(const Objective& f, const Vector& x) {
  const std::size_t k = x.size();
  Eigen::MatrixXd h(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  Vector step(k);
  for (std::size_t i = 0; i < k; ++i) step[i] = 1e-4 * std::max(1.0, std::abs(x[i]));
  const double f0 = f(x);
  Vector xp = x;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      double v;
      if (i == j) {
        xp[i] = x[i] + step[i];
        const double fp = f(xp);
        xp[i] = x[i] - step[i];
        const double fm = f(xp);
        xp[i] = x[i];
        v = (fp - 2.0 * f0 + fm) / (step[i] * step[i]);
      } else {
        auto at = [&](double si, double sj) {
          xp[i] = x[i] + si * step[i];
          xp[j] = x[j] + sj * step[j];
          const double r = f(xp);
          xp[i] = x[i];
          xp[j] = x[j];
          return r;
        };
        v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * step[i] * step[j]);
      }
      if (!std::isfinite(v)) v = std::numeric_limits<double>::quiet_NaN();
      h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      h(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return h;
}

/// Standard errors from the inverse of the Hessian of a negative
/// log-likelihood. NaN where the Hessian is unusable.
inline Vector standard_errors(const Eigen::MatrixXd& hessian) {
  const auto k = hessian.rows();
  Vector se(static_cast<std::size_t>(k), std::numeric_limits<double>::quiet_NaN());
  if (k == 0 || !hessian.allFinite()) return se;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
  if (ldlt.info() != Eigen::Success) return se;
  const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(k, k));
  for (Eigen::Index i = 0; i < k; ++i) {
    const double v = inv(i, i);
    if (v > 0.0 && std::isfinite(v)) se[static_cast<std::size_t>(i)] = std::sqrt(v);
  }
  return se;
}

}  // namespace tailrisk::optim

#endif  // TAILRISK_OPTIM_HPP_
