#ifndef TAILRISK_MARGINAL_HPP_
#define TAILRISK_MARGINAL_HPP_

// ARMA(m,n)-GARCH(p,q) marginals with skewed Student-t innovations:
// filtering, maximum-likelihood fitting, AIC lag search and the empirical
// probability-integral transform.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tailrisk/distributions.hpp"
#include "tailrisk/error.hpp"
#include "tailrisk/market_data.hpp"
#include "tailrisk/optim.hpp"
#include "tailrisk/parallel.hpp"
#include "tailrisk/stats.hpp"

namespace tailrisk {

inline constexpr int kMaxLag = 3;
/// Upper bound enforced on sum(alpha) + sum(beta).
inline constexpr double kMaxPersistence = 0.9999;

struct MarginalSpec {
  int m = 0;  // AR order
  int n = 0;  // MA order
  int p = 1;  // ARCH order
  int q = 1;  // GARCH order

  void validate() const {
    for (int lag : {m, n, p, q}) {
      if (lag < 0 || lag > kMaxLag) throw DomainError("marginal lag orders must lie in [0,3]");
    }
    if (p == 0 && q == 0) throw DomainError("marginal spec needs a variance equation (p or q > 0)");
  }
  /// Number of free parameters.
  int parameter_count() const { return 1 + m + n + 1 + p + q + 2; }
  int arma_lags() const { return m + n; }
  std::string label() const {
    std::ostringstream s;
    s << "ARMA(" << m << "," << n << ")-GARCH(" << p << "," << q << ")";
    return s.str();
  }
  auto operator<=>(const MarginalSpec&) const = default;
};

struct MarginalParams {
  double phi0 = 0.0;
  std::vector<double> phi;    // AR coefficients
  std::vector<double> gamma;  // MA coefficients
  double alpha0 = 0.1;
  std::vector<double> alpha;  // ARCH coefficients
  std::vector<double> beta;   // GARCH coefficients
  double nu = 8.0;
  double eta = 0.0;

  double persistence() const {
    double s = 0.0;
    for (double a : alpha) s += a;
    for (double b : beta) s += b;
    return s;
  }

  bool matches(const MarginalSpec& spec) const {
    return phi.size() == static_cast<std::size_t>(spec.m) && gamma.size() == static_cast<std::size_t>(spec.n) &&
           alpha.size() == static_cast<std::size_t>(spec.p) && beta.size() == static_cast<std::size_t>(spec.q);
  }

  /// Admissible region: alpha0 > 0, ARCH/GARCH coefficients >= 0,
  /// persistence below one, valid skewed-t shape.
  bool feasible() const {
    if (!(alpha0 > 0.0) || !std::isfinite(alpha0)) return false;
    for (double a : alpha) if (!(a >= 0.0)) return false;
    for (double b : beta) if (!(b >= 0.0)) return false;
    if (!(persistence() < 1.0)) return false;
    if (!(nu > 2.0) || !(eta > -1.0 && eta < 1.0)) return false;
    for (double v : phi) if (!std::isfinite(v)) return false;
    for (double v : gamma) if (!std::isfinite(v)) return false;
    return std::isfinite(phi0);
  }

  /// Natural-parameter vector: phi0, phi, gamma, alpha0, alpha, beta, nu, eta.
  std::vector<double> flatten() const {
    std::vector<double> v{phi0};
    v.insert(v.end(), phi.begin(), phi.end());
    v.insert(v.end(), gamma.begin(), gamma.end());
    v.push_back(alpha0);
    v.insert(v.end(), alpha.begin(), alpha.end());
    v.insert(v.end(), beta.begin(), beta.end());
    v.push_back(nu);
    v.push_back(eta);
    return v;
  }

  static MarginalParams unflatten(const MarginalSpec& spec, std::span<const double> v) {
    if (v.size() != static_cast<std::size_t>(spec.parameter_count())) {
      throw DomainError("MarginalParams::unflatten: wrong vector length");
    }
    MarginalParams p;
    std::size_t i = 0;
    p.phi0 = v[i++];
    p.phi.assign(v.begin() + static_cast<std::ptrdiff_t>(i), v.begin() + static_cast<std::ptrdiff_t>(i + spec.m));
    i += static_cast<std::size_t>(spec.m);
    p.gamma.assign(v.begin() + static_cast<std::ptrdiff_t>(i), v.begin() + static_cast<std::ptrdiff_t>(i + spec.n));
    i += static_cast<std::size_t>(spec.n);
    p.alpha0 = v[i++];
    p.alpha.assign(v.begin() + static_cast<std::ptrdiff_t>(i), v.begin() + static_cast<std::ptrdiff_t>(i + spec.p));
    i += static_cast<std::size_t>(spec.p);
    p.beta.assign(v.begin() + static_cast<std::ptrdiff_t>(i), v.begin() + static_cast<std::ptrdiff_t>(i + spec.q));
    i += static_cast<std::size_t>(spec.q);
    p.nu = v[i++];
    p.eta = v[i++];
    return p;
  }

  static std::vector<std::string> names(const MarginalSpec& spec) {
    std::vector<std::string> out{"phi0"};
    for (int j = 1; j <= spec.m; ++j) out.push_back("phi" + std::to_string(j));
    for (int j = 1; j <= spec.n; ++j) out.push_back("gamma" + std::to_string(j));
    out.push_back("alpha0");
    for (int j = 1; j <= spec.p; ++j) out.push_back("alpha" + std::to_string(j));
    for (int j = 1; j <= spec.q; ++j) out.push_back("beta" + std::to_string(j));
    out.push_back("nu");
    out.push_back("eta");
    return out;
  }
};

/// State assumed before the first observation: lagged returns equal
/// `mean_return`, lagged innovations are zero, lagged variances equal `variance`.
struct PresampleState {
  double mean_return = 0.0;
  double variance = 1.0;

  static PresampleState from_sample(std::span<const double> r) {
    PresampleState s;
    s.mean_return = mean_of(r);
    if (is_constant(r)) {
      // Exactly zero, not a rounding residue, so the filter sees the degeneracy.
      s.variance = 0.0;
      return s;
    }
    double v = 0.0;
    for (double x : r) v += (x - s.mean_return) * (x - s.mean_return);
    s.variance = r.size() > 1 ? v / static_cast<double>(r.size() - 1) : 0.0;
    return s;
  }
};

struct FilterOutput {
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<double> z;
  double loglik = -std::numeric_limits<double>::infinity();
};

namespace detail {

/// Core recursion. Returns -inf for an infeasible point or a non-finite
/// likelihood; fills `out` when non-null.
inline double filter_core(std::span<const double> r, const MarginalSpec& spec, const MarginalParams& prm,
                          const PresampleState& pre, FilterOutput* out) noexcept {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (!prm.feasible() || !(pre.variance > 0.0) || !std::isfinite(pre.variance)) return kNegInf;
  const std::size_t T = r.size();
  const int m = spec.m, n = spec.n, p = spec.p, q = spec.q;
  thread_local std::vector<double> eps, s2;
  eps.assign(T, 0.0);
  s2.assign(T, 0.0);
  if (out) {
    out->mu.resize(T);
    out->sigma.resize(T);
    out->z.resize(T);
  }
  std::optional<SkewedT> dist;
  try {
    dist.emplace(prm.nu, prm.eta);
  } catch (...) {
    return kNegInf;
  }
  double ll = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const auto ti = static_cast<std::ptrdiff_t>(t);
    double mu = prm.phi0;
    for (int j = 1; j <= m; ++j) mu += prm.phi[static_cast<std::size_t>(j - 1)] * (ti - j >= 0 ? r[static_cast<std::size_t>(ti - j)] : pre.mean_return);
    for (int j = 1; j <= n; ++j) {
      if (ti - j >= 0) mu += prm.gamma[static_cast<std::size_t>(j - 1)] * eps[static_cast<std::size_t>(ti - j)];
    }
    double var = prm.alpha0;
    for (int j = 1; j <= p; ++j) {
      if (ti - j >= 0) {
        const double e = eps[static_cast<std::size_t>(ti - j)];
        var += prm.alpha[static_cast<std::size_t>(j - 1)] * e * e;
      }
    }
    for (int j = 1; j <= q; ++j) {
      var += prm.beta[static_cast<std::size_t>(j - 1)] * (ti - j >= 0 ? s2[static_cast<std::size_t>(ti - j)] : pre.variance);
    }
    if (!(var > 0.0) || !std::isfinite(var)) return kNegInf;
    const double e = r[t] - mu;
    eps[t] = e;
    s2[t] = var;
    const double sd = std::sqrt(var);
    const double z = e / sd;
    ll += dist->log_pdf(z) - std::log(sd);
    if (out) {
      out->mu[t] = mu;
      out->sigma[t] = sd;
      out->z[t] = z;
    }
  }
  if (!std::isfinite(ll)) return kNegInf;
  if (out) out->loglik = ll;
  return ll;
}

}  // namespace detail

/// Log-likelihood only; -inf when the point is infeasible or the series is
/// degenerate (zero pre-sample variance).
inline double filter_loglik(std::span<const double> r, const MarginalSpec& spec, const MarginalParams& prm,
                            const PresampleState& pre) {
  return detail::filter_core(r, spec, prm, pre, nullptr);
}

inline double filter_loglik(std::span<const double> r, const MarginalSpec& spec, const MarginalParams& prm) {
  return filter_loglik(r, spec, prm, PresampleState::from_sample(r));
}

/// Conditional means, volatilities, standardized residuals and the
/// log-likelihood sum[ln f(z_t) - ln sigma_t].
inline FilterOutput filter(std::span<const double> r, const MarginalSpec& spec, const MarginalParams& prm,
                           const PresampleState& pre) {
  spec.validate();
  if (!prm.matches(spec)) throw DomainError("filter: parameter vector does not match " + spec.label());
  if (!prm.feasible()) throw DomainError("filter: parameters violate positivity/stationarity constraints");
  const int max_lag = std::max({spec.m, spec.n, spec.p, spec.q});
  if (r.size() <= static_cast<std::size_t>(max_lag)) throw DomainError("filter: series shorter than max lag");
  FilterOutput out;
  if (!std::isfinite(detail::filter_core(r, spec, prm, pre, &out))) {
    throw FilterError("filter: non-finite log-likelihood for " + spec.label());
  }
  return out;
}

inline FilterOutput filter(std::span<const double> r, const MarginalSpec& spec, const MarginalParams& prm) {
  return filter(r, spec, prm, PresampleState::from_sample(r));
}

struct SimulatedPath {
  std::vector<double> returns;
  std::vector<double> mu;
  std::vector<double> sigma;
};

/// Runs the recursion forward with given standardized innovations z_t.
inline SimulatedPath simulate_path(const MarginalSpec& spec, const MarginalParams& prm,
                                   std::span<const double> innovations, const PresampleState& pre) {
  spec.validate();
  if (!prm.matches(spec) || !prm.feasible()) throw DomainError("simulate_path: invalid parameters");
  const std::size_t T = innovations.size();
  SimulatedPath out;
  out.returns.resize(T);
  out.mu.resize(T);
  out.sigma.resize(T);
  std::vector<double> eps(T), s2(T);
  for (std::size_t t = 0; t < T; ++t) {
    const auto ti = static_cast<std::ptrdiff_t>(t);
    double mu = prm.phi0;
    for (int j = 1; j <= spec.m; ++j) mu += prm.phi[static_cast<std::size_t>(j - 1)] * (ti - j >= 0 ? out.returns[static_cast<std::size_t>(ti - j)] : pre.mean_return);
    for (int j = 1; j <= spec.n; ++j) {
      if (ti - j >= 0) mu += prm.gamma[static_cast<std::size_t>(j - 1)] * eps[static_cast<std::size_t>(ti - j)];
    }
    double var = prm.alpha0;
    for (int j = 1; j <= spec.p; ++j) {
      if (ti - j >= 0) var += prm.alpha[static_cast<std::size_t>(j - 1)] * eps[static_cast<std::size_t>(ti - j)] * eps[static_cast<std::size_t>(ti - j)];
    }
    for (int j = 1; j <= spec.q; ++j) {
      var += prm.beta[static_cast<std::size_t>(j - 1)] * (ti - j >= 0 ? s2[static_cast<std::size_t>(ti - j)] : pre.variance);
    }
    s2[t] = var;
    const double sd = std::sqrt(var);
    eps[t] = sd * innovations[t];
    out.returns[t] = mu + eps[t];
    out.mu[t] = mu;
    out.sigma[t] = sd;
  }
  return out;
}

/// Stationary pre-sample state implied by the parameters.
inline PresampleState stationary_presample(const MarginalParams& prm) {
  double ar = 0.0;
  for (double v : prm.phi) ar += v;
  PresampleState s;
  s.mean_return = std::abs(1.0 - ar) > 1e-8 ? prm.phi0 / (1.0 - ar) : prm.phi0;
  s.variance = prm.alpha0 / (1.0 - prm.persistence());
  return s;
}

// ---------------------------------------------------------------------------
// Estimation

struct MarginalFit {
  MarginalSpec spec;
  MarginalParams params;
  std::vector<double> std_errors;  // aligned with MarginalParams::flatten()
  double loglik = 0.0;
  double aic_raw = 0.0;      // 2k - 2LL
  double aic_per_obs = 0.0;  // aic_raw / T
  double bic_raw = 0.0;      // k ln T - 2LL
  std::size_t n_obs = 0;
  bool converged = false;
  int evaluations = 0;
  PresampleState presample;
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<double> z;
};

struct MarginalFitOptions {
  std::size_t min_obs = 100;
  int random_restarts = 3;
  std::uint64_t seed = 20220429;
  /// Evaluation budget of each exploratory start (per free parameter).
  int explore_evals_per_param = 60;
  int polish_evaluations = 1500;
  bool compute_std_errors = true;
};

namespace detail {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

inline constexpr double kEtaScale = 0.998;
inline constexpr double kLogNuExcessMin = -9.0;   // nu >= 2.0001
inline constexpr double kLogNuExcessMax = 13.0;   // nu <= ~4.4e5

/// Smooth map from R^k onto the admissible parameter region.
class MarginalTransform {
 public:
  explicit MarginalTransform(const MarginalSpec& spec) : spec_(spec) {}

  MarginalParams to_params(std::span<const double> x) const {
    MarginalParams p;
    std::size_t i = 0;
    p.phi0 = x[i++];
    for (int j = 0; j < spec_.m; ++j) p.phi.push_back(x[i++]);
    for (int j = 0; j < spec_.n; ++j) p.gamma.push_back(x[i++]);
    p.alpha0 = std::exp(std::clamp(x[i++], -30.0, 30.0));
    const int nv = spec_.p + spec_.q;
    const double total = kMaxPersistence * logistic(x[i++]);
    std::vector<double> w(static_cast<std::size_t>(nv), 0.0);
    w[0] = 0.0;
    for (int j = 1; j < nv; ++j) w[static_cast<std::size_t>(j)] = std::clamp(x[i++], -40.0, 40.0);
    const double wmax = *std::max_element(w.begin(), w.end());
    double wsum = 0.0;
    for (double& v : w) {
      v = std::exp(v - wmax);
      wsum += v;
    }
    for (int j = 0; j < spec_.p; ++j) p.alpha.push_back(total * w[static_cast<std::size_t>(j)] / wsum);
    for (int j = 0; j < spec_.q; ++j) p.beta.push_back(total * w[static_cast<std::size_t>(spec_.p + j)] / wsum);
    p.nu = 2.0 + std::exp(std::clamp(x[i++], kLogNuExcessMin, kLogNuExcessMax));
    p.eta = kEtaScale * std::tanh(0.5 * x[i++]);
    return p;
  }

  std::vector<double> from_params(const MarginalParams& p) const {
    std::vector<double> x;
    x.push_back(p.phi0);
    x.insert(x.end(), p.phi.begin(), p.phi.end());
    x.insert(x.end(), p.gamma.begin(), p.gamma.end());
    x.push_back(std::log(std::max(p.alpha0, 1e-12)));
    const double total = std::clamp(p.persistence(), 1e-6, kMaxPersistence * (1.0 - 1e-9));
    x.push_back(logit(total / kMaxPersistence));
    std::vector<double> comps(p.alpha.begin(), p.alpha.end());
    comps.insert(comps.end(), p.beta.begin(), p.beta.end());
    const double base = std::log(std::max(comps[0], 1e-10));
    for (std::size_t j = 1; j < comps.size(); ++j) x.push_back(std::log(std::max(comps[j], 1e-10)) - base);
    x.push_back(std::clamp(std::log(std::max(p.nu - 2.0, 1e-12)), kLogNuExcessMin, kLogNuExcessMax));
    const double e = std::clamp(p.eta / kEtaScale, -0.999999, 0.999999);
    x.push_back(2.0 * std::atanh(e));
    return x;
  }

 private:
  MarginalSpec spec_;
};

inline MarginalParams moment_matched_start(const MarginalSpec& spec, const PresampleState& pre) {
  MarginalParams p;
  p.phi0 = pre.mean_return;
  p.phi.assign(static_cast<std::size_t>(spec.m), 0.0);
  p.gamma.assign(static_cast<std::size_t>(spec.n), 0.0);
  double a_total = 0.08, b_total = 0.87;
  if (spec.q == 0) a_total = 0.3, b_total = 0.0;
  if (spec.p == 0) a_total = 0.0, b_total = 0.5;
  for (int j = 0; j < spec.p; ++j) p.alpha.push_back(a_total / spec.p);
  for (int j = 0; j < spec.q; ++j) p.beta.push_back(b_total / spec.q);
  p.alpha0 = std::max(pre.variance, 1e-8) * (1.0 - a_total - b_total);
  p.nu = 8.0;
  p.eta = 0.0;
  return p;
}

}  // namespace detail

inline void finalize_information_criteria(MarginalFit& fit) {
  const double k = fit.spec.parameter_count();
  const double T = static_cast<double>(fit.n_obs);
  fit.aic_raw = 2.0 * k - 2.0 * fit.loglik;
  fit.aic_per_obs = fit.aic_raw / T;
  fit.bic_raw = k * std::log(T) - 2.0 * fit.loglik;
}

/// Maximum-likelihood fit of one specification. One moment-matched start and
/// `random_restarts` perturbed starts are explored with Nelder-Mead; the best
/// is polished by Nelder-Mead then BFGS.
inline MarginalFit fit_marginal(std::span<const double> r, const MarginalSpec& spec,
                                const MarginalFitOptions& opt = {}) {
  spec.validate();
  if (r.size() < opt.min_obs) {
    throw FitError("fit " + spec.label() + ": " + std::to_string(r.size()) +
                   " observations is below the floor of " + std::to_string(opt.min_obs));
  }
  const PresampleState pre = PresampleState::from_sample(r);
  if (!(pre.variance > 0.0)) throw FitError("fit " + spec.label() + ": returns are constant");

  const detail::MarginalTransform tr(spec);
  const optim::Objective nll = [&](const optim::Vector& x) {
    return -detail::filter_core(r, spec, tr.to_params(x), pre, nullptr);
  };

  const optim::Vector x0 = tr.from_params(detail::moment_matched_start(spec, pre));
  std::vector<optim::Vector> starts{x0};
  std::mt19937_64 rng(opt.seed ^ (static_cast<std::uint64_t>(spec.m) << 24 | static_cast<std::uint64_t>(spec.n) << 16 |
                                  static_cast<std::uint64_t>(spec.p) << 8 | static_cast<std::uint64_t>(spec.q)));
  std::normal_distribution<double> jitter(0.0, 0.5);
  for (int s = 0; s < opt.random_restarts; ++s) {
    optim::Vector x = x0;
    for (double& v : x) v += jitter(rng);
    starts.push_back(std::move(x));
  }

  const int dim = static_cast<int>(x0.size());
  optim::NelderMeadOptions explore;
  explore.max_evaluations = opt.explore_evals_per_param * dim;
  optim::Result best;
  int evals = 0;
  for (const auto& s : starts) {
    optim::Result res = optim::nelder_mead(nll, s, explore);
    evals += res.evaluations;
    if (res.value < best.value) best = res;
  }
  if (!std::isfinite(best.value)) {
    throw FitError("fit " + spec.label() + ": no start produced a finite likelihood");
  }
  optim::NelderMeadOptions polish;
  polish.max_evaluations = opt.polish_evaluations;
  polish.initial_step = 0.1;
  optim::Result fin = optim::minimize(nll, best.x, polish);
  evals += fin.evaluations;

  MarginalFit fit;
  fit.spec = spec;
  fit.params = tr.to_params(fin.x);
  fit.n_obs = r.size();
  fit.converged = fin.converged && std::isfinite(fin.value);
  fit.evaluations = evals;
  fit.presample = pre;
  FilterOutput f = filter(r, spec, fit.params, pre);
  fit.loglik = f.loglik;
  fit.mu = std::move(f.mu);
  fit.sigma = std::move(f.sigma);
  fit.z = std::move(f.z);
  finalize_information_criteria(fit);

  if (opt.compute_std_errors) {
    const optim::Objective natural_nll = [&](const optim::Vector& v) {
      const double ll = detail::filter_core(r, spec, MarginalParams::unflatten(spec, v), pre, nullptr);
      return std::isfinite(ll) ? -ll : std::numeric_limits<double>::quiet_NaN();
    };
    fit.std_errors = optim::standard_errors(optim::numerical_hessian(natural_nll, fit.params.flatten()));
  } else {
    fit.std_errors.assign(static_cast<std::size_t>(spec.parameter_count()), std::numeric_limits<double>::quiet_NaN());
  }
  return fit;
}

inline MarginalFit fit_marginal(const ReturnSeries& r, const MarginalSpec& spec, const MarginalFitOptions& opt = {}) {
  return fit_marginal(std::span<const double>(r.values), spec, opt);
}

/// Inclusive bounds of the lag grid searched by `lag_search`.
struct LagGrid {
  int min_lag[4] = {0, 0, 0, 0};        // m, n, p, q
  int max_lag[4] = {kMaxLag, kMaxLag, kMaxLag, kMaxLag};

  std::vector<MarginalSpec> specs() const {
    std::vector<MarginalSpec> out;
    for (int m = min_lag[0]; m <= max_lag[0]; ++m)
      for (int n = min_lag[1]; n <= max_lag[1]; ++n)
        for (int p = min_lag[2]; p <= max_lag[2]; ++p)
          for (int q = min_lag[3]; q <= max_lag[3]; ++q) {
            if (p == 0 && q == 0) continue;
            out.push_back({m, n, p, q});
          }
    return out;
  }
};

struct LagSearchResult {
  MarginalFit best;
  std::vector<MarginalSpec> failed;
  std::vector<std::pair<MarginalSpec, double>> aic_table;  // raw AIC per fitted spec
};

/// Fits every admissible spec in the grid and keeps the minimal raw AIC;
/// ties go to fewer parameters, then to the lexicographically smaller spec.
inline LagSearchResult lag_search(std::span<const double> r, const LagGrid& grid = {},
                                  const MarginalFitOptions& opt = {}, unsigned threads = 0) {
  const auto specs = grid.specs();
  if (specs.empty()) throw FitError("lag_search: empty lag grid");
  std::vector<std::optional<MarginalFit>> fits(specs.size());
  std::vector<std::string> errors(specs.size());
  MarginalFitOptions quick = opt;
  quick.compute_std_errors = false;
  parallel_for(
      specs.size(),
      [&](std::size_t i) {
        try {
          fits[i] = fit_marginal(r, specs[i], quick);
        } catch (const Error& e) {
          errors[i] = e.what();
        }
      },
      threads);

  LagSearchResult out;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (!fits[i]) {
      out.failed.push_back(specs[i]);
      continue;
    }
    out.aic_table.emplace_back(specs[i], fits[i]->aic_raw);
    if (!best) {
      best = i;
      continue;
    }
    const auto& a = *fits[i];
    const auto& b = *fits[*best];
    const bool better = a.aic_raw < b.aic_raw ||
                        (a.aic_raw == b.aic_raw && (a.spec.parameter_count() < b.spec.parameter_count() ||
                                                    (a.spec.parameter_count() == b.spec.parameter_count() && a.spec < b.spec)));
    if (better) best = i;
  }
  if (!best) {
    std::string msg = "lag_search: all candidates failed";
    for (std::size_t i = 0; i < specs.size() && i < 5; ++i) msg += "; " + specs[i].label() + ": " + errors[i];
    throw FitError(msg);
  }
  if (opt.compute_std_errors) {
    out.best = fit_marginal(r, specs[*best], opt);
  } else {
    out.best = std::move(*fits[*best]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Probability-integral transform

struct PseudoObservations {
  std::vector<double> u;
  std::string source;
};

/// u_j = #{t : z_t <= z_j} / (T + 1); tied values share the maximal rank.
inline PseudoObservations pit_transform(std::span<const double> z, std::string source = {}) {
  if (z.empty()) throw DomainError("pit_transform: empty residual sequence");
  std::vector<double> sorted(z.begin(), z.end());
  std::sort(sorted.begin(), sorted.end());
  PseudoObservations out;
  out.source = std::move(source);
  out.u.resize(z.size());
  const double denom = static_cast<double>(z.size()) + 1.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    const auto rank = std::upper_bound(sorted.begin(), sorted.end(), z[j]) - sorted.begin();
    out.u[j] = static_cast<double>(rank) / denom;
  }
  return out;
}

/// Jarque-Bera, Ljung-Box on z and z^2, and ARCH-LM of the standardized residuals.
inline DescriptiveReport residual_diagnostics(const MarginalFit& fit, std::span<const int> lags) {
  if (fit.z.empty()) throw DomainError("residual_diagnostics: fit has no residuals");
  return describe_values(fit.z, lags);
}

}  // namespace tailrisk

#endif  // TAILRISK_MARGINAL_HPP_
