#ifndef TAILRISK_COPULA_FIT_HPP_
#define TAILRISK_COPULA_FIT_HPP_

// Canonical maximum-likelihood estimation of copulas on pseudo-observations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tailrisk/copula.hpp"
#include "tailrisk/error.hpp"
#include "tailrisk/marginal.hpp"
#include "tailrisk/optim.hpp"
#include "tailrisk/parallel.hpp"
#include "tailrisk/stats.hpp"

namespace tailrisk {

/// A fitted copula. `params` holds rho / (rho, nu) / alpha for single
/// families and (theta_gumbel, theta_survival, w1, w2) for the mixture.
struct CopulaModel {
  Copula copula;
  std::vector<std::string> param_names;
  std::vector<double> params;
  std::vector<double> std_errors;
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  int k = 0;
  std::size_t n_obs = 0;
  DependenceSummary dependence;
  bool converged = false;
  /// An estimate sits at (or numerically on) the edge of its admissible range.
  bool at_bound = false;
  /// Observations moved onto [1e-10, 1 - 1e-10] before density evaluation.
  std::size_t clamped = 0;
  int evaluations = 0;

  std::string name() const { return copula.name(); }
};

/// A candidate in model selection: a single family or the Gumbel/survival
/// Gumbel mixture.
struct CopulaCandidate {
  std::optional<Family> family;  // empty = mixture

  static CopulaCandidate single(Family f) { return {f}; }
  static CopulaCandidate mixture() { return {std::nullopt}; }

  std::string name() const {
    return family ? std::string(family_name(*family)) : std::string("Mixture(Gumbel,SurvivalGumbel)");
  }

  static CopulaCandidate parse(std::string_view text) {
    if (auto f = parse_family(text)) return single(*f);
    if (text == "Mixture" || text == "Mixture(Gumbel,SurvivalGumbel)" || text == "GumbelMixture") return mixture();
    throw ConfigError("unknown copula candidate '" + std::string(text) + "'");
  }

  /// The eight single families followed by the mixture.
  static std::vector<CopulaCandidate> all() {
    std::vector<CopulaCandidate> out;
    for (Family f : kAllFamilies) out.push_back(single(f));
    out.push_back(mixture());
    return out;
  }
};

struct CopulaFitOptions {
  std::size_t min_obs = 100;
  int single_restarts = 2;
  int mixture_restarts = 5;
  std::uint64_t seed = 20220429;
  bool compute_std_errors = true;
  std::size_t tau_mc_samples = 1'000'000;
};

namespace detail {

inline constexpr double kRhoMax = 1.0 - 1e-10;
inline constexpr double kWeightPad = 1e-3;

/// Maps between unconstrained optimizer coordinates and natural parameters
/// for one candidate.
struct CopulaTransform {
  CopulaCandidate cand;

  std::size_t dim() const {
    if (!cand.family) return 3;
    return *cand.family == Family::StudentT ? 2 : 1;
  }

  std::vector<double> to_natural(const optim::Vector& x) const {
    if (!cand.family) {
      const double w = std::clamp((1.0 + 2.0 * kWeightPad) * logistic(x[2]) - kWeightPad, 0.0, 1.0);
      return {1.0 + std::exp(std::min(x[0], 6.0)), 1.0 + std::exp(std::min(x[1], 6.0)), w};
    }
    switch (*cand.family) {
      case Family::Normal: return {std::clamp(std::tanh(x[0]), -kRhoMax, kRhoMax)};
      case Family::StudentT:
        return {std::clamp(std::tanh(x[0]), -kRhoMax, kRhoMax),
                std::min(kCopulaNuMax, kCopulaNuMin + std::exp(std::clamp(x[1], -30.0, 6.0)))};
      case Family::Clayton:
      case Family::SurvivalClayton: return {std::exp(std::clamp(x[0], -20.0, 6.0))};
      case Family::Rotated90Clayton:
      case Family::Rotated270Clayton: return {-std::exp(std::clamp(x[0], -20.0, 6.0))};
      case Family::Gumbel:
      case Family::SurvivalGumbel: return {1.0 + std::exp(std::clamp(x[0], -20.0, 6.0))};
    }
    return {};
  }

  optim::Vector from_natural(const std::vector<double>& v) const {
    if (!cand.family) {
      const double w = std::clamp(v[2], 1e-6, 1.0 - 1e-6);
      return {std::log(std::max(v[0] - 1.0, 1e-8)), std::log(std::max(v[1] - 1.0, 1e-8)),
              logit((w + kWeightPad) / (1.0 + 2.0 * kWeightPad))};
    }
    switch (*cand.family) {
      case Family::Normal: return {std::atanh(std::clamp(v[0], -0.999, 0.999))};
      case Family::StudentT:
        return {std::atanh(std::clamp(v[0], -0.999, 0.999)), std::log(std::max(v[1] - kCopulaNuMin, 1e-8))};
      case Family::Clayton:
      case Family::SurvivalClayton: return {std::log(std::max(v[0], 1e-8))};
      case Family::Rotated90Clayton:
      case Family::Rotated270Clayton: return {std::log(std::max(-v[0], 1e-8))};
      case Family::Gumbel:
      case Family::SurvivalGumbel: return {std::log(std::max(v[0] - 1.0, 1e-8))};
    }
    return {};
  }

  /// Throws DomainError when `v` is outside the admissible set.
  Copula build(const std::vector<double>& v) const {
    if (!cand.family) {
      if (!(v[2] >= 0.0 && v[2] <= 1.0)) throw DomainError("mixture weight outside [0,1]");
      return Copula::gumbel_mixture(v[0], v[1], v[2]);
    }
    if (*cand.family == Family::StudentT) return Copula(SingleCopula::student(v[0], v[1]));
    if (*cand.family == Family::Normal) return Copula(SingleCopula::normal(v[0]));
    return Copula(SingleCopula::of(*cand.family, v[0]));
  }

  /// Start values matched to the sample Kendall tau.
  std::vector<double> moment_start(double tau) const {
    const double t = std::clamp(tau, -0.9, 0.9);
    if (!cand.family) {
      const double g = 1.0 / (1.0 - std::clamp(t, 0.05, 0.9));
      return {g, g, 0.5};
    }
    switch (*cand.family) {
      case Family::Normal: return {std::sin(std::numbers::pi * t / 2.0)};
      case Family::StudentT: return {std::sin(std::numbers::pi * t / 2.0), 8.0};
      case Family::Clayton:
      case Family::SurvivalClayton: return {t > 0.02 ? 2.0 * t / (1.0 - t) : 0.05};
      case Family::Rotated90Clayton:
      case Family::Rotated270Clayton: return {t < -0.02 ? 2.0 * t / (1.0 + t) : -0.05};
      case Family::Gumbel:
      case Family::SurvivalGumbel: return {t > 0.02 ? 1.0 / (1.0 - t) : 1.05};
    }
    return {};
  }

  std::vector<std::string> names() const {
    if (!cand.family) return {"theta_gumbel", "theta_survival_gumbel", "w_gumbel", "w_survival_gumbel"};
    switch (*cand.family) {
      case Family::Normal: return {"rho"};
      case Family::StudentT: return {"rho", "nu"};
      default: return {"alpha"};
    }
  }

  bool at_bound(const std::vector<double>& v) const {
    if (!cand.family) return v[2] < 1e-3 || v[2] > 1.0 - 1e-3 || v[0] < 1.0 + 1e-3 || v[1] < 1.0 + 1e-3;
    switch (*cand.family) {
      case Family::Normal: return std::abs(v[0]) > 0.999;
      case Family::StudentT: return std::abs(v[0]) > 0.999 || v[1] < kCopulaNuMin + 1e-3 || v[1] > kCopulaNuMax - 1e-3;
      case Family::Clayton:
      case Family::SurvivalClayton:
      case Family::Rotated90Clayton:
      case Family::Rotated270Clayton: return std::abs(v[0]) < 1e-3;
      case Family::Gumbel:
      case Family::SurvivalGumbel: return v[0] < 1.0 + 1e-3;
    }
    return false;
  }
};

inline double copula_loglik(const Copula& c, std::span<const double> u1, std::span<const double> u2) {
  double ll = 0.0;
  for (std::size_t t = 0; t < u1.size(); ++t) {
    const double v = c.logpdf(u1[t], u2[t]);
    if (!std::isfinite(v)) return -std::numeric_limits<double>::infinity();
    ll += v;
  }
  return ll;
}

inline void check_pseudo(std::span<const double> u1, std::span<const double> u2, std::size_t min_obs) {
  if (u1.size() != u2.size()) throw DomainError("copula fit: pseudo-observation lengths differ");
  if (u1.size() < min_obs) {
    throw FitError("copula fit: " + std::to_string(u1.size()) + " observations is below the floor of " +
                   std::to_string(min_obs));
  }
  for (std::size_t t = 0; t < u1.size(); ++t) {
    if (!(u1[t] >= 0.0 && u1[t] <= 1.0 && u2[t] >= 0.0 && u2[t] <= 1.0)) {
      throw DomainError("copula fit: pseudo-observations must lie in [0,1]");
    }
  }
}

inline CopulaModel fit_candidate(std::span<const double> u1, std::span<const double> u2, const CopulaCandidate& cand,
                                 const CopulaFitOptions& opt, const std::vector<optim::Vector>& extra_starts = {}) {
  check_pseudo(u1, u2, opt.min_obs);
  const CopulaTransform tr{cand};
  const optim::Objective nll = [&](const optim::Vector& x) {
    try {
      return -copula_loglik(tr.build(tr.to_natural(x)), u1, u2);
    } catch (const DomainError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  const double tau = kendall_tau(u1, u2);
  std::vector<optim::Vector> starts{tr.from_natural(tr.moment_start(tau))};
  for (const auto& s : extra_starts) starts.push_back(s);
  std::mt19937_64 rng(opt.seed + 7919 * static_cast<std::uint64_t>(cand.family ? static_cast<int>(*cand.family) + 1 : 0));
  const int restarts = cand.family ? opt.single_restarts : opt.mixture_restarts;
  if (cand.family) {
    std::normal_distribution<double> jitter(0.0, 0.5);
    for (int r = 0; r < restarts; ++r) {
      optim::Vector x = starts.front();
      for (double& v : x) v += jitter(rng);
      starts.push_back(std::move(x));
    }
  } else {
    std::uniform_real_distribution<double> spread(-2.5, 2.5);
    for (int r = 0; r < restarts; ++r) starts.push_back({spread(rng), spread(rng), spread(rng)});
  }

  optim::NelderMeadOptions nm;
  nm.max_evaluations = 400 * static_cast<int>(tr.dim());
  nm.initial_step = 0.3;
  optim::Result best;
  std::string trace;
  int evals = 0;
  for (const auto& s : starts) {
    optim::Result r = optim::minimize(nll, s, nm);
    evals += r.evaluations;
    trace += " " + std::to_string(-r.value);
    if (r.value < best.value) best = r;
  }
  if (!std::isfinite(best.value)) {
    throw FitError("copula fit " + cand.name() + ": no start reached a finite likelihood; per-start LL:" + trace);
  }

  CopulaModel m;
  const std::vector<double> nat = tr.to_natural(best.x);
  m.copula = tr.build(nat);
  m.param_names = tr.names();
  m.params = nat;
  if (!cand.family) m.params.push_back(1.0 - nat[2]);
  m.n_obs = u1.size();
  m.loglik = -best.value;
  m.k = m.copula.parameter_count();
  if (!cand.family) m.k = 3;
  const double n = static_cast<double>(m.n_obs);
  m.aic = 2.0 * m.k - 2.0 * m.loglik;
  m.bic = m.k * std::log(n) - 2.0 * m.loglik;
  m.converged = best.converged;
  m.at_bound = tr.at_bound(nat);
  m.evaluations = evals;
  for (std::size_t t = 0; t < u1.size(); ++t) {
    if (u1[t] < kUClamp || u1[t] > 1.0 - kUClamp || u2[t] < kUClamp || u2[t] > 1.0 - kUClamp) ++m.clamped;
  }

  m.std_errors.assign(m.params.size(), std::numeric_limits<double>::quiet_NaN());
  if (opt.compute_std_errors) {
    const optim::Objective natural_nll = [&](const optim::Vector& v) {
      try {
        const double ll = copula_loglik(tr.build(v), u1, u2);
        return std::isfinite(ll) ? -ll : std::numeric_limits<double>::quiet_NaN();
      } catch (const DomainError&) {
        return std::numeric_limits<double>::quiet_NaN();
      }
    };
    const optim::Vector se = optim::standard_errors(optim::numerical_hessian(natural_nll, nat));
    std::copy(se.begin(), se.end(), m.std_errors.begin());
    if (!cand.family) m.std_errors[3] = m.std_errors[2];
  }
  m.dependence = m.copula.dependence(opt.tau_mc_samples, opt.seed);
  return m;
}

}  // namespace detail

/// CML fit of one family on paired pseudo-observations (u1 spot, u2 futures).
inline CopulaModel fit_single(std::span<const double> u1, std::span<const double> u2, Family family,
                              const CopulaFitOptions& opt = {}) {
  return detail::fit_candidate(u1, u2, CopulaCandidate::single(family), opt);
}

/// Gumbel / survival-Gumbel mixture. Besides the random restarts, one start
/// places all weight on whichever pure component fits better, so the result
/// is never worse than either single fit.
inline CopulaModel fit_mixed(std::span<const double> u1, std::span<const double> u2, const CopulaFitOptions& opt = {},
                             const CopulaModel* gumbel = nullptr, const CopulaModel* survival_gumbel = nullptr) {
  CopulaFitOptions single_opt = opt;
  single_opt.compute_std_errors = false;
  std::optional<CopulaModel> g, sg;
  if (!gumbel) gumbel = &g.emplace(fit_single(u1, u2, Family::Gumbel, single_opt));
  if (!survival_gumbel) survival_gumbel = &sg.emplace(fit_single(u1, u2, Family::SurvivalGumbel, single_opt));
  const detail::CopulaTransform tr{CopulaCandidate::mixture()};
  const double tg = gumbel->params[0], ts = survival_gumbel->params[0];
  optim::Vector start = tr.from_natural({tg, ts, 0.5});
  start[2] = gumbel->loglik >= survival_gumbel->loglik ? 12.0 : -12.0;
  return detail::fit_candidate(u1, u2, CopulaCandidate::mixture(), opt, {start});
}

struct ModelSelection {
  std::vector<CopulaModel> ranked;  // AIC ascending
  std::vector<std::pair<std::string, std::string>> failures;  // candidate, message
};

/// Fits every candidate and ranks the successes by AIC. Throws FitError only
/// when every candidate fails.
inline ModelSelection model_selection(std::span<const double> u1, std::span<const double> u2,
                                      const std::vector<CopulaCandidate>& candidates, const CopulaFitOptions& opt = {},
                                      unsigned threads = 0) {
  if (candidates.empty()) throw ConfigError("model_selection: no candidates");
  std::vector<std::optional<CopulaModel>> fits(candidates.size());
  std::vector<std::string> errors(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) {
    try {
      fits[i] = candidates[i].family ? fit_single(u1, u2, *candidates[i].family, opt) : fit_mixed(u1, u2, opt);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }, threads);
  ModelSelection out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (fits[i]) {
      out.ranked.push_back(std::move(*fits[i]));
    } else {
      out.failures.emplace_back(candidates[i].name(), errors[i]);
    }
  }
  if (out.ranked.empty()) {
    std::string msg = "model_selection: every candidate failed;";
    for (const auto& [name, err] : out.failures) msg += " " + name + ": " + err + ";";
    throw FitError(msg);
  }
  std::stable_sort(out.ranked.begin(), out.ranked.end(),
                   [](const CopulaModel& a, const CopulaModel& b) { return a.aic < b.aic; });
  return out;
}

}  // namespace tailrisk

#endif  // TAILRISK_COPULA_FIT_HPP_
