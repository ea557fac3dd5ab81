#ifndef TAILRISK_RISK_HPP_
#define TAILRISK_RISK_HPP_

// VaR, copula-conditional CoVaR and Delta-CoVaR of the spot series given the
// futures series. Copula arguments are (spot, futures).

#include <cmath>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "tailrisk/copula.hpp"
#include "tailrisk/copula_fit.hpp"
#include "tailrisk/distributions.hpp"
#include "tailrisk/error.hpp"
#include "tailrisk/marginal.hpp"
#include "tailrisk/market_data.hpp"
#include "tailrisk/stats.hpp"

namespace tailrisk {

enum class Side { Down, Up };

/// How the upper-tail conditioning event is written.
enum class UpsideConvention {
  /// Pr(U2 >= a1, U1 >= u*) = (1 - a1)(1 - a2): the conditioning event is the
  /// futures return above its upper quantile.
  SurvivalEvent,
  /// C(u*, a1) = a1 a2 with upper-tail levels, the downside formula reused.
  CdfEvent,
};

/// How the median ("normal") state of the futures market is conditioned on.
enum class NormalStateConvention {
  Event,     // futures at or below its median (same machinery as the tail event)
  Equality,  // futures exactly at its median, via the h-function
};

inline std::string_view to_string(UpsideConvention c) {
  return c == UpsideConvention::SurvivalEvent ? "survival-event" : "cdf-event";
}
inline std::string_view to_string(NormalStateConvention c) {
  return c == NormalStateConvention::Event ? "event" : "equality";
}
inline UpsideConvention parse_upside_convention(std::string_view s) {
  if (s == "survival-event") return UpsideConvention::SurvivalEvent;
  if (s == "cdf-event") return UpsideConvention::CdfEvent;
  throw ConfigError("unknown upside convention '" + std::string(s) + "'");
}
inline NormalStateConvention parse_normal_state_convention(std::string_view s) {
  if (s == "event") return NormalStateConvention::Event;
  if (s == "equality") return NormalStateConvention::Equality;
  throw ConfigError("unknown normal-state convention '" + std::string(s) + "'");
}

struct RiskConfig {
  double alpha_down = 0.05;
  double alpha_up = 0.95;
  double normal_state = 0.5;
  UpsideConvention upside_convention = UpsideConvention::SurvivalEvent;
  NormalStateConvention normal_state_convention = NormalStateConvention::Event;

  void validate() const {
    if (!(alpha_down > 0.0 && alpha_down < 0.5 && alpha_up > 0.5 && alpha_up < 1.0)) {
      throw ConfigError("risk levels must satisfy 0 < alpha_down < 0.5 < alpha_up < 1");
    }
    if (!(normal_state > 0.0 && normal_state < 1.0)) throw ConfigError("normal_state must lie in (0,1)");
  }
};

inline constexpr double kRootLo = 1e-12;
inline constexpr double kRootHi = 1.0 - 1e-12;
inline constexpr double kRootTol = 1e-10;
inline constexpr int kRootMaxIter = 200;

namespace detail {
/// Root of a monotone function on [1e-12, 1 - 1e-12] by bisection.
template <typename F>
double bisect_unit(F&& g, const char* what) {
  double lo = kRootLo, hi = kRootHi;
  const double glo = g(lo), ghi = g(hi);
  if (glo == 0.0) return lo;
  if (ghi == 0.0) return hi;
  if (!(std::signbit(glo) != std::signbit(ghi)) || !std::isfinite(glo) || !std::isfinite(ghi)) {
    throw NumericalError(std::string(what) + ": no sign change on the unit bracket");
  }
  const bool increasing = ghi > glo;
  for (int it = 0; it < kRootMaxIter && hi - lo > kRootTol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if ((gm < 0.0) == increasing) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline bool is_pure_clayton(const Copula& c) {
  return !c.is_mixture() && c.single().family == Family::Clayton;
}
}  // namespace detail

/// Spot probability level u* of CoVaR when the futures margin sits in its
/// alpha1 tail event and the spot tail level is alpha2.
inline double covar_quantile(const Copula& c, double alpha1, double alpha2, Side side,
                             UpsideConvention convention = UpsideConvention::SurvivalEvent) {
  if (!(alpha1 > 0.0 && alpha1 < 1.0 && alpha2 > 0.0 && alpha2 < 1.0)) {
    throw DomainError("covar_quantile: levels must lie in (0,1)");
  }
  if (c.is_independence()) return alpha2;
  if (side == Side::Down || convention == UpsideConvention::CdfEvent) {
    const double target = alpha1 * alpha2;
    if (detail::is_pure_clayton(c)) {
      const double a = c.single().theta;
      return std::pow(std::pow(target, -a) - std::pow(alpha1, -a) + 1.0, -1.0 / a);
    }
    return detail::bisect_unit([&](double u) { return c.cdf(u, alpha1) - target; }, "covar_quantile");
  }
  const double target = (1.0 - alpha1) * (1.0 - alpha2);
  return detail::bisect_unit([&](double u) { return 1.0 - u - alpha1 + c.cdf(u, alpha1) - target; },
                             "covar_quantile");
}

/// Spot level u* for the normal state of the futures margin at `state`.
inline double normal_state_quantile(const Copula& c, double state, double alpha2, Side side, const RiskConfig& cfg) {
  if (cfg.normal_state_convention == NormalStateConvention::Event) {
    return covar_quantile(c, state, alpha2, side, cfg.upside_convention);
  }
  if (c.is_independence()) return alpha2;
  return detail::bisect_unit([&](double u) { return c.h(u, state) - alpha2; }, "normal_state_quantile");
}

/// VaR_t = mu_t + sigma_t q(alpha) under the fitted skewed-t.
inline std::vector<double> var_series(const MarginalFit& fit, double alpha) {
  const double q = skewt_quantile(alpha, fit.params.nu, fit.params.eta);
  std::vector<double> out(fit.mu.size());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = fit.mu[t] + fit.sigma[t] * q;
  return out;
}

struct RiskSeries {
  std::vector<Date> dates;
  std::vector<double> var_down, var_up;
  std::vector<double> covar_down, covar_up;
  std::vector<double> covar_down_normal, covar_up_normal;
  std::vector<double> delta_covar_down, delta_covar_up;
  // Spot probability levels behind each CoVaR (constant over time).
  double u_down = 0.0, u_up = 0.0, u_down_normal = 0.0, u_up_normal = 0.0;

  std::size_t size() const noexcept { return var_down.size(); }
};

/// Full VaR / CoVaR / Delta-CoVaR series for the spot margin.
inline RiskSeries compute_risk(const MarginalFit& spot, const Copula& c, const RiskConfig& cfg = {},
                               std::vector<Date> dates = {}) {
  cfg.validate();
  if (spot.mu.size() != spot.sigma.size() || spot.mu.empty()) throw DomainError("compute_risk: marginal fit has no filtered path");
  if (!dates.empty() && dates.size() != spot.mu.size()) throw DomainError("compute_risk: dates do not match the fit");
  RiskSeries r;
  r.dates = std::move(dates);
  r.u_down = covar_quantile(c, cfg.alpha_down, cfg.alpha_down, Side::Down, cfg.upside_convention);
  r.u_up = covar_quantile(c, cfg.alpha_up, cfg.alpha_up, Side::Up, cfg.upside_convention);
  r.u_down_normal = normal_state_quantile(c, cfg.normal_state, cfg.alpha_down, Side::Down, cfg);
  r.u_up_normal = normal_state_quantile(c, cfg.normal_state, cfg.alpha_up, Side::Up, cfg);

  const double nu = spot.params.nu, eta = spot.params.eta;
  const double q_var_down = skewt_quantile(cfg.alpha_down, nu, eta);
  const double q_var_up = skewt_quantile(cfg.alpha_up, nu, eta);
  const double q_down = r.u_down == cfg.alpha_down ? q_var_down : skewt_quantile(r.u_down, nu, eta);
  const double q_up = r.u_up == cfg.alpha_up ? q_var_up : skewt_quantile(r.u_up, nu, eta);
  const double q_down_n = r.u_down_normal == cfg.alpha_down ? q_var_down : skewt_quantile(r.u_down_normal, nu, eta);
  const double q_up_n = r.u_up_normal == cfg.alpha_up ? q_var_up : skewt_quantile(r.u_up_normal, nu, eta);

  const std::size_t T = spot.mu.size();
  for (auto* v : {&r.var_down, &r.var_up, &r.covar_down, &r.covar_up, &r.covar_down_normal, &r.covar_up_normal,
                  &r.delta_covar_down, &r.delta_covar_up}) {
    v->resize(T);
  }
  for (std::size_t t = 0; t < T; ++t) {
    const double m = spot.mu[t], s = spot.sigma[t];
    r.var_down[t] = m + s * q_var_down;
    r.var_up[t] = m + s * q_var_up;
    r.covar_down[t] = m + s * q_down;
    r.covar_up[t] = m + s * q_up;
    r.covar_down_normal[t] = m + s * q_down_n;
    r.covar_up_normal[t] = m + s * q_up_n;
    r.delta_covar_down[t] = r.covar_down[t] - r.covar_down_normal[t];
    r.delta_covar_up[t] = r.covar_up[t] - r.covar_up_normal[t];
  }
  return r;
}

inline RiskSeries compute_risk(const MarginalFit& spot, const CopulaModel& model, const RiskConfig& cfg = {},
                               std::vector<Date> dates = {}) {
  return compute_risk(spot, model.copula, cfg, std::move(dates));
}

struct RiskSummaryRow {
  std::string measure;
  std::string side;
  double mean = 0.0;
  double std_dev = 0.0;
  double max = 0.0;
  double min = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;  // excess
};

/// Mean, standard deviation, extremes, skewness and excess kurtosis of each
/// measure, downside rows first.
inline std::vector<RiskSummaryRow> risk_summary(const RiskSeries& r) {
  if (r.size() == 0) throw DegenerateInputError("risk_summary: empty series");
  const std::vector<std::tuple<const char*, const char*, const std::vector<double>*>> rows = {
      {"VaR", "down", &r.var_down},       {"CoVaR", "down", &r.covar_down},
      {"DeltaCoVaR", "down", &r.delta_covar_down}, {"VaR", "up", &r.var_up},
      {"CoVaR", "up", &r.covar_up},       {"DeltaCoVaR", "up", &r.delta_covar_up}};
  std::vector<RiskSummaryRow> out;
  for (const auto& [measure, side, v] : rows) {
    const Moments m = moments(*v);
    out.push_back({measure, side, m.mean, m.std_dev, m.max, m.min, m.skewness, m.kurtosis - 3.0});
  }
  return out;
}

}  // namespace tailrisk

#endif  // TAILRISK_RISK_HPP_
