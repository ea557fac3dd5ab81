#ifndef TAILRISK_INFERENCE_HPP_
#define TAILRISK_INFERENCE_HPP_

// Two-sample Kolmogorov-Smirnov tests and the three spillover hypotheses.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tailrisk/error.hpp"
#include "tailrisk/parallel.hpp"
#include "tailrisk/risk.hpp"

namespace tailrisk {

/// Alternatives follow the usual two-sample convention with G the ECDF of
/// x and H that of y: Greater uses sup(G - H) (x stochastically smaller),
/// Less uses sup(H - G) (x stochastically larger).
enum class Alternative { TwoSided, Less, Greater };
enum class PValueMethod { Asymptotic, Bootstrap };

inline std::string_view to_string(Alternative a) {
  switch (a) {
    case Alternative::TwoSided: return "two-sided";
    case Alternative::Less: return "less";
    case Alternative::Greater: return "greater";
  }
  return "?";
}
inline std::string_view to_string(PValueMethod m) {
  return m == PValueMethod::Asymptotic ? "asymptotic" : "bootstrap";
}
inline PValueMethod parse_pvalue_method(std::string_view s) {
  if (s == "asymptotic") return PValueMethod::Asymptotic;
  if (s == "bootstrap") return PValueMethod::Bootstrap;
  throw ConfigError("unknown p-value method '" + std::string(s) + "'");
}

struct KSOptions {
  PValueMethod method = PValueMethod::Asymptotic;
  int n_boot = 999;
  std::uint64_t seed = 20220429;
  unsigned threads = 0;
};

struct KSResult {
  double statistic = 0.0;  // scaled by sqrt(mn / (m + n))
  double p_value = 1.0;
  Alternative alternative = Alternative::TwoSided;
  PValueMethod method = PValueMethod::Asymptotic;
  int n_boot = 0;
  std::size_t m = 0;
  std::size_t n = 0;
};

/// Pr(K > lambda) for the Kolmogorov limiting distribution.
inline double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double cdf = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double j = 2.0 * k - 1.0;
      const double term = std::exp(-j * j * pi2 / (8.0 * lambda * lambda));
      cdf += term;
      if (term < 1e-18) break;
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

namespace detail {
/// Unscaled sup(G - H) and sup(H - G) over the pooled sample; inputs sorted.
inline std::pair<double, double> ks_sups(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double m = static_cast<double>(xs.size()), n = static_cast<double>(ys.size());
  std::size_t i = 0, j = 0;
  double dplus = 0.0, dminus = 0.0;
  while (i < xs.size() || j < ys.size()) {
    const double v = j == ys.size() || (i < xs.size() && xs[i] <= ys[j]) ? xs[i] : ys[j];
    while (i < xs.size() && xs[i] == v) ++i;
    while (j < ys.size() && ys[j] == v) ++j;
    const double d = static_cast<double>(i) / m - static_cast<double>(j) / n;
    dplus = std::max(dplus, d);
    dminus = std::max(dminus, -d);
  }
  return {dplus, dminus};
}

inline double ks_pick(std::pair<double, double> d, Alternative alt) {
  switch (alt) {
    case Alternative::TwoSided: return std::max(d.first, d.second);
    case Alternative::Greater: return d.first;
    case Alternative::Less: return d.second;
  }
  return 0.0;
}

inline std::uint64_t mix_seed(std::uint64_t root, std::uint64_t i) {
  std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (i + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

inline KSResult ks_two_sample(std::span<const double> x, std::span<const double> y,
                              Alternative alt = Alternative::TwoSided, const KSOptions& opt = {}) {
  if (x.size() < 2 || y.size() < 2) throw DegenerateInputError("ks_two_sample: each sample needs at least 2 values");
  std::vector<double> xs(x.begin(), x.end()), ys(y.begin(), y.end());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  const double m = static_cast<double>(xs.size()), n = static_cast<double>(ys.size());
  const double scale = std::sqrt(m * n / (m + n));
  const double d = detail::ks_pick(detail::ks_sups(xs, ys), alt);

  KSResult r;
  r.statistic = scale * d;
  r.alternative = alt;
  r.method = opt.method;
  r.m = xs.size();
  r.n = ys.size();
  if (opt.method == PValueMethod::Asymptotic) {
    r.p_value = alt == Alternative::TwoSided ? kolmogorov_sf(r.statistic)
                                             : std::min(1.0, std::exp(-2.0 * r.statistic * r.statistic));
    return r;
  }
  if (opt.n_boot < 1) throw ConfigError("ks_two_sample: n_boot must be >= 1");
  r.n_boot = opt.n_boot;
  std::vector<double> pool(xs);
  pool.insert(pool.end(), ys.begin(), ys.end());
  std::vector<char> exceed(static_cast<std::size_t>(opt.n_boot), 0);
  parallel_for(exceed.size(), [&](std::size_t b) {
    std::mt19937_64 rng(detail::mix_seed(opt.seed, b));
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::vector<double> bx(xs.size()), by(ys.size());
    for (double& v : bx) v = pool[pick(rng)];
    for (double& v : by) v = pool[pick(rng)];
    std::sort(bx.begin(), bx.end());
    std::sort(by.begin(), by.end());
    exceed[b] = detail::ks_pick(detail::ks_sups(bx, by), alt) >= d - 1e-12;
  }, opt.threads);
  const auto count = std::count(exceed.begin(), exceed.end(), 1);
  r.p_value = (1.0 + static_cast<double>(count)) / (1.0 + opt.n_boot);
  return r;
}

struct HypothesisResult {
  std::string name;
  std::string h0;
  std::string h1;
  KSResult ks;
};

struct SpilloverTestReport {
  HypothesisResult downside;           // H1: CoVaR_down < VaR_down
  HypothesisResult upside;             // H1: CoVaR_up > VaR_up
  HypothesisResult asymmetry;          // H1: downside ratio larger
  HypothesisResult asymmetry_reverse;  // H1: upside ratio larger
  std::size_t ratio_dates_dropped = 0;
};

/// Near-zero VaR denominators excluded from the normalized ratios.
inline constexpr double kRatioFloor = 1e-9;

inline SpilloverTestReport spillover_tests(const RiskSeries& r, const KSOptions& opt = {}) {
  const std::size_t T = r.size();
  if (T < 2 || r.covar_down.size() != T || r.var_up.size() != T || r.covar_up.size() != T) {
    throw DomainError("spillover_tests: risk series missing or of unequal length");
  }
  SpilloverTestReport rep;
  rep.downside = {"downside", "CoVaR_down = VaR_down", "CoVaR_down < VaR_down",
                  ks_two_sample(r.covar_down, r.var_down, Alternative::Greater, opt)};
  rep.upside = {"upside", "CoVaR_up = VaR_up", "CoVaR_up > VaR_up",
                ks_two_sample(r.covar_up, r.var_up, Alternative::Less, opt)};
  std::vector<double> down, up;
  down.reserve(T);
  up.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    if (std::abs(r.var_down[t]) < kRatioFloor || std::abs(r.var_up[t]) < kRatioFloor) {
      ++rep.ratio_dates_dropped;
      continue;
    }
    down.push_back(r.covar_down[t] / r.var_down[t]);
    up.push_back(r.covar_up[t] / r.var_up[t]);
  }
  rep.asymmetry = {"asymmetry", "CoVaR_down/VaR_down = CoVaR_up/VaR_up", "CoVaR_down/VaR_down > CoVaR_up/VaR_up",
                   ks_two_sample(down, up, Alternative::Less, opt)};
  rep.asymmetry_reverse = {"asymmetry_reverse", "CoVaR_down/VaR_down = CoVaR_up/VaR_up",
                           "CoVaR_down/VaR_down < CoVaR_up/VaR_up", ks_two_sample(down, up, Alternative::Greater, opt)};
  return rep;
}

}  // namespace tailrisk

#endif  // TAILRISK_INFERENCE_HPP_
