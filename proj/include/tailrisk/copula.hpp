#ifndef TAILRISK_COPULA_HPP_
#define TAILRISK_COPULA_HPP_

// Bivariate copulas: the eight single families and finite mixtures of them.
// Argument convention: the first argument carries the spot margin, the second
// the futures margin. h(u1 | u2) is dC(u1,u2)/du2 = Pr(U1 <= u1 | U2 = u2).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "tailrisk/distributions.hpp"
#include "tailrisk/error.hpp"
#include "tailrisk/stats.hpp"

namespace tailrisk {

enum class Family {
  Normal,
  StudentT,
  Clayton,
  SurvivalClayton,
  Rotated90Clayton,
  Rotated270Clayton,
  Gumbel,
  SurvivalGumbel,
};

inline constexpr std::array<Family, 8> kAllFamilies = {
    Family::Normal,           Family::StudentT,          Family::Clayton, Family::SurvivalClayton,
    Family::Rotated90Clayton, Family::Rotated270Clayton, Family::Gumbel,  Family::SurvivalGumbel};

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::Normal: return "Normal";
    case Family::StudentT: return "StudentT";
    case Family::Clayton: return "Clayton";
    case Family::SurvivalClayton: return "SurvivalClayton";
    case Family::Rotated90Clayton: return "Rotated90Clayton";
    case Family::Rotated270Clayton: return "Rotated270Clayton";
    case Family::Gumbel: return "Gumbel";
    case Family::SurvivalGumbel: return "SurvivalGumbel";
  }
  return "?";
}

inline std::optional<Family> parse_family(std::string_view name) {
  for (Family f : kAllFamilies) {
    if (family_name(f) == name) return f;
  }
  return std::nullopt;
}

/// Clamp applied to pseudo-observations before density evaluation.
inline constexpr double kUClamp = 1e-10;
/// Student-t copula degrees-of-freedom bounds.
inline constexpr double kCopulaNuMin = 2.0 + 1e-4;
inline constexpr double kCopulaNuMax = 100.0;

namespace copula_kernels {

// ---- Clayton, theta > 0 ---------------------------------------------------

/// log(u1^-t + u2^-t - 1), accurate for small and large theta.
inline double clayton_log_s(double u1, double u2, double theta) {
  const double a = -theta * std::log(u1);
  const double b = -theta * std::log(u2);
  const double mx = std::max(a, b), mn = std::min(a, b);
  if (mx < 30.0) return std::log1p(std::expm1(a) + std::expm1(b));
  return mx + std::log1p(std::exp(mn - mx) - std::exp(-mx));
}

inline double clayton_cdf(double u1, double u2, double theta) {
  return std::exp(-clayton_log_s(u1, u2, theta) / theta);
}

inline double clayton_logpdf(double u1, double u2, double theta) {
  return std::log1p(theta) - (theta + 1.0) * (std::log(u1) + std::log(u2)) -
         (2.0 + 1.0 / theta) * clayton_log_s(u1, u2, theta);
}

inline double clayton_h(double u1, double u2, double theta) {
  return std::exp(-(theta + 1.0) * std::log(u2) - (1.0 / theta + 1.0) * clayton_log_s(u1, u2, theta));
}

// ---- Gumbel, theta >= 1 ---------------------------------------------------

/// log((-ln u1)^t + (-ln u2)^t).
inline double gumbel_log_a(double x, double y, double theta) {
  const double mx = std::max(x, y), mn = std::min(x, y);
  if (mx <= 0.0) return -std::numeric_limits<double>::infinity();
  return theta * std::log(mx) + std::log1p(std::pow(mn / mx, theta));
}

inline double gumbel_cdf(double u1, double u2, double theta) {
  const double x = -std::log(u1), y = -std::log(u2);
  return std::exp(-std::exp(gumbel_log_a(x, y, theta) / theta));
}

inline double gumbel_logpdf(double u1, double u2, double theta) {
  const double x = -std::log(u1), y = -std::log(u2);
  const double la = gumbel_log_a(x, y, theta);
  const double a_root = std::exp(la / theta);
  return -a_root + (theta - 1.0) * (std::log(x) + std::log(y)) + x + y - (2.0 - 1.0 / theta) * la +
         std::log(a_root + theta - 1.0);
}

inline double gumbel_h(double u1, double u2, double theta) {
  const double x = -std::log(u1), y = -std::log(u2);
  const double la = gumbel_log_a(x, y, theta);
  return std::exp(-std::exp(la / theta) + (1.0 / theta - 1.0) * la + (theta - 1.0) * std::log(y) + y);
}

// ---- Normal ---------------------------------------------------------------

/// Pr(X > dh, Y > dk) for a standard bivariate normal with correlation r
/// (Genz's BVNU, Drezner-Wesolowsky with Gauss-Legendre rules).
inline double bvnu(double dh, double dk, double r) {
  static constexpr double kW[3][10] = {
      {0.1713244923791705, 0.3607615730481384, 0.4679139345726904},
      {0.04717533638651177, 0.1069393259953183, 0.1600783285433464, 0.2031674267230659, 0.2334925365383547,
       0.2491470458134029},
      {0.01761400713915212, 0.04060142980038694, 0.06267204833410906, 0.08327674157670475, 0.1019301198172404,
       0.1181945319615184, 0.1316886384491766, 0.1420961093183821, 0.1491729864726037, 0.1527533871307259}};
  static constexpr double kX[3][10] = {
      {-0.9324695142031522, -0.6612093864662647, -0.2386191860831970},
      {-0.9815606342467191, -0.9041172563704750, -0.7699026741943050, -0.5873179542866171, -0.3678314989981802,
       -0.1252334085114692},
      {-0.9931285991850949, -0.9639719272779138, -0.9122344282513259, -0.8391169718222188, -0.7463319064601508,
       -0.6360536807265150, -0.5108670019508271, -0.3737060887154196, -0.2277858511416451, -0.07652652113349733}};
  constexpr double twopi = 2.0 * std::numbers::pi;
  int ng, lg;
  if (std::abs(r) < 0.3) {
    ng = 0, lg = 3;
  } else if (std::abs(r) < 0.75) {
    ng = 1, lg = 6;
  } else {
    ng = 2, lg = 10;
  }
  double h = dh, k = dk, hk = h * k, bvn = 0.0;
  if (std::abs(r) < 0.925) {
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(r);
    for (int i = 0; i < lg; ++i) {
      double sn = std::sin(asr * (kX[ng][i] + 1.0) / 2.0);
      bvn += kW[ng][i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      sn = std::sin(asr * (-kX[ng][i] + 1.0) / 2.0);
      bvn += kW[ng][i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
    }
    return bvn * asr / (2.0 * twopi) + normal_cdf(-h) * normal_cdf(-k);
  }
  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  if (std::abs(r) < 1.0) {
    const double as = (1.0 - r) * (1.0 + r);
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 16.0;
    bvn = a * std::exp(-(bs / as + hk) / 2.0) * (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
    if (hk > -160.0) {
      const double b = std::sqrt(bs);
      bvn -= std::exp(-hk / 2.0) * std::sqrt(twopi) * normal_cdf(-b / a) * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a /= 2.0;
    for (int i = 0; i < lg; ++i) {
      for (double sgn : {-1.0, 1.0}) {
        const double xs = std::pow(a * (sgn * kX[ng][i] + 1.0), 2);
        const double rs = std::sqrt(1.0 - xs);
        const double asr = -(bs / xs + hk) / 2.0;
        if (asr > -100.0) {
          bvn += a * kW[ng][i] * std::exp(asr) *
                 (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs - (1.0 + c * xs * (1.0 + d * xs)));
        }
      }
    }
    bvn = -bvn / twopi;
  }
  if (r > 0.0) return bvn + normal_cdf(-std::max(h, k));
  bvn = -bvn;
  if (k > h) {
    bvn += h < 0.0 ? normal_cdf(k) - normal_cdf(h) : normal_cdf(-h) - normal_cdf(-k);
  }
  return bvn;
}

inline double normal_cdf2(double u1, double u2, double rho) {
  return std::clamp(bvnu(-normal_quantile(u1), -normal_quantile(u2), rho), 0.0, std::min(u1, u2));
}

inline double normal_logpdf(double u1, double u2, double rho) {
  const double x1 = normal_quantile(u1), x2 = normal_quantile(u2);
  const double om = 1.0 - rho * rho;
  return -0.5 * std::log(om) - (rho * rho * (x1 * x1 + x2 * x2) - 2.0 * rho * x1 * x2) / (2.0 * om);
}

inline double normal_h(double u1, double u2, double rho) {
  const double x1 = normal_quantile(u1), x2 = normal_quantile(u2);
  return normal_cdf((x1 - rho * x2) / std::sqrt(1.0 - rho * rho));
}

// ---- Student-t ------------------------------------------------------------

inline double student_logpdf(double u1, double u2, double rho, double nu) {
  const double x1 = student_t_quantile(u1, nu), x2 = student_t_quantile(u2, nu);
  const double om = 1.0 - rho * rho;
  const double lc = std::lgamma(0.5 * (nu + 2.0)) + std::lgamma(0.5 * nu) - 2.0 * std::lgamma(0.5 * (nu + 1.0));
  const double quad = (x1 * x1 + x2 * x2 - 2.0 * rho * x1 * x2) / (nu * om);
  return lc - 0.5 * std::log(om) - 0.5 * (nu + 2.0) * std::log1p(quad) +
         0.5 * (nu + 1.0) * (std::log1p(x1 * x1 / nu) + std::log1p(x2 * x2 / nu));
}

inline double student_h_from_quantiles(double x1, double x2, double rho, double nu) {
  const double scale = std::sqrt((nu + x2 * x2) * (1.0 - rho * rho) / (nu + 1.0));
  return student_t_cdf((x1 - rho * x2) / scale, nu + 1.0);
}

inline double student_h(double u1, double u2, double rho, double nu) {
  return student_h_from_quantiles(student_t_quantile(u1, nu), student_t_quantile(u2, nu), rho, nu);
}

/// C(u1,u2) as the integral of h(u1 | v) over v in (0, u2).
inline double student_cdf(double u1, double u2, double rho, double nu) {
  const double x1 = student_t_quantile(u1, nu);
  auto integrand = [&](double v) {
    if (v <= 0.0 || v >= 1.0) {
      return v <= 0.0 ? student_t_cdf(rho * std::sqrt(nu + 1.0) / std::sqrt(1.0 - rho * rho), nu + 1.0)
                      : student_t_cdf(-rho * std::sqrt(nu + 1.0) / std::sqrt(1.0 - rho * rho), nu + 1.0);
    }
    return student_h_from_quantiles(x1, student_t_quantile(v, nu), rho, nu);
  };
  const double c = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, u2, 15, 1e-12);
  return std::clamp(c, std::max(0.0, u1 + u2 - 1.0), std::min(u1, u2));
}

}  // namespace copula_kernels

/// One parametric family. `theta` is rho for Normal/StudentT and alpha for
/// the Archimedean families; `nu` is used by StudentT only.
struct SingleCopula {
  Family family = Family::Normal;
  double theta = 0.0;
  double nu = 0.0;

  static SingleCopula normal(double rho) { return {Family::Normal, rho, 0.0}; }
  static SingleCopula student(double rho, double nu) { return {Family::StudentT, rho, nu}; }
  static SingleCopula of(Family f, double theta) { return {f, theta, 0.0}; }

  int parameter_count() const { return family == Family::StudentT ? 2 : 1; }

  /// Throws DomainError outside the family's parameter domain. The Gumbel
  /// boundary theta = 1 (independence) is admitted.
  void validate() const {
    auto fail = [&](const std::string& what) {
      throw DomainError(std::string(family_name(family)) + " copula: " + what);
    };
    switch (family) {
      case Family::Normal:
        if (!(theta > -1.0 && theta < 1.0)) fail("rho must lie in (-1,1)");
        break;
      case Family::StudentT:
        if (!(theta > -1.0 && theta < 1.0)) fail("rho must lie in (-1,1)");
        if (!(nu > 2.0 && nu <= kCopulaNuMax)) fail("nu must lie in (2,100]");
        break;
      case Family::Clayton:
      case Family::SurvivalClayton:
        if (!(theta > 0.0) || !std::isfinite(theta)) fail("alpha must be > 0");
        break;
      case Family::Rotated90Clayton:
      case Family::Rotated270Clayton:
        if (!(theta < 0.0) || !std::isfinite(theta)) fail("alpha must be < 0");
        break;
      case Family::Gumbel:
      case Family::SurvivalGumbel:
        if (!(theta >= 1.0) || !std::isfinite(theta)) fail("alpha must be >= 1");
        break;
    }
  }

  bool is_independence() const {
    return (family == Family::Normal && theta == 0.0) ||
           ((family == Family::Gumbel || family == Family::SurvivalGumbel) && theta == 1.0);
  }

  double cdf(double u1, double u2) const {
    using namespace copula_kernels;
    if (u1 <= 0.0 || u2 <= 0.0) return 0.0;
    if (u1 >= 1.0) return std::min(u2, 1.0);
    if (u2 >= 1.0) return u1;
    switch (family) {
      case Family::Normal: return normal_cdf2(u1, u2, theta);
      case Family::StudentT: return student_cdf(u1, u2, theta, nu);
      case Family::Clayton: return clayton_cdf(u1, u2, theta);
      case Family::SurvivalClayton: return u1 + u2 - 1.0 + clayton_cdf(1.0 - u1, 1.0 - u2, theta);
      case Family::Rotated90Clayton: return u2 - clayton_cdf(1.0 - u1, u2, -theta);
      case Family::Rotated270Clayton: return u1 - clayton_cdf(u1, 1.0 - u2, -theta);
      case Family::Gumbel: return gumbel_cdf(u1, u2, theta);
      case Family::SurvivalGumbel: return u1 + u2 - 1.0 + gumbel_cdf(1.0 - u1, 1.0 - u2, theta);
    }
    return 0.0;
  }

  /// Log density at interior points (callers clamp).
  double logpdf(double u1, double u2) const {
    using namespace copula_kernels;
    switch (family) {
      case Family::Normal: return normal_logpdf(u1, u2, theta);
      case Family::StudentT: return student_logpdf(u1, u2, theta, nu);
      case Family::Clayton: return clayton_logpdf(u1, u2, theta);
      case Family::SurvivalClayton: return clayton_logpdf(1.0 - u1, 1.0 - u2, theta);
      case Family::Rotated90Clayton: return clayton_logpdf(1.0 - u1, u2, -theta);
      case Family::Rotated270Clayton: return clayton_logpdf(u1, 1.0 - u2, -theta);
      case Family::Gumbel: return gumbel_logpdf(u1, u2, theta);
      case Family::SurvivalGumbel: return gumbel_logpdf(1.0 - u1, 1.0 - u2, theta);
    }
    return 0.0;
  }

  /// dC(u1,u2)/du2 at interior points.
  double h(double u1, double u2) const {
    using namespace copula_kernels;
    switch (family) {
      case Family::Normal: return normal_h(u1, u2, theta);
      case Family::StudentT: return student_h(u1, u2, theta, nu);
      case Family::Clayton: return clayton_h(u1, u2, theta);
      case Family::SurvivalClayton: return 1.0 - clayton_h(1.0 - u1, 1.0 - u2, theta);
      case Family::Rotated90Clayton: return 1.0 - clayton_h(1.0 - u1, u2, -theta);
      case Family::Rotated270Clayton: return clayton_h(u1, 1.0 - u2, -theta);
      case Family::Gumbel: return gumbel_h(u1, u2, theta);
      case Family::SurvivalGumbel: return 1.0 - gumbel_h(1.0 - u1, 1.0 - u2, theta);
    }
    return 0.0;
  }

  double kendall_tau() const {
    switch (family) {
      case Family::Normal:
      case Family::StudentT: return 2.0 * std::asin(theta) / std::numbers::pi;
      case Family::Clayton:
      case Family::SurvivalClayton: return theta / (theta + 2.0);
      case Family::Rotated90Clayton:
      case Family::Rotated270Clayton: return theta / (2.0 - theta);
      case Family::Gumbel:
      case Family::SurvivalGumbel: return 1.0 - 1.0 / theta;
    }
    return 0.0;
  }

  double lambda_lower() const {
    switch (family) {
      case Family::StudentT: return student_tail();
      case Family::Clayton: return std::pow(2.0, -1.0 / theta);
      case Family::SurvivalGumbel: return 2.0 - std::pow(2.0, 1.0 / theta);
      default: return 0.0;
    }
  }

  double lambda_upper() const {
    switch (family) {
      case Family::StudentT: return student_tail();
      case Family::SurvivalClayton: return std::pow(2.0, -1.0 / theta);
      case Family::Gumbel: return 2.0 - std::pow(2.0, 1.0 / theta);
      default: return 0.0;
    }
  }

  /// One draw (u1, u2).
  template <typename Rng>
  std::pair<double, double> draw(Rng& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto clayton_pair = [&](double t) {
      std::gamma_distribution<double> frailty(1.0 / t, 1.0);
      double v;
      do { v = frailty(rng); } while (!(v > 0.0));
      const double e1 = expo(rng), e2 = expo(rng);
      return std::pair{std::exp(-std::log1p(e1 / v) / t), std::exp(-std::log1p(e2 / v) / t)};
    };
    auto gumbel_pair = [&](double t) {
      if (t == 1.0) return std::pair{open_uniform(rng), open_uniform(rng)};
      // Positive stable frailty with Laplace transform exp(-s^(1/t)) (Kanter).
      const double b = 1.0 / t;
      const double w = std::numbers::pi * open_uniform(rng);
      const double e = expo(rng);
      const double s = std::sin(b * w) / std::pow(std::sin(w), 1.0 / b) *
                       std::pow(std::sin((1.0 - b) * w) / e, (1.0 - b) / b);
      const double e1 = expo(rng), e2 = expo(rng);
      return std::pair{std::exp(-std::pow(e1 / s, b)), std::exp(-std::pow(e2 / s, b))};
    };
    switch (family) {
      case Family::Normal: {
        const double z1 = gauss(rng);
        const double z2 = theta * z1 + std::sqrt(1.0 - theta * theta) * gauss(rng);
        return {normal_cdf(z1), normal_cdf(z2)};
      }
      case Family::StudentT: {
        const double z1 = gauss(rng);
        const double z2 = theta * z1 + std::sqrt(1.0 - theta * theta) * gauss(rng);
        std::chi_squared_distribution<double> chi(nu);
        const double w = std::sqrt(chi(rng) / nu);
        return {student_t_cdf(z1 / w, nu), student_t_cdf(z2 / w, nu)};
      }
      case Family::Clayton: return clayton_pair(theta);
      case Family::SurvivalClayton: {
        auto [a, b] = clayton_pair(theta);
        return {1.0 - a, 1.0 - b};
      }
      case Family::Rotated90Clayton: {
        auto [a, b] = clayton_pair(-theta);
        return {1.0 - a, b};
      }
      case Family::Rotated270Clayton: {
        auto [a, b] = clayton_pair(-theta);
        return {a, 1.0 - b};
      }
      case Family::Gumbel: return gumbel_pair(theta);
      case Family::SurvivalGumbel: {
        auto [a, b] = gumbel_pair(theta);
        return {1.0 - a, 1.0 - b};
      }
    }
    return {0.5, 0.5};
  }

 private:
  double student_tail() const {
    return 2.0 * student_t_cdf(-std::sqrt(nu + 1.0) * std::sqrt((1.0 - theta) / (1.0 + theta)), nu + 1.0);
  }

  template <typename Rng>
  static double open_uniform(Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u;
    do { u = unif(rng); } while (u <= 0.0);
    return u;
  }
};

struct DependenceSummary {
  double tau = 0.0;
  double lambda_low = 0.0;
  double lambda_up = 0.0;
};

struct PairedSample {
  std::vector<double> u1;
  std::vector<double> u2;
};

/// A convex combination of single copulas; a single family is the one-
/// component case with weight 1.
class Copula {
 public:
  Copula() = default;
  Copula(SingleCopula single) : components_{single}, weights_{1.0} { single.validate(); }  // NOLINT
  Copula(std::vector<SingleCopula> components, std::vector<double> weights)
      : components_(std::move(components)), weights_(std::move(weights)) {
    if (components_.empty() || components_.size() != weights_.size()) {
      throw DomainError("mixture copula: components and weights must be non-empty and aligned");
    }
    double sum = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0 && w <= 1.0)) throw DomainError("mixture copula: weights must lie in [0,1]");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DomainError("mixture copula: weights must sum to 1");
    for (const auto& c : components_) c.validate();
  }

  /// Gumbel (weight w_gumbel) plus survival Gumbel (weight 1 - w_gumbel).
  static Copula gumbel_mixture(double theta_gumbel, double theta_survival, double w_gumbel) {
    return Copula({SingleCopula::of(Family::Gumbel, theta_gumbel), SingleCopula::of(Family::SurvivalGumbel, theta_survival)},
                  {w_gumbel, 1.0 - w_gumbel});
  }

  bool is_mixture() const { return components_.size() > 1; }
  const std::vector<SingleCopula>& components() const { return components_; }
  const std::vector<double>& weights() const { return weights_; }
  const SingleCopula& single() const { return components_.front(); }

  std::string name() const {
    if (!is_mixture()) return std::string(family_name(components_.front().family));
    std::string n = "Mixture(";
    for (std::size_t i = 0; i < components_.size(); ++i) {
      if (i) n += ",";
      n += family_name(components_[i].family);
    }
    return n + ")";
  }

  /// Free parameters: component parameters plus N - 1 weights.
  int parameter_count() const {
    int k = static_cast<int>(components_.size()) - 1;
    for (const auto& c : components_) k += c.parameter_count();
    return k;
  }

  bool is_independence() const {
    for (std::size_t i = 0; i < components_.size(); ++i) {
      if (weights_[i] > 0.0 && !components_[i].is_independence()) return false;
    }
    return true;
  }

  double cdf(double u1, double u2) const {
    double c = 0.0;
    for (std::size_t i = 0; i < components_.size(); ++i) {
      if (weights_[i] > 0.0) c += weights_[i] * components_[i].cdf(u1, u2);
    }
    return c;
  }

  /// Log density; arguments are clamped to [1e-10, 1 - 1e-10].
  double logpdf(double u1, double u2, bool* clamped = nullptr) const {
    const double a = std::clamp(u1, kUClamp, 1.0 - kUClamp);
    const double b = std::clamp(u2, kUClamp, 1.0 - kUClamp);
    if (clamped) *clamped = (a != u1 || b != u2);
    if (!is_mixture()) return components_.front().logpdf(a, b);
    double mx = -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    terms.reserve(components_.size());
    for (std::size_t i = 0; i < components_.size(); ++i) {
      if (weights_[i] <= 0.0) continue;
      terms.push_back(std::log(weights_[i]) + components_[i].logpdf(a, b));
      mx = std::max(mx, terms.back());
    }
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double t : terms) s += std::exp(t - mx);
    return mx + std::log(s);
  }

  double pdf(double u1, double u2) const { return std::exp(logpdf(u1, u2)); }

  /// dC(u1,u2)/du2 with clamped arguments; h(0|.) = 0 and h(1|.) = 1.
  double h(double u1, double u2) const {
    if (u1 <= 0.0) return 0.0;
    if (u1 >= 1.0) return 1.0;
    const double b = std::clamp(u2, kUClamp, 1.0 - kUClamp);
    double v = 0.0;
    for (std::size_t i = 0; i < components_.size(); ++i) {
      if (weights_[i] > 0.0) v += weights_[i] * components_[i].h(u1, b);
    }
    return std::clamp(v, 0.0, 1.0);
  }

  template <typename Rng>
  std::pair<double, double> draw(Rng& rng) const {
    if (!is_mixture()) return components_.front().draw(rng);
    std::discrete_distribution<std::size_t> pick(weights_.begin(), weights_.end());
    return components_[pick(rng)].draw(rng);
  }

  PairedSample sample(std::size_t n, std::uint64_t seed) const {
    if (n == 0) throw DomainError("copula sample: n must be >= 1");
    std::mt19937_64 rng(seed);
    PairedSample out;
    out.u1.resize(n);
    out.u2.resize(n);
    for (std::size_t i = 0; i < n; ++i) std::tie(out.u1[i], out.u2[i]) = draw(rng);
    return out;
  }

  /// Weighted tail-dependence coefficients only (tau left at 0).
  DependenceSummary tail_dependence() const {
    DependenceSummary d;
    for (std::size_t i = 0; i < components_.size(); ++i) {
      d.lambda_low += weights_[i] * components_[i].lambda_lower();
      d.lambda_up += weights_[i] * components_[i].lambda_upper();
    }
    return d;
  }

  /// Closed-form summary; the tau of a genuine mixture is estimated from
  /// `mc_samples` draws because it contains cross terms between components.
  DependenceSummary dependence(std::size_t mc_samples = 1'000'000, std::uint64_t seed = 12345) const {
    DependenceSummary d = tail_dependence();
    std::size_t active = 0;
    for (double w : weights_) active += w > 0.0;
    if (active == 1) {
      for (std::size_t i = 0; i < components_.size(); ++i) {
        if (weights_[i] > 0.0) d.tau = components_[i].kendall_tau();
      }
    } else {
      const PairedSample s = sample(mc_samples, seed);
      d.tau = kendall_tau(s.u1, s.u2);
    }
    return d;
  }

 private:
  std::vector<SingleCopula> components_;
  std::vector<double> weights_;
};

inline double copula_cdf(double u1, double u2, const Copula& c) { return c.cdf(u1, u2); }
inline double copula_logpdf(double u1, double u2, const Copula& c) { return c.logpdf(u1, u2); }
/// Pr(U1 <= u1 | U2 = u2_given).
inline double copula_hfunc(double u2_given, double u1, const Copula& c) { return c.h(u1, u2_given); }
inline DependenceSummary dependence_summary(const Copula& c) { return c.dependence(); }

}  // namespace tailrisk

#endif  // TAILRISK_COPULA_HPP_
