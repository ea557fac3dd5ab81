#ifndef TAILRISK_DISTRIBUTIONS_HPP_
#define TAILRISK_DISTRIBUTIONS_HPP_

// Density, CDF, quantile and sampling kernels: standard normal, Student-t
// with real degrees of freedom, and Hansen's standardized skewed Student-t.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "tailrisk/error.hpp"

namespace tailrisk {

namespace detail {
using FastPolicy = boost::math::policies::policy<
    boost::math::policies::promote_double<false>,
    boost::math::policies::overflow_error<boost::math::policies::ignore_error>>;

/// Above this the Student-t family is replaced by its normal limit.
inline constexpr double kNuNormalLimit = 1e7;
}  // namespace detail

// ---------------------------------------------------------------------------
// Standard normal

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("normal_quantile: p must lie in (0,1), got " + std::to_string(p));
  }
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p, detail::FastPolicy());
}

// ---------------------------------------------------------------------------
// Student-t with real degrees of freedom nu > 0

inline void check_student_nu(double nu) {
  if (!(nu > 0.0) || !std::isfinite(nu)) {
    throw DomainError("Student-t degrees of freedom must be > 0, got " + std::to_string(nu));
  }
}

inline double student_t_pdf(double x, double nu) {
  check_student_nu(nu);
  if (nu > detail::kNuNormalLimit) return normal_pdf(x);
  const double logc = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                      0.5 * std::log(nu * std::numbers::pi);
  return std::exp(logc - 0.5 * (nu + 1.0) * std::log1p(x * x / nu));
}

/// CDF through the regularized incomplete beta function.
inline double student_t_cdf(double x, double nu) {
  check_student_nu(nu);
  if (nu > detail::kNuNormalLimit) return normal_cdf(x);
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  boost::math::students_t_distribution<double, detail::FastPolicy> dist(nu);
  return boost::math::cdf(dist, x);
}

inline double student_t_quantile(double p, double nu) {
  check_student_nu(nu);
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("student_t_quantile: p must lie in (0,1), got " + std::to_string(p));
  }
  if (nu > detail::kNuNormalLimit) return normal_quantile(p);
  boost::math::students_t_distribution<double, detail::FastPolicy> dist(nu);
  return boost::math::quantile(dist, p);
}

// ---------------------------------------------------------------------------
// Hansen skewed Student-t, zero mean and unit variance.

/// Shape of the skewed Student-t together with the derived constants a, b, c.
class SkewedT {
 public:
  SkewedT(double nu, double eta) : nu_(nu), eta_(eta) {
    if (!(nu > 2.0) || std::isnan(nu)) {
      throw DomainError("skewed-t nu must be > 2, got " + std::to_string(nu));
    }
    if (!(eta > -1.0 && eta < 1.0)) {
      throw DomainError("skewed-t eta must lie in (-1,1), got " + std::to_string(eta));
    }
    const double nu_eff = std::min(nu, detail::kNuNormalLimit);
    if (nu > detail::kNuNormalLimit) {
      // Limit of Gamma((v+1)/2) / (Gamma(v/2) sqrt(pi (v-2))) as v -> inf.
      c_ = 1.0 / std::sqrt(2.0 * std::numbers::pi);
      a_ = 4.0 * eta * c_;
      scale_ = 1.0;
    } else {
      c_ = std::exp(std::lgamma(0.5 * (nu_eff + 1.0)) - std::lgamma(0.5 * nu_eff)) /
           std::sqrt(std::numbers::pi * (nu_eff - 2.0));
      a_ = 4.0 * eta * c_ * (nu_eff - 2.0) / (nu_eff - 1.0);
      scale_ = std::sqrt(nu_eff / (nu_eff - 2.0));
    }
    const double b2 = 1.0 + 3.0 * eta * eta - a_ * a_;
    if (!(b2 > 0.0)) throw DomainError("skewed-t: b^2 <= 0");
    b_ = std::sqrt(b2);
    log_bc_ = std::log(b_ * c_);
  }

  double nu() const noexcept { return nu_; }
  double eta() const noexcept { return eta_; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  double c() const noexcept { return c_; }
  /// Location of the density's branch point, -a/b.
  double mode_break() const noexcept { return -a_ / b_; }

  double log_pdf(double z) const noexcept {
    const double w = (b_ * z + a_) / (z < mode_break() ? 1.0 - eta_ : 1.0 + eta_);
    if (nu_ > detail::kNuNormalLimit) return log_bc_ - 0.5 * w * w;
    return log_bc_ - 0.5 * (nu_ + 1.0) * std::log1p(w * w / (nu_ - 2.0));
  }

  double pdf(double z) const noexcept { return std::exp(log_pdf(z)); }

  double cdf(double z) const {
    if (std::isinf(z)) return z > 0 ? 1.0 : 0.0;
    const double lo = 1.0 - eta_;
    const double hi = 1.0 + eta_;
    if (z < mode_break()) {
      return lo * base_cdf(scale_ * (b_ * z + a_) / lo);
    }
    return 0.5 * lo + hi * (base_cdf(scale_ * (b_ * z + a_) / hi) - 0.5);
  }

  /// Piecewise inversion through the Student-t quantile, with bisection on
  /// the CDF when the closed form does not round-trip.
  double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) {
      throw DomainError("skewt_quantile: p must lie in (0,1), got " + std::to_string(p));
    }
    const double lo = 1.0 - eta_;
    const double hi = 1.0 + eta_;
    const double p_break = 0.5 * lo;
    double z;
    if (p == p_break) return mode_break();
    if (p < p_break) {
      const double y = base_quantile(std::clamp(p / lo, tiny(), 1.0 - tiny()));
      z = (lo * y / scale_ - a_) / b_;
    } else {
      const double q = 0.5 + (p - p_break) / hi;
      const double y = base_quantile(std::clamp(q, tiny(), 1.0 - tiny()));
      z = (hi * y / scale_ - a_) / b_;
    }
    if (std::isfinite(z) && std::abs(cdf(z) - p) <= 1e-12) return z;
    return bisect_quantile(p, std::isfinite(z) ? z : 0.0);
  }

 private:
  static double tiny() { return std::numeric_limits<double>::min(); }

  double base_cdf(double x) const {
    return nu_ > detail::kNuNormalLimit ? normal_cdf(x) : student_t_cdf(x, nu_);
  }
  double base_quantile(double p) const {
    return nu_ > detail::kNuNormalLimit ? normal_quantile(p) : student_t_quantile(p, nu_);
  }

  double bisect_quantile(double p, double guess) const {
    double lo = guess - 1.0;
    double hi = guess + 1.0;
    while (cdf(lo) > p) lo -= 2.0 * (hi - lo);
    while (cdf(hi) < p) hi += 2.0 * (hi - lo);
    for (int i = 0; i < 300 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++i) {
      const double mid = 0.5 * (lo + hi);
      if (cdf(mid) < p) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
  }

  double nu_;
  double eta_;
  double a_ = 0.0;
  double b_ = 1.0;
  double c_ = 0.0;
  double scale_ = 1.0;
  double log_bc_ = 0.0;
};

inline double skewt_pdf(double z, const SkewedT& d) { return d.pdf(z); }
inline double skewt_cdf(double z, const SkewedT& d) { return d.cdf(z); }
inline double skewt_quantile(double p, const SkewedT& d) { return d.quantile(p); }
inline double skewt_quantile(double p, double nu, double eta) { return SkewedT(nu, eta).quantile(p); }

/// i.i.d. draws by quantile transform of uniforms; deterministic for a seed.
inline std::vector<double> skewt_sample(std::size_t n, const SkewedT& d, std::uint64_t seed) {
  if (n == 0) throw DomainError("skewt_sample: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& x : out) {
    double u;
    do { u = unif(rng); } while (u <= 0.0);
    x = d.quantile(u);
  }
  return out;
}

}  // namespace tailrisk

#endif  // TAILRISK_DISTRIBUTIONS_HPP_
