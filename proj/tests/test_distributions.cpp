#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include "tailrisk/distributions.hpp"

using namespace tailrisk;

namespace {

// Integral of g over the real line, split at x0, each half mapped to [0,1).
template <typename G>
double integrate_line(G g, double x0) {
  boost::math::quadrature::tanh_sinh<double> ts;
  const auto half = [&](double sign) {
    return ts.integrate([&](double t) { return g(x0 + sign * t / (1.0 - t)) / ((1.0 - t) * (1.0 - t)); }, 0.0, 1.0);
  };
  return half(-1.0) + half(1.0);
}

double integrate_pdf(const SkewedT& d, double lo, double hi) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate([&](double z) { return d.pdf(z); }, lo, hi, 15,
                                                                      1e-14);
}

}  // namespace

TEST(SkewedT, RejectsInvalidParameters) {
  EXPECT_THROW(SkewedT(2.0, 0.0), DomainError);
  EXPECT_THROW(SkewedT(5.0, 1.0), DomainError);
  EXPECT_THROW(SkewedT(5.0, -1.2), DomainError);
}

TEST(SkewedT, ConstantsFollowHansen) {
  const double nu = 7.0, eta = 0.3;
  const SkewedT d(nu, eta);
  const double c = std::exp(std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2)) / std::sqrt(M_PI * (nu - 2));
  const double a = 4 * eta * c * (nu - 2) / (nu - 1);
  EXPECT_NEAR(d.c(), c, 1e-14);
  EXPECT_NEAR(d.a(), a, 1e-14);
  EXPECT_NEAR(d.b(), std::sqrt(1 + 3 * eta * eta - a * a), 1e-14);
}

TEST(SkewedT, SymmetricWhenEtaZero) {
  const SkewedT d(5.0, 0.0);
  for (double z : {0.1, 0.7, 1.5, 3.0, 8.0}) EXPECT_NEAR(d.pdf(z), d.pdf(-z), 1e-15);
  EXPECT_NEAR(d.cdf(0.0), 0.5, 1e-15);
  EXPECT_NEAR(d.quantile(0.5), 0.0, 1e-12);
}

TEST(SkewedT, ContinuousAtBreakpoint) {
  const SkewedT d(4.0, 0.6);
  const double x0 = d.mode_break();
  EXPECT_NEAR(d.pdf(x0 - 1e-9), d.pdf(x0 + 1e-9), 1e-8);
}

TEST(SkewedT, StandardizedMoments) {
  const SkewedT d(5.0, 0.5);
  const double x0 = d.mode_break();
  EXPECT_NEAR(integrate_line([&](double z) { return d.pdf(z); }, x0), 1.0, 1e-6);
  EXPECT_NEAR(integrate_line([&](double z) { return z * d.pdf(z); }, x0), 0.0, 1e-6);
  EXPECT_NEAR(integrate_line([&](double z) { return z * z * d.pdf(z); }, x0), 1.0, 1e-6);
}

TEST(SkewedT, NormalizesOnGrid) {
  for (double nu : {2.5, 5.0, 10.0, 30.0}) {
    for (double eta : {-0.5, 0.0, 0.5}) {
      const SkewedT d(nu, eta);
      EXPECT_NEAR(integrate_line([&](double z) { return d.pdf(z); }, d.mode_break()), 1.0, 1e-6) << nu << " " << eta;
    }
  }
}

TEST(SkewedT, BranchBoundaryMass) {
  for (double nu : {3.0, 6.0, 40.0}) {
    for (double eta : {-0.7, -0.2, 0.0, 0.4, 0.9}) {
      const SkewedT d(nu, eta);
      EXPECT_NEAR(d.cdf(d.mode_break()), (1 - eta) / 2, 1e-13);
      EXPECT_NEAR(d.quantile((1 - eta) / 2), d.mode_break(), 1e-10);
    }
  }
}

TEST(SkewedT, CdfMatchesQuadrature) {
  const SkewedT d(6.0, 0.3);
  const double x0 = d.mode_break();
  boost::math::quadrature::tanh_sinh<double> ts;
  // Integral of the density over (-inf, b] for b at or below the kink.
  const auto lower_tail = [&](double b) {
    return ts.integrate([&](double t) { return d.pdf(b - t / (1.0 - t)) / ((1.0 - t) * (1.0 - t)); }, 0.0, 1.0);
  };
  ASSERT_LT(x0, 1.0);
  EXPECT_NEAR(d.cdf(1.0), lower_tail(x0) + integrate_pdf(d, x0, 1.0), 1e-8);
  EXPECT_NEAR(d.cdf(-1.3), lower_tail(-1.3), 1e-8);
}

TEST(SkewedT, QuantileRoundTrip) {
  const SkewedT d(8.0, 0.2);
  EXPECT_NEAR(d.cdf(d.quantile(0.05)), 0.05, 1e-8);
  for (double nu : {2.5, 5.0, 10.0, 30.0}) {
    for (double eta : {-0.5, 0.0, 0.5}) {
      const SkewedT s(nu, eta);
      for (int i = 1; i <= 99; ++i) EXPECT_NEAR(s.cdf(s.quantile(i / 100.0)), i / 100.0, 1e-8);
      for (double p : {1e-9, 1e-6, 1 - 1e-6, 1 - 1e-9}) EXPECT_NEAR(s.cdf(s.quantile(p)), p, 1e-12);
    }
  }
  EXPECT_THROW(d.quantile(0.0), DomainError);
  EXPECT_THROW(d.quantile(1.0), DomainError);
  EXPECT_THROW(skewt_quantile(1.5, 5.0, 0.1), DomainError);
}

TEST(SkewedT, MirrorSymmetryInEta) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 2.0);
  for (double eta : {0.1, 0.45, 0.8}) {
    const SkewedT pos(5.5, eta), neg(5.5, -eta);
    for (int i = 0; i < 200; ++i) {
      const double z = g(rng);
      EXPECT_NEAR(pos.cdf(z), 1.0 - neg.cdf(-z), 1e-10);
    }
  }
}

TEST(SkewedT, CdfMonotone) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-15.0, 15.0);
  const SkewedT d(3.5, -0.4);
  std::vector<double> z(5000);
  for (auto& v : z) v = u(rng);
  std::sort(z.begin(), z.end());
  for (std::size_t i = 1; i < z.size(); ++i) EXPECT_LE(d.cdf(z[i - 1]), d.cdf(z[i]));
}

TEST(SkewedT, SamplerMoments) {
  const auto a = skewt_sample(1'000'000, SkewedT(10.0, 0.0), 1);
  double m = 0;
  for (double v : a) m += v;
  EXPECT_NEAR(m / a.size(), 0.0, 0.01);

  const auto b = skewt_sample(1'000'000, SkewedT(5.0, 0.5), 2);
  double mb = 0, vb = 0;
  for (double v : b) mb += v;
  mb /= b.size();
  for (double v : b) vb += (v - mb) * (v - mb);
  EXPECT_NEAR(vb / (b.size() - 1), 1.0, 0.02);

  EXPECT_EQ(skewt_sample(100, SkewedT(5.0, 0.1), 9), skewt_sample(100, SkewedT(5.0, 0.1), 9));
  EXPECT_THROW(skewt_sample(0, SkewedT(5.0, 0.1), 9), DomainError);
}

TEST(StudentT, ReferenceValues) {
  for (double nu : {0.5, 1.0, 2.7, 30.0}) EXPECT_DOUBLE_EQ(student_t_cdf(0.0, nu), 0.5);
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
  // Cauchy closed form.
  EXPECT_NEAR(student_t_cdf(1.0, 1.0), 0.75, 1e-14);
  for (double x = -4.0; x <= 4.0; x += 0.25) EXPECT_NEAR(student_t_cdf(x, 1e6), normal_cdf(x), 1e-4);
}

TEST(StudentT, QuantileRoundTrips) {
  for (double nu : {0.8, 2.5, 7.0, 60.0}) {
    for (double p = 0.001; p < 1.0; p += 0.0613) EXPECT_NEAR(student_t_cdf(student_t_quantile(p, nu), nu), p, 1e-10);
  }
  for (double p = 0.001; p < 1.0; p += 0.0613) EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-10);
  EXPECT_THROW(student_t_quantile(0.0, 3.0), DomainError);
  EXPECT_THROW(student_t_cdf(0.0, -1.0), DomainError);
  EXPECT_THROW(normal_quantile(1.0), DomainError);
}
