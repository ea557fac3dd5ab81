#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "tailrisk/copula.hpp"

using namespace tailrisk;

namespace {

std::vector<Copula> zoo() {
  return {SingleCopula::normal(0.6),
          SingleCopula::normal(-0.4),
          SingleCopula::student(0.5, 4.0),
          SingleCopula::of(Family::Clayton, 2.0),
          SingleCopula::of(Family::SurvivalClayton, 1.5),
          SingleCopula::of(Family::Rotated90Clayton, -1.7),
          SingleCopula::of(Family::Rotated270Clayton, -2.3),
          SingleCopula::of(Family::Gumbel, 2.0),
          SingleCopula::of(Family::SurvivalGumbel, 1.6),
          Copula::gumbel_mixture(2.0446, 5.7878, 0.2999)};
}

double grid_point(int i, int n) { return (i + 0.5) / n; }

}  // namespace

TEST(Copula, IndependenceIsProduct) {
  const Copula c = SingleCopula::normal(0.0);
  EXPECT_TRUE(c.is_independence());
  for (double a : {0.05, 0.3, 0.77})
    for (double b : {0.01, 0.5, 0.93}) {
      EXPECT_NEAR(c.cdf(a, b), a * b, 1e-12);
      EXPECT_NEAR(c.logpdf(a, b), 0.0, 1e-12);
      EXPECT_NEAR(c.h(a, b), a, 1e-12);
    }
}

TEST(Copula, ClaytonClosedFormAndMonteCarlo) {
  const Copula c = SingleCopula::of(Family::Clayton, 2.0);
  EXPECT_NEAR(c.cdf(0.5, 0.5), 1.0 / std::sqrt(7.0), 1e-14);
  const auto s = c.sample(400000, 3);
  double hits = 0;
  for (std::size_t i = 0; i < s.u1.size(); ++i) hits += s.u1[i] <= 0.5 && s.u2[i] <= 0.5;
  EXPECT_NEAR(hits / double(s.u1.size()), 1.0 / std::sqrt(7.0), 0.003);
}

TEST(Copula, SurvivalAndRotationIdentities) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(0.01, 0.99);
  const double a = 1.8, g = 2.2;
  const Copula cl = SingleCopula::of(Family::Clayton, a);
  const Copula sc = SingleCopula::of(Family::SurvivalClayton, a);
  const Copula r90 = SingleCopula::of(Family::Rotated90Clayton, -a);
  const Copula r270 = SingleCopula::of(Family::Rotated270Clayton, -a);
  const Copula gu = SingleCopula::of(Family::Gumbel, g);
  const Copula sg = SingleCopula::of(Family::SurvivalGumbel, g);
  for (int i = 0; i < 200; ++i) {
    const double u1 = U(rng), u2 = U(rng);
    EXPECT_NEAR(sc.cdf(u1, u2), u1 + u2 - 1.0 + cl.cdf(1 - u1, 1 - u2), 1e-12);
    EXPECT_NEAR(sg.cdf(u1, u2), u1 + u2 - 1.0 + gu.cdf(1 - u1, 1 - u2), 1e-12);
    EXPECT_NEAR(r90.cdf(u1, u2), u2 - cl.cdf(1 - u1, u2), 1e-12);
    EXPECT_NEAR(r270.cdf(u1, u2), u1 - cl.cdf(u1, 1 - u2), 1e-12);
    EXPECT_NEAR(sc.logpdf(u1, u2), cl.logpdf(1 - u1, 1 - u2), 1e-10);
    EXPECT_NEAR(r90.logpdf(u1, u2), cl.logpdf(1 - u1, u2), 1e-10);
    EXPECT_NEAR(r270.logpdf(u1, u2), cl.logpdf(u1, 1 - u2), 1e-10);
  }
  EXPECT_LT(r90.dependence().tau, 0.0);
  EXPECT_LT(r270.dependence().tau, 0.0);
}

TEST(Copula, GumbelDensityMatchesCrossDerivative) {
  const double h = 1e-4;
  for (double theta : {1.3, 2.0, 4.5}) {
    const Copula c = SingleCopula::of(Family::Gumbel, theta);
    const double u = 0.5, v = 0.5;
    const double fd = (c.cdf(u + h, v + h) - c.cdf(u + h, v - h) - c.cdf(u - h, v + h) + c.cdf(u - h, v - h)) / (4 * h * h);
    EXPECT_NEAR(c.pdf(u, v), fd, 1e-5) << theta;
  }
}

TEST(Copula, DensityMatchesCrossDerivativeAllFamilies) {
  const double h = 1e-4;
  for (const auto& c : zoo()) {
    for (auto [u, v] : {std::pair{0.3, 0.6}, std::pair{0.72, 0.2}, std::pair{0.5, 0.5}}) {
      const double fd = (c.cdf(u + h, v + h) - c.cdf(u + h, v - h) - c.cdf(u - h, v + h) + c.cdf(u - h, v - h)) / (4 * h * h);
      EXPECT_NEAR(c.pdf(u, v), fd, 2e-5 * std::max(1.0, fd)) << c.name() << " at " << u << "," << v;
    }
  }
}

TEST(Copula, HeavyTailStudentFinite) {
  const Copula c = SingleCopula::student(0.9098, 2.0001);
  const double l = c.logpdf(0.05, 0.05);
  EXPECT_TRUE(std::isfinite(l));
  EXPECT_GT(std::exp(l), 0.0);
  EXPECT_TRUE(std::isfinite(c.cdf(0.05, 0.05)));
}

TEST(Copula, HFunctionBoundariesMonotoneAndDerivative) {
  const double step = 1e-6;
  for (const auto& c : zoo()) {
    for (double v : {0.02, 0.35, 0.8, 0.97}) {
      EXPECT_EQ(c.h(0.0, v), 0.0);
      EXPECT_EQ(c.h(1.0, v), 1.0);
      double prev = 0.0;
      for (int i = 0; i < 60; ++i) {
        const double u = grid_point(i, 60);
        const double hv = c.h(u, v);
        EXPECT_GE(hv, prev - 1e-12) << c.name();
        prev = hv;
        const double num = (c.cdf(u, v + step) - c.cdf(u, v - step)) / (2 * step);
        EXPECT_NEAR(hv, num, 1e-6) << c.name() << " u=" << u << " v=" << v;
      }
    }
  }
}

TEST(Copula, ComonotoneLimitIsStep) {
  const Copula c = SingleCopula::normal(0.9999);
  for (double v : {0.2, 0.5, 0.8}) {
    EXPECT_LT(c.h(v - 0.05, v), 0.01);
    EXPECT_GT(c.h(v + 0.05, v), 0.99);
  }
}

TEST(Copula, BoundaryConditionsAndTwoIncreasing) {
  for (const auto& c : zoo()) {
    for (int i = 0; i < 20; ++i) {
      const double u = grid_point(i, 20);
      EXPECT_NEAR(c.cdf(u, 0.0), 0.0, 1e-12) << c.name();
      EXPECT_NEAR(c.cdf(0.0, u), 0.0, 1e-12) << c.name();
      EXPECT_NEAR(c.cdf(u, 1.0), u, 1e-12) << c.name();
      EXPECT_NEAR(c.cdf(1.0, u), u, 1e-12) << c.name();
    }
    const int n = 15;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double a0 = double(i) / n, a1 = double(i + 1) / n, b0 = double(j) / n, b1 = double(j + 1) / n;
        EXPECT_GE(c.cdf(a1, b1) - c.cdf(a1, b0) - c.cdf(a0, b1) + c.cdf(a0, b0), -1e-12) << c.name();
      }
  }
}

TEST(Copula, DensityIntegratesToCdf) {
  using boost::math::quadrature::gauss_kronrod;
  for (const auto& c : zoo()) {
    for (auto [a, b] : {std::pair{0.4, 0.7}, std::pair{0.9, 0.3}}) {
      const double mass = gauss_kronrod<double, 31>::integrate(
          [&](double x) {
            return gauss_kronrod<double, 31>::integrate([&](double y) { return c.pdf(x, y); }, 0.0, b, 8, 1e-10);
          },
          0.0, a, 8, 1e-10);
      EXPECT_NEAR(mass, c.cdf(a, b), 1e-4) << c.name();
    }
  }
}

TEST(Copula, SamplingMatchesClosedForms) {
  const auto cl = Copula(SingleCopula::of(Family::Clayton, 2.0)).sample(1'000'000, 17);
  EXPECT_NEAR(kendall_tau(cl.u1, cl.u2), 0.5, 0.005);

  const Copula gu = SingleCopula::of(Family::Gumbel, 2.0);
  const auto gs = gu.sample(1'000'000, 18);
  double hits = 0;
  for (std::size_t i = 0; i < gs.u1.size(); ++i) hits += gs.u1[i] <= 0.5 && gs.u2[i] <= 0.5;
  EXPECT_NEAR(hits / 1e6, gu.cdf(0.5, 0.5), 0.002);
}

TEST(Copula, SamplingIsDeterministicAndInterior) {
  for (const auto& c : zoo()) {
    const auto a = c.sample(2000, 99), b = c.sample(2000, 99);
    EXPECT_EQ(a.u1, b.u1);
    EXPECT_EQ(a.u2, b.u2);
    for (std::size_t i = 0; i < a.u1.size(); ++i) {
      ASSERT_GT(a.u1[i], 0.0);
      ASSERT_LT(a.u1[i], 1.0);
      ASSERT_GT(a.u2[i], 0.0);
      ASSERT_LT(a.u2[i], 1.0);
    }
  }
  EXPECT_NE(zoo()[0].sample(10, 1).u1, zoo()[0].sample(10, 2).u1);
}

TEST(Copula, DependenceClosedForms) {
  const auto t = Copula(SingleCopula::student(0.5, 4.0)).dependence();
  EXPECT_NEAR(t.tau, 2.0 * std::asin(0.5) / std::numbers::pi, 1e-14);
  const double lam = 2.0 * student_t_cdf(-std::sqrt(5.0) * std::sqrt(0.5 / 1.5), 5.0);
  EXPECT_NEAR(t.lambda_low, lam, 1e-12);
  EXPECT_NEAR(t.lambda_up, lam, 1e-12);

  const auto cl = Copula(SingleCopula::of(Family::Clayton, 3.0)).dependence();
  EXPECT_NEAR(cl.tau, 0.6, 1e-14);
  EXPECT_NEAR(cl.lambda_low, std::pow(2.0, -1.0 / 3.0), 1e-14);
  EXPECT_EQ(cl.lambda_up, 0.0);

  const auto sgu = Copula(SingleCopula::of(Family::SurvivalGumbel, 2.0)).dependence();
  EXPECT_NEAR(sgu.lambda_low, 2.0 - std::sqrt(2.0), 1e-14);
  EXPECT_EQ(sgu.lambda_up, 0.0);

  const auto n = Copula(SingleCopula::normal(0.7)).dependence();
  EXPECT_EQ(n.lambda_low, 0.0);
  EXPECT_EQ(n.lambda_up, 0.0);

  const auto r = Copula(SingleCopula::of(Family::Rotated90Clayton, -2.0)).dependence();
  EXPECT_EQ(r.lambda_low, 0.0);
  EXPECT_EQ(r.lambda_up, 0.0);
}

TEST(Copula, GumbelIndependenceBoundary) {
  const Copula c = SingleCopula::of(Family::Gumbel, 1.0);
  EXPECT_TRUE(c.is_independence());
  const auto d = c.dependence();
  EXPECT_NEAR(d.tau, 0.0, 1e-15);
  EXPECT_NEAR(d.lambda_up, 0.0, 1e-15);
  EXPECT_NEAR(c.cdf(0.3, 0.6), 0.18, 1e-12);
}

TEST(Copula, MixtureDependence) {
  const Copula m = Copula::gumbel_mixture(2.0446, 5.7878, 0.2999);
  const auto d = m.dependence();
  EXPECT_NEAR(d.lambda_up, 0.1789, 5e-4);
  EXPECT_NEAR(d.lambda_low, 0.6110, 5e-4);
  EXPECT_NEAR(d.tau, 0.7193, 0.01);
  EXPECT_EQ(m.parameter_count(), 3);
  for (double a : {0.2, 0.6})
    for (double b : {0.3, 0.9})
      EXPECT_NEAR(m.cdf(a, b), 0.2999 * Copula(SingleCopula::of(Family::Gumbel, 2.0446)).cdf(a, b) +
                                   0.7001 * Copula(SingleCopula::of(Family::SurvivalGumbel, 5.7878)).cdf(a, b),
                  1e-12);
}

TEST(Copula, BoundaryWeightCollapsesToComponent) {
  const Copula m = Copula::gumbel_mixture(2.5, 3.0, 1.0);
  const Copula g = SingleCopula::of(Family::Gumbel, 2.5);
  EXPECT_NEAR(m.logpdf(0.3, 0.4), g.logpdf(0.3, 0.4), 1e-12);
  EXPECT_NEAR(m.dependence().tau, 0.6, 1e-14);
}

TEST(Copula, ClampsBoundaryArguments) {
  const Copula c = SingleCopula::of(Family::Clayton, 2.0);
  bool clamped = false;
  EXPECT_TRUE(std::isfinite(c.logpdf(0.0, 0.5, &clamped)));
  EXPECT_TRUE(clamped);
  c.logpdf(0.2, 0.5, &clamped);
  EXPECT_FALSE(clamped);
}

TEST(Copula, DomainErrors) {
  EXPECT_THROW(Copula(SingleCopula::normal(1.0)), DomainError);
  EXPECT_THROW(Copula(SingleCopula::student(0.3, 2.0)), DomainError);
  EXPECT_THROW(Copula(SingleCopula::student(0.3, 101.0)), DomainError);
  EXPECT_THROW(Copula(SingleCopula::of(Family::Clayton, 0.0)), DomainError);
  EXPECT_THROW(Copula(SingleCopula::of(Family::Rotated90Clayton, 1.0)), DomainError);
  EXPECT_THROW(Copula(SingleCopula::of(Family::Gumbel, 0.9)), DomainError);
  EXPECT_THROW(Copula::gumbel_mixture(2.0, 2.0, 1.2), DomainError);
  EXPECT_THROW(Copula({SingleCopula::normal(0.1)}, {0.5}), DomainError);
  EXPECT_EQ(parse_family("Rotated270Clayton"), Family::Rotated270Clayton);
  EXPECT_FALSE(parse_family("Frank").has_value());
}
