#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "tailrisk/copula_fit.hpp"

using namespace tailrisk;

namespace {

CopulaFitOptions fast() {
  CopulaFitOptions o;
  o.tau_mc_samples = 20000;
  return o;
}

}  // namespace

TEST(CopulaFit, InformationCriteria) {
  const auto s = Copula(SingleCopula::of(Family::Clayton, 2.0)).sample(500, 1);
  for (Family f : {Family::Clayton, Family::Gumbel, Family::StudentT}) {
    const auto m = fit_single(s.u1, s.u2, f, fast());
    EXPECT_EQ(m.n_obs, 500u);
    EXPECT_NEAR(m.aic, 2.0 * m.k - 2.0 * m.loglik, 1e-9);
    EXPECT_NEAR(m.bic, m.k * std::log(500.0) - 2.0 * m.loglik, 1e-9);
    EXPECT_NEAR(m.loglik, detail::copula_loglik(m.copula, s.u1, s.u2), 1e-8);
  }
  EXPECT_EQ(fit_single(s.u1, s.u2, Family::StudentT, fast()).k, 2);
  EXPECT_EQ(fit_mixed(s.u1, s.u2, fast()).k, 3);
}

TEST(CopulaFit, RecoversClayton) {
  const auto s = Copula(SingleCopula::of(Family::Clayton, 2.0)).sample(5000, 2);
  const auto m = fit_single(s.u1, s.u2, Family::Clayton, fast());
  EXPECT_TRUE(m.converged);
  EXPECT_NEAR(m.params[0], 2.0, 0.15);
  EXPECT_GT(m.std_errors[0], 0.0);
  EXPECT_LT(m.std_errors[0], 0.1);
}

TEST(CopulaFit, IndependentUniformsGiveZeroRho) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<double> a(5000), b(5000);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = U(rng), b[i] = U(rng);
  EXPECT_NEAR(fit_single(a, b, Family::Normal, fast()).params[0], 0.0, 0.03);
}

TEST(CopulaFit, MixtureOnPureGumbelLeansOnGumbel) {
  const auto s = Copula(SingleCopula::of(Family::Gumbel, 2.5)).sample(3000, 7);
  const auto m = fit_mixed(s.u1, s.u2, fast());
  EXPECT_GE(m.params[2], 0.9);
}

TEST(CopulaFit, MixtureNestsBothComponents) {
  const auto s = Copula::gumbel_mixture(3.0, 3.0, 0.5).sample(2000, 8);
  const auto g = fit_single(s.u1, s.u2, Family::Gumbel, fast());
  const auto sg = fit_single(s.u1, s.u2, Family::SurvivalGumbel, fast());
  const auto m = fit_mixed(s.u1, s.u2, fast());
  EXPECT_GE(m.loglik, g.loglik - 1e-9);
  EXPECT_GE(m.loglik, sg.loglik - 1e-9);
  EXPECT_NEAR(m.params[2], 0.5, 0.1);
}

TEST(CopulaFit, NearIndependenceCollapseIsReported) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<double> a(1500), b(1500);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = U(rng), b[i] = U(rng);
  CopulaModel m;
  ASSERT_NO_THROW(m = fit_mixed(a, b, fast()));
  EXPECT_TRUE(std::isfinite(m.loglik));
  EXPECT_GE(m.params[2], 0.0);
  EXPECT_LE(m.params[2], 1.0);
  EXPECT_LT(m.dependence.tau, 0.05);
}

TEST(CopulaFit, ModelSelectionRanksAllCandidates) {
  const auto s = Copula(SingleCopula::of(Family::SurvivalClayton, 2.0)).sample(1500, 9);
  const auto sel = model_selection(s.u1, s.u2, CopulaCandidate::all(), fast());
  ASSERT_EQ(sel.ranked.size() + sel.failures.size(), 9u);
  std::set<std::string> names;
  for (const auto& m : sel.ranked) names.insert(m.name());
  EXPECT_EQ(names.size(), sel.ranked.size());
  for (std::size_t i = 1; i < sel.ranked.size(); ++i) EXPECT_LE(sel.ranked[i - 1].aic, sel.ranked[i].aic);
  EXPECT_EQ(sel.ranked.front().name(), "SurvivalClayton");
}

TEST(CopulaFit, ConfigAndInputErrors) {
  std::vector<double> a(99, 0.5), b(99, 0.5);
  EXPECT_THROW(fit_single(a, b, Family::Clayton), FitError);
  std::vector<double> c(150, 0.5), d(151, 0.5);
  EXPECT_THROW(fit_single(c, d, Family::Clayton), DomainError);
  std::vector<double> e(150, 1.5);
  EXPECT_THROW(fit_single(e, e, Family::Clayton), DomainError);
  EXPECT_THROW(model_selection(c, c, {}), ConfigError);
  EXPECT_THROW(CopulaCandidate::parse("Frank"), ConfigError);
  EXPECT_FALSE(CopulaCandidate::parse("Mixture").family.has_value());
}

// Simulation studies; registered under the Slow ctest configuration.

TEST(SlowCopulaFit, ClaytonRecoveryAcrossSeeds) {
  int hits = 0;
  for (int seed = 0; seed < 20; ++seed) {
    const auto s = Copula(SingleCopula::of(Family::Clayton, 2.0)).sample(5000, 100 + seed);
    const double a = fit_single(s.u1, s.u2, Family::Clayton, fast()).params[0];
    hits += a >= 1.85 && a <= 2.15;
  }
  EXPECT_GE(hits, 18);
}

TEST(SlowCopulaFit, MixtureWeightBoundaryAcrossSeeds) {
  int hits = 0;
  for (int seed = 0; seed < 20; ++seed) {
    const auto s = Copula(SingleCopula::of(Family::Gumbel, 2.5)).sample(2000, 200 + seed);
    hits += fit_mixed(s.u1, s.u2, fast()).params[2] >= 0.9;
  }
  EXPECT_GE(hits, 16);
}
