#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "tailrisk/pipeline.hpp"

using namespace tailrisk;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tailrisk_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

MarginalModel garch(double phi, double a0, double a, double b, double nu, double eta) {
  MarginalModel m;
  m.spec = {1, 0, 1, 1};
  m.params.phi0 = 0.01;
  m.params.phi = {phi};
  m.params.alpha0 = a0;
  m.params.alpha = {a};
  m.params.beta = {b};
  m.params.nu = nu;
  m.params.eta = eta;
  return m;
}

double corr(const std::vector<double>& x, const std::vector<double>& y) { return pearson(x, y); }

}  // namespace

TEST(Config, Errors) {
  EXPECT_THROW(parse_config(io::json::parse(R"({"pairs": []})")).validate_for_run(), ConfigError);
  const auto j = io::json::parse(R"({"pairs": [{"label": "a", "futures": "f.csv", "spot": "s.csv"}],
                                     "window": {"start": "2020-01-01", "end": "2019-01-01"}})");
  EXPECT_THROW(parse_config(j).validate_for_run(), ConfigError);
  RunConfig c;
  EXPECT_THROW(run_pipeline(c), ConfigError);
}

TEST(Config, ParsesBundledExample) {
  const auto cfg = load_config(fs::path(TAILRISK_DATA_DIR) / "synthetic.json");
  ASSERT_EQ(cfg.pairs.size(), 1u);
  EXPECT_EQ(cfg.pairs[0].label, "synthetic");
  EXPECT_TRUE(cfg.pairs[0].futures.is_absolute());
  EXPECT_EQ(cfg.copulas.size(), 9u);
  EXPECT_EQ(cfg.seeds.copula, 12u);
  EXPECT_EQ(cfg.lag_grid.specs().size(), 4u);
  ASSERT_TRUE(cfg.simulate.has_value());
  EXPECT_EQ(cfg.simulate->T, 2000u);
  EXPECT_NO_THROW(cfg.validate_for_run());
}

TEST(Simulate, IndependenceAndDependence) {
  const auto f = garch(0.1, 0.05, 0.08, 0.9, 6.0, -0.05);
  const auto s = garch(0.2, 0.03, 0.07, 0.9, 5.0, 0.05);
  const auto ind = simulate_pair(f, s, Copula(SingleCopula::normal(0.0)), 5000, 1);
  EXPECT_NEAR(corr(ind.z_futures, ind.z_spot), 0.0, 0.03);
  const auto dep = simulate_pair(f, s, Copula(SingleCopula::of(Family::Gumbel, 2.0)), 5000, 2);
  const auto uf = pit_transform(dep.z_futures).u, us = pit_transform(dep.z_spot).u;
  EXPECT_NEAR(kendall_tau(uf, us), 0.5, 0.03);
  EXPECT_EQ(dep.futures.values.size(), 5000u);
  EXPECT_EQ(dep.futures_prices.size(), 5001u);
  EXPECT_EQ(dep.futures.dates, dep.spot.dates);

  const auto again = simulate_pair(f, s, Copula(SingleCopula::of(Family::Gumbel, 2.0)), 5000, 2);
  EXPECT_EQ(again.spot.values, dep.spot.values);
  EXPECT_EQ(again.futures_prices.prices, dep.futures_prices.prices);
}

TEST(Pipeline, CsvRoundTrip) {
  const auto dir = scratch_dir("roundtrip");
  const auto sim = simulate_pair(garch(0.1, 0.05, 0.08, 0.9, 6.0, -0.05), garch(0.2, 0.03, 0.07, 0.9, 5.0, 0.05),
                                 Copula(SingleCopula::normal(0.3)), 300, 3);
  io::write_prices_csv(dir / "p.csv", sim.spot_prices);
  const auto back = load_prices((dir / "p.csv").string());
  ASSERT_EQ(back.size(), sim.spot_prices.size());
  EXPECT_EQ(back.dates, sim.spot_prices.dates);
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_NEAR(back.prices[i], sim.spot_prices.prices[i], 1e-11 * sim.spot_prices.prices[i]);
  }
}

TEST(Pipeline, BundledSyntheticRun) {
  auto cfg = load_config(fs::path(TAILRISK_DATA_DIR) / "synthetic.json");
  cfg.output_dir = scratch_dir("bundled_a");
  const auto a = run_pipeline(cfg);
  EXPECT_EQ(a.failed_pairs, 0u);
  const fs::path pd = cfg.output_dir / "synthetic";
  for (const char* f : {"aligned_prices.csv", "returns.csv", "descriptive.csv", "descriptive.json", "correlation.csv",
                        "correlation.json", "marginal_fit.csv", "marginal_fit.json", "lag_search.csv", "pit.csv",
                        "copula_single.csv", "copula_models.json", "copula_mixed.csv", "copula_mixed.json",
                        "risk_series_best_single.csv", "risk_series_mixture.csv", "plot_down_best_single.csv",
                        "plot_up_best_single.csv", "risk_summary.csv", "spillover_tests.csv",
                        "spillover_tests.json"}) {
    EXPECT_TRUE(fs::exists(pd / f)) << f;
  }
  EXPECT_TRUE(fs::exists(cfg.output_dir / "manifest.json"));

  const auto tests = io::json::parse(slurp(pd / "spillover_tests.json"));
  for (const char* key : {"best_single", "mixture"}) {
    EXPECT_LT(tests[key]["downside"]["p_value"].get<double>(), 0.01) << key;
    EXPECT_LT(tests[key]["upside"]["p_value"].get<double>(), 0.01) << key;
  }

  auto cfg_b = cfg;
  cfg_b.output_dir = scratch_dir("bundled_b");
  run_pipeline(cfg_b);
  for (const auto& e : fs::directory_iterator(pd)) {
    if (e.path().extension() != ".csv") continue;
    EXPECT_EQ(slurp(e.path()), slurp(cfg_b.output_dir / "synthetic" / e.path().filename())) << e.path().filename();
  }
}

TEST(Pipeline, FailureIsolation) {
  const auto dir = scratch_dir("isolation");
  const auto sim = simulate_pair(garch(0.1, 0.05, 0.08, 0.9, 6.0, -0.05), garch(0.2, 0.03, 0.07, 0.9, 5.0, 0.05),
                                 Copula(SingleCopula::of(Family::Clayton, 1.5)), 600, 4);
  io::write_prices_csv(dir / "f.csv", sim.futures_prices);
  io::write_prices_csv(dir / "s.csv", sim.spot_prices);
  RunConfig cfg;
  cfg.pairs = {{"good", dir / "f.csv", dir / "s.csv"}, {"bad", dir / "missing.csv", dir / "s.csv"}};
  cfg.lag_grid.max_lag[0] = cfg.lag_grid.max_lag[1] = 0;
  cfg.lag_grid.min_lag[2] = cfg.lag_grid.max_lag[2] = 1;
  cfg.lag_grid.min_lag[3] = cfg.lag_grid.max_lag[3] = 1;
  cfg.copulas = {CopulaCandidate::single(Family::Clayton), CopulaCandidate::single(Family::Normal)};
  cfg.output_dir = dir / "out";
  const auto res = run_pipeline(cfg);
  EXPECT_EQ(res.failed_pairs, 1u);
  const auto& pairs = res.manifest["pairs"];
  EXPECT_EQ(pairs[0]["status"], "ok");
  EXPECT_EQ(pairs[1]["status"], "failed");
  EXPECT_EQ(pairs[1]["failed_stage"], "ingest");
  EXPECT_EQ(pairs[1]["stages"]["tests"]["status"], "skipped");
  EXPECT_TRUE(fs::exists(dir / "out" / "good" / "spillover_tests.csv"));
}

TEST(Pipeline, LastStageMarksLaterStagesSkipped) {
  const auto dir = scratch_dir("last_stage");
  const auto sim = simulate_pair(garch(0.1, 0.05, 0.08, 0.9, 6.0, -0.05), garch(0.2, 0.03, 0.07, 0.9, 5.0, 0.05),
                                 Copula(SingleCopula::normal(0.4)), 400, 5);
  io::write_prices_csv(dir / "f.csv", sim.futures_prices);
  io::write_prices_csv(dir / "s.csv", sim.spot_prices);
  RunConfig cfg;
  cfg.pairs = {{"p", dir / "f.csv", dir / "s.csv"}};
  cfg.lag_grid.max_lag[0] = cfg.lag_grid.max_lag[1] = 0;
  cfg.lag_grid.min_lag[2] = cfg.lag_grid.max_lag[2] = 1;
  cfg.lag_grid.min_lag[3] = cfg.lag_grid.max_lag[3] = 1;
  cfg.output_dir = dir / "out";
  const auto res = run_pipeline(cfg, Stage::Marginal);
  EXPECT_EQ(res.failed_pairs, 0u);
  const auto& st = res.manifest["pairs"][0]["stages"];
  EXPECT_EQ(st["marginal"]["status"], "ok");
  for (const char* s : {"pit", "copula", "risk", "tests"}) EXPECT_EQ(st[s]["status"], "skipped") << s;
  EXPECT_TRUE(fs::exists(dir / "out" / "p" / "marginal_fit.json"));
  EXPECT_FALSE(fs::exists(dir / "out" / "p" / "pit.csv"));
  EXPECT_EQ(res.manifest["last_stage"], "marginal");
}
