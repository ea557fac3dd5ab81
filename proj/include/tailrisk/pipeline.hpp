#ifndef TAILRISK_PIPELINE_HPP_
#define TAILRISK_PIPELINE_HPP_

// Configuration, synthetic data generation and the staged per-pair workflow:
// ingest -> align -> returns -> describe -> marginal -> pit -> copula -> risk
// -> tests.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tailrisk/copula.hpp"
#include "tailrisk/copula_fit.hpp"
#include "tailrisk/distributions.hpp"
#include "tailrisk/error.hpp"
#include "tailrisk/inference.hpp"
#include "tailrisk/io.hpp"
#include "tailrisk/log.hpp"
#include "tailrisk/marginal.hpp"
#include "tailrisk/market_data.hpp"
#include "tailrisk/risk.hpp"

#ifndef TAILRISK_VERSION
#define TAILRISK_VERSION "0.0.0"
#endif

namespace tailrisk {

namespace fs = std::filesystem;
using io::json;

struct PairConfig {
  std::string label;
  fs::path futures;
  fs::path spot;
};

struct Seeds {
  std::uint64_t marginal = 20220429;
  std::uint64_t copula = 20220429;
  std::uint64_t bootstrap = 20220429;
  std::uint64_t simulate = 1;

  void set_all(std::uint64_t s) { marginal = copula = bootstrap = simulate = s; }
};

/// A marginal model with known parameters, used to generate data.
struct MarginalModel {
  MarginalSpec spec;
  MarginalParams params;
};

struct SimulationConfig {
  std::string label = "synthetic";
  std::size_t T = 5000;
  std::size_t burn_in = 500;
  Date start = make_date(2000, 1, 3);
  Copula copula = Copula(SingleCopula::of(Family::Gumbel, 2.0));
  MarginalModel futures;
  MarginalModel spot;
};

struct RunConfig {
  std::vector<PairConfig> pairs;
  std::optional<DateWindow> window;
  CsvFormat format;
  LagGrid lag_grid;
  std::vector<CopulaCandidate> copulas = CopulaCandidate::all();
  RiskConfig risk;
  PValueMethod test_method = PValueMethod::Asymptotic;
  int n_boot = 999;
  Seeds seeds;
  std::vector<int> diagnostic_lags = {10, 20};
  bool stationarity_attested = false;
  unsigned threads = 0;
  fs::path output_dir = "tailrisk_run";
  std::optional<SimulationConfig> simulate;
  json echo;

  /// Throws ConfigError unless the pipeline can run.
  void validate_for_run() const {
    if (pairs.empty()) throw ConfigError("config: at least one pair is required");
    if (window && !(window->start < window->end)) throw ConfigError("config: window start must precede end");
    if (copulas.empty()) throw ConfigError("config: copula candidate list is empty");
    risk.validate();
    for (int l : diagnostic_lags) {
      if (l < 1) throw ConfigError("config: diagnostic lags must be >= 1");
    }
    for (int i = 0; i < 4; ++i) {
      if (lag_grid.min_lag[i] < 0 || lag_grid.max_lag[i] > kMaxLag || lag_grid.min_lag[i] > lag_grid.max_lag[i]) {
        throw ConfigError("config: lag grid bounds must satisfy 0 <= min <= max <= 3");
      }
    }
    if (lag_grid.specs().empty()) throw ConfigError("config: lag grid contains no admissible specification");
  }
};

// ---------------------------------------------------------------------------
// Config parsing

namespace detail {

inline Date json_date(const json& j, const char* what) {
  const auto d = parse_date(j.get<std::string>());
  if (!d) throw ConfigError(std::string("config: bad date in ") + what);
  return *d;
}

inline std::vector<double> json_doubles(const json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(x.get<double>());
  return v;
}

inline Copula copula_from_json(const json& j) {
  const std::string fam = j.at("family").get<std::string>();
  const std::vector<double> p = j.contains("params") ? json_doubles(j.at("params")) : std::vector<double>{};
  auto need = [&](std::size_t k) {
    if (p.size() != k) throw ConfigError("config: copula " + fam + " needs " + std::to_string(k) + " parameters");
  };
  try {
    if (fam == "Independence") return Copula(SingleCopula::normal(0.0));
    if (fam == "Mixture" || fam == "Mixture(Gumbel,SurvivalGumbel)") {
      need(3);
      return Copula::gumbel_mixture(p[0], p[1], p[2]);
    }
    const auto f = parse_family(fam);
    if (!f) throw ConfigError("config: unknown copula family '" + fam + "'");
    if (*f == Family::StudentT) {
      need(2);
      return Copula(SingleCopula::student(p[0], p[1]));
    }
    need(1);
    return Copula(SingleCopula{*f, p[0], 0.0});
  } catch (const DomainError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline MarginalModel marginal_from_json(const json& j) {
  MarginalModel m;
  const auto o = j.at("orders");
  m.spec = {o.at(0).get<int>(), o.at(1).get<int>(), o.at(2).get<int>(), o.at(3).get<int>()};
  m.params.phi0 = j.value("phi0", 0.0);
  m.params.phi = j.contains("phi") ? json_doubles(j["phi"]) : std::vector<double>{};
  m.params.gamma = j.contains("gamma") ? json_doubles(j["gamma"]) : std::vector<double>{};
  m.params.alpha0 = j.at("alpha0").get<double>();
  m.params.alpha = j.contains("alpha") ? json_doubles(j["alpha"]) : std::vector<double>{};
  m.params.beta = j.contains("beta") ? json_doubles(j["beta"]) : std::vector<double>{};
  m.params.nu = j.value("nu", 8.0);
  m.params.eta = j.value("eta", 0.0);
  try {
    m.spec.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!m.params.matches(m.spec) || !m.params.feasible()) {
    throw ConfigError("config: simulation marginal " + m.spec.label() + " has inconsistent or infeasible parameters");
  }
  return m;
}

}  // namespace detail

/// Parses a JSON run configuration; relative paths resolve against `base`.
inline RunConfig parse_config(const json& j, const fs::path& base = {}) {
  RunConfig c;
  c.echo = j;
  try {
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    if (j.contains("pairs")) {
      for (const auto& p : j.at("pairs")) {
        c.pairs.push_back({p.at("label").get<std::string>(), resolve(p.at("futures").get<std::string>()),
                           resolve(p.at("spot").get<std::string>())});
      }
    }
    if (j.contains("window")) {
      c.window = DateWindow{detail::json_date(j["window"].at("start"), "window.start"),
                            detail::json_date(j["window"].at("end"), "window.end")};
    }
    if (j.contains("input_format")) {
      const auto& f = j["input_format"];
      const std::string delim = f.value("delimiter", std::string{});
      c.format.delimiter = delim.empty() ? 0 : (delim == "\\t" || delim == "tab" ? '\t' : delim[0]);
      c.format.date_column = f.value("date_column", c.format.date_column);
      c.format.price_column = f.value("price_column", c.format.price_column);
      c.format.date_format = f.value("date_format", c.format.date_format);
    }
    if (j.contains("lag_grid")) {
      const char* keys[] = {"m", "n", "p", "q"};
      for (int i = 0; i < 4; ++i) {
        if (!j["lag_grid"].contains(keys[i])) continue;
        const auto& b = j["lag_grid"][keys[i]];
        c.lag_grid.min_lag[i] = b.at(0).get<int>();
        c.lag_grid.max_lag[i] = b.at(1).get<int>();
      }
    }
    if (j.contains("copulas")) {
      c.copulas.clear();
      for (const auto& name : j["copulas"]) c.copulas.push_back(CopulaCandidate::parse(name.get<std::string>()));
    }
    if (j.contains("risk")) {
      const auto& r = j["risk"];
      c.risk.alpha_down = r.value("alpha_down", c.risk.alpha_down);
      c.risk.alpha_up = r.value("alpha_up", c.risk.alpha_up);
      c.risk.normal_state = r.value("normal_state", c.risk.normal_state);
      if (r.contains("upside_convention")) {
        c.risk.upside_convention = parse_upside_convention(r["upside_convention"].get<std::string>());
      }
      if (r.contains("normal_state_convention")) {
        c.risk.normal_state_convention = parse_normal_state_convention(r["normal_state_convention"].get<std::string>());
      }
    }
    if (j.contains("tests")) {
      c.test_method = parse_pvalue_method(j["tests"].value("method", std::string("asymptotic")));
      c.n_boot = j["tests"].value("n_boot", c.n_boot);
      if (c.n_boot < 1) throw ConfigError("config: tests.n_boot must be >= 1");
    }
    if (j.contains("seeds")) {
      const auto& s = j["seeds"];
      if (s.is_number()) {
        c.seeds.set_all(s.get<std::uint64_t>());
      } else {
        c.seeds.marginal = s.value("marginal", c.seeds.marginal);
        c.seeds.copula = s.value("copula", c.seeds.copula);
        c.seeds.bootstrap = s.value("bootstrap", c.seeds.bootstrap);
        c.seeds.simulate = s.value("simulate", c.seeds.simulate);
      }
    }
    if (j.contains("diagnostic_lags")) c.diagnostic_lags = j["diagnostic_lags"].get<std::vector<int>>();
    c.stationarity_attested = j.value("stationarity_attested", false);
    c.threads = j.value("threads", 0u);
    if (j.contains("output_dir")) c.output_dir = resolve(j["output_dir"].get<std::string>());
    if (j.contains("simulate")) {
      const auto& s = j["simulate"];
      SimulationConfig sim;
      sim.label = s.value("label", sim.label);
      sim.T = s.value("T", sim.T);
      sim.burn_in = s.value("burn_in", sim.burn_in);
      if (s.contains("start_date")) sim.start = detail::json_date(s["start_date"], "simulate.start_date");
      sim.copula = detail::copula_from_json(s.at("copula"));
      sim.futures = detail::marginal_from_json(s.at("futures"));
      sim.spot = detail::marginal_from_json(s.at("spot"));
      if (sim.T < 2) throw ConfigError("config: simulate.T must be >= 2");
      c.simulate = sim;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

inline RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Synthetic coupled paths

struct SimulatedPair {
  ReturnSeries futures;
  ReturnSeries spot;
  PriceSeries futures_prices;
  PriceSeries spot_prices;
  std::vector<double> z_futures;
  std::vector<double> z_spot;
};

namespace detail {
inline std::vector<Date> weekdays(Date start, std::size_t n) {
  std::vector<Date> out;
  out.reserve(n);
  for (Date d = start; out.size() < n; d += std::chrono::days{1}) {
    const std::chrono::weekday wd{d};
    if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) out.push_back(d);
  }
  return out;
}

inline PriceSeries prices_from_returns(const std::string& ticker, const std::vector<Date>& dates,
                                       const std::vector<double>& r) {
  PriceSeries p;
  p.ticker = ticker;
  p.dates = dates;
  p.prices.resize(r.size() + 1);
  p.prices[0] = 100.0;
  for (std::size_t t = 0; t < r.size(); ++t) p.prices[t + 1] = p.prices[t] * std::exp(r[t] / 100.0);
  return p;
}
}  // namespace detail

/// Draws (u_spot, u_futures) from the copula, maps them through each
/// margin's skewed-t quantile and runs the ARMA-GARCH recursions forward.
inline SimulatedPair simulate_pair(const MarginalModel& futures, const MarginalModel& spot, const Copula& copula,
                                   std::size_t T, std::uint64_t seed, std::size_t burn_in = 500,
                                   Date start = make_date(2000, 1, 3), const std::string& label = "synthetic") {
  if (T < 2) throw DomainError("simulate_pair: T must be >= 2");
  const std::size_t n = T + burn_in;
  const PairedSample u = copula.sample(n, seed);
  const SkewedT df(futures.params.nu, futures.params.eta), ds(spot.params.nu, spot.params.eta);
  std::vector<double> zf(n), zs(n);
  for (std::size_t t = 0; t < n; ++t) {
    zs[t] = ds.quantile(std::clamp(u.u1[t], kUClamp, 1.0 - kUClamp));
    zf[t] = df.quantile(std::clamp(u.u2[t], kUClamp, 1.0 - kUClamp));
  }
  const SimulatedPath pf = simulate_path(futures.spec, futures.params, zf, stationary_presample(futures.params));
  const SimulatedPath ps = simulate_path(spot.spec, spot.params, zs, stationary_presample(spot.params));

  SimulatedPair out;
  const auto dates = detail::weekdays(start, T + 1);
  const auto tail = [&](const std::vector<double>& v) {
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(burn_in), v.end());
  };
  out.futures = {label + "_futures", {dates.begin() + 1, dates.end()}, tail(pf.returns)};
  out.spot = {label + "_spot", {dates.begin() + 1, dates.end()}, tail(ps.returns)};
  out.z_futures = tail(zf);
  out.z_spot = tail(zs);
  out.futures_prices = detail::prices_from_returns(out.futures.label, dates, out.futures.values);
  out.spot_prices = detail::prices_from_returns(out.spot.label, dates, out.spot.values);
  return out;
}

inline SimulatedPair simulate_pair(const SimulationConfig& s, std::uint64_t seed) {
  return simulate_pair(s.futures, s.spot, s.copula, s.T, seed, s.burn_in, s.start, s.label);
}

// ---------------------------------------------------------------------------
// Staged workflow

enum class Stage { Ingest, Align, Returns, Describe, Marginal, Pit, Copula, Risk, Tests };

inline constexpr const char* kStageNames[] = {"ingest", "align",  "returns", "describe", "marginal",
                                              "pit",    "copula", "risk",    "tests"};

inline const char* stage_name(Stage s) { return kStageNames[static_cast<int>(s)]; }

struct PairResult {
  std::string label;
  bool ok = false;
  std::optional<Stage> failed_stage;
  std::string error_kind;
  std::string error_message;

  AlignedPair aligned;
  ReturnSeries futures_returns, spot_returns;
  DescriptiveReport futures_descriptive, spot_descriptive;
  CorrelationReport price_correlation, return_correlation;
  std::optional<LagSearchResult> futures_marginal, spot_marginal;
  DescriptiveReport futures_residuals, spot_residuals;
  PseudoObservations u_futures, u_spot;
  std::vector<CopulaModel> copulas;  // every fitted candidate, AIC ascending
  std::vector<std::pair<std::string, std::string>> copula_failures;
  std::optional<CopulaModel> best_single;
  std::optional<CopulaModel> mixture;
  std::map<std::string, RiskSeries> risk;  // keyed by "best_single" / "mixture"
  std::map<std::string, SpilloverTestReport> tests;
  json manifest;
};

namespace detail {

inline void write_pair_artifacts(const fs::path& dir, const PairResult& r, Stage reached) {
  using io::fmt;
  fs::create_directories(dir);
  const auto done = [&](Stage s) { return reached >= s; };
  if (done(Stage::Align)) {
    io::CsvWriter w(dir / "aligned_prices.csv", {"date", "futures", "spot"});
    for (std::size_t i = 0; i < r.aligned.dates.size(); ++i) {
      w.row({format_date(r.aligned.dates[i]), fmt(r.aligned.futures.prices[i]), fmt(r.aligned.spot.prices[i])});
    }
  }
  if (done(Stage::Returns)) {
    io::CsvWriter w(dir / "returns.csv", {"date", "futures", "spot"});
    for (std::size_t i = 0; i < r.futures_returns.size(); ++i) {
      w.row({format_date(r.futures_returns.dates[i]), fmt(r.futures_returns.values[i]), fmt(r.spot_returns.values[i])});
    }
  }
  if (done(Stage::Describe)) {
    const auto f = io::flatten(r.futures_descriptive), s = io::flatten(r.spot_descriptive);
    io::CsvWriter w(dir / "descriptive.csv", {"statistic", "futures", "spot"});
    for (std::size_t i = 0; i < f.size(); ++i) w.row({f[i].first, fmt(f[i].second), fmt(s[i].second)});
    io::write_json(dir / "descriptive.json",
                   {{"futures", io::to_json(r.futures_descriptive)}, {"spot", io::to_json(r.spot_descriptive)}});
    io::CsvWriter c(dir / "correlation.csv", {"level", "coefficient", "estimate", "p_value"});
    for (const auto& [level, rep] : {std::pair{"prices", &r.price_correlation}, std::pair{"returns", &r.return_correlation}}) {
      c.row({level, "pearson", fmt(rep->pearson.coefficient), fmt(rep->pearson.p_value)});
      c.row({level, "kendall_tau", fmt(rep->kendall_tau.coefficient), fmt(rep->kendall_tau.p_value)});
      c.row({level, "spearman", fmt(rep->spearman.coefficient), fmt(rep->spearman.p_value)});
    }
    io::write_json(dir / "correlation.json",
                   {{"prices", io::to_json(r.price_correlation)}, {"returns", io::to_json(r.return_correlation)}});
  }
  if (done(Stage::Marginal)) {
    io::CsvWriter w(dir / "marginal_fit.csv", {"series", "item", "estimate", "std_error"});
    io::CsvWriter ls(dir / "lag_search.csv", {"series", "spec", "k", "aic"});
    json j;
    for (const auto& [name, lsr, resid] : {std::tuple{"futures", &*r.futures_marginal, &r.futures_residuals},
                                          std::tuple{"spot", &*r.spot_marginal, &r.spot_residuals}}) {
      const MarginalFit& f = lsr->best;
      const auto names = MarginalParams::names(f.spec);
      const auto vals = f.params.flatten();
      w.row({name, "spec", f.spec.label(), ""});
      for (std::size_t i = 0; i < names.size(); ++i) w.row({name, names[i], fmt(vals[i]), fmt(f.std_errors[i])});
      w.row({name, "persistence", fmt(f.params.persistence()), ""});
      w.row({name, "loglik", fmt(f.loglik), ""});
      w.row({name, "aic_per_obs", fmt(f.aic_per_obs), ""});
      w.row({name, "aic", fmt(f.aic_raw), ""});
      w.row({name, "bic", fmt(f.bic_raw), ""});
      for (const auto& [stat, v] : io::flatten(*resid)) w.row({name, "residual_" + stat, fmt(v), ""});
      for (const auto& [spec, aic] : lsr->aic_table) {
        ls.row({name, spec.label(), std::to_string(spec.parameter_count()), fmt(aic)});
      }
      json fj = io::to_json(f);
      fj["residual_diagnostics"] = io::to_json(*resid);
      json failed = json::array();
      for (const auto& s : lsr->failed) failed.push_back(s.label());
      fj["lag_search_failures"] = failed;
      j[name] = fj;
    }
    io::write_json(dir / "marginal_fit.json", j);
  }
  if (done(Stage::Pit)) {
    io::CsvWriter w(dir / "pit.csv", {"date", "u_spot", "u_futures"});
    for (std::size_t i = 0; i < r.u_spot.u.size(); ++i) {
      w.row({format_date(r.futures_returns.dates[i]), fmt(r.u_spot.u[i]), fmt(r.u_futures.u[i])});
    }
  }
  if (done(Stage::Copula)) {
    io::CsvWriter w(dir / "copula_single.csv",
                    {"rank", "family", "param1", "std_error1", "param2", "std_error2", "loglik", "aic", "bic", "tau",
                     "lambda_low", "lambda_up", "converged", "at_bound"});
    int rank = 0;
    json all = json::array();
    for (const auto& m : r.copulas) {
      all.push_back(io::to_json(m));
      if (m.copula.is_mixture()) continue;
      const bool two = m.params.size() > 1;
      w.row({std::to_string(++rank), m.name(), fmt(m.params[0]), fmt(m.std_errors[0]), two ? fmt(m.params[1]) : "",
             two ? fmt(m.std_errors[1]) : "", fmt(m.loglik), fmt(m.aic), fmt(m.bic), fmt(m.dependence.tau),
             fmt(m.dependence.lambda_low), fmt(m.dependence.lambda_up), m.converged ? "true" : "false",
             m.at_bound ? "true" : "false"});
    }
    json failures = json::array();
    for (const auto& [name, err] : r.copula_failures) failures.push_back({{"candidate", name}, {"error", err}});
    io::write_json(dir / "copula_models.json", {{"ranked", all}, {"failures", failures}});
    if (r.mixture) {
      const CopulaModel& m = *r.mixture;
      io::CsvWriter x(dir / "copula_mixed.csv", {"item", "estimate", "std_error"});
      for (std::size_t i = 0; i < m.params.size(); ++i) x.row({m.param_names[i], fmt(m.params[i]), fmt(m.std_errors[i])});
      x.row({"tau", fmt(m.dependence.tau), ""});
      x.row({"lambda_up", fmt(m.dependence.lambda_up), ""});
      x.row({"lambda_low", fmt(m.dependence.lambda_low), ""});
      x.row({"loglik", fmt(m.loglik), ""});
      x.row({"aic", fmt(m.aic), ""});
      x.row({"bic", fmt(m.bic), ""});
      io::write_json(dir / "copula_mixed.json", io::to_json(m));
    }
  }
  if (done(Stage::Risk)) {
    io::CsvWriter s(dir / "risk_summary.csv",
                    {"model", "copula", "measure", "side", "mean", "std_dev", "max", "min", "skewness", "excess_kurtosis"});
    for (const auto& [key, rs] : r.risk) {
      const std::string copula = key == "mixture" ? r.mixture->name() : r.best_single->name();
      io::write_risk_series_csv(dir / ("risk_series_" + key + ".csv"), rs);
      io::write_plot_csv(dir / ("plot_down_" + key + ".csv"), rs, Side::Down);
      io::write_plot_csv(dir / ("plot_up_" + key + ".csv"), rs, Side::Up);
      json rj = io::to_json(rs);
      rj["copula"] = copula;
      io::write_json(dir / ("risk_" + key + ".json"), rj);
      for (const auto& row : risk_summary(rs)) {
        s.row({key, copula, row.measure, row.side, fmt(row.mean), fmt(row.std_dev), fmt(row.max), fmt(row.min),
               fmt(row.skewness), fmt(row.kurtosis)});
      }
    }
  }
  if (done(Stage::Tests)) {
    io::CsvWriter w(dir / "spillover_tests.csv",
                    {"model", "hypothesis", "h1", "alternative", "statistic", "p_value", "method"});
    json j = json::object();
    for (const auto& [key, t] : r.tests) {
      for (const HypothesisResult* h : {&t.downside, &t.upside, &t.asymmetry, &t.asymmetry_reverse}) {
        w.row({key, h->name, h->h1, std::string(to_string(h->ks.alternative)), fmt(h->ks.statistic), fmt(h->ks.p_value),
               std::string(to_string(h->ks.method))});
      }
      j[key] = io::to_json(t);
    }
    io::write_json(dir / "spillover_tests.json", j);
  }
}

}  // namespace detail

/// Runs one pair from raw price series through `last` (inclusive). Stage
/// failures are caught and recorded; artifacts of completed stages are
/// written to `dir` when it is non-empty.
inline PairResult run_pair(const RunConfig& cfg, const std::string& label, const PriceSeries& futures,
                           const PriceSeries& spot, Stage last = Stage::Tests, const fs::path& dir = {}) {
  PairResult r;
  r.label = label;
  json stages = json::object();
  std::optional<Stage> reached;
  Stage current = Stage::Align;
  auto timed = [&](Stage s, auto&& body) {
    if (s > last) return false;
    current = s;
    const auto t0 = std::chrono::steady_clock::now();
    log::info(label + ": " + stage_name(s));
    body();
    stages[stage_name(s)] = {{"status", "ok"},
                             {"seconds", io::num(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count())}};
    reached = s;
    return true;
  };
  const unsigned threads = cfg.threads;
  try {
    timed(Stage::Align, [&] { r.aligned = align_pair(futures, spot, cfg.window); });
    timed(Stage::Returns, [&] {
      r.futures_returns = log_returns(r.aligned.futures);
      r.spot_returns = log_returns(r.aligned.spot);
    });
    timed(Stage::Describe, [&] {
      r.futures_descriptive = describe(r.futures_returns, cfg.diagnostic_lags);
      r.spot_descriptive = describe(r.spot_returns, cfg.diagnostic_lags);
      r.price_correlation = correlation_suite(r.aligned.futures.prices, r.aligned.spot.prices);
      r.return_correlation = correlation_suite(r.futures_returns.values, r.spot_returns.values);
    });
    timed(Stage::Marginal, [&] {
      MarginalFitOptions mo;
      mo.seed = cfg.seeds.marginal;
      r.futures_marginal = lag_search(r.futures_returns.values, cfg.lag_grid, mo, threads);
      r.spot_marginal = lag_search(r.spot_returns.values, cfg.lag_grid, mo, threads);
      r.futures_residuals = residual_diagnostics(r.futures_marginal->best, cfg.diagnostic_lags);
      r.spot_residuals = residual_diagnostics(r.spot_marginal->best, cfg.diagnostic_lags);
    });
    timed(Stage::Pit, [&] {
      r.u_futures = pit_transform(r.futures_marginal->best.z, label + "_futures");
      r.u_spot = pit_transform(r.spot_marginal->best.z, label + "_spot");
    });
    timed(Stage::Copula, [&] {
      CopulaFitOptions co;
      co.seed = cfg.seeds.copula;
      std::vector<CopulaCandidate> singles;
      bool want_mixture = false;
      for (const auto& c : cfg.copulas) {
        if (c.family) {
          singles.push_back(c);
        } else {
          want_mixture = true;
        }
      }
      const auto& u1 = r.u_spot.u;
      const auto& u2 = r.u_futures.u;
      if (!singles.empty()) {
        ModelSelection sel = model_selection(u1, u2, singles, co, threads);
        r.copulas = sel.ranked;
        r.copula_failures = sel.failures;
        r.best_single = sel.ranked.front();
      }
      if (want_mixture) {
        const CopulaModel* g = nullptr;
        const CopulaModel* sg = nullptr;
        for (const auto& m : r.copulas) {
          if (m.name() == "Gumbel") g = &m;
          if (m.name() == "SurvivalGumbel") sg = &m;
        }
        try {
          r.mixture = fit_mixed(u1, u2, co, g, sg);
          r.copulas.push_back(*r.mixture);
          std::stable_sort(r.copulas.begin(), r.copulas.end(),
                           [](const CopulaModel& a, const CopulaModel& b) { return a.aic < b.aic; });
        } catch (const Error& e) {
          if (singles.empty()) throw;
          r.copula_failures.emplace_back(CopulaCandidate::mixture().name(), e.what());
        }
      }
    });
    timed(Stage::Risk, [&] {
      const MarginalFit& fs_ = r.spot_marginal->best;
      if (r.best_single) r.risk["best_single"] = compute_risk(fs_, *r.best_single, cfg.risk, r.spot_returns.dates);
      if (r.mixture) r.risk["mixture"] = compute_risk(fs_, *r.mixture, cfg.risk, r.spot_returns.dates);
    });
    timed(Stage::Tests, [&] {
      KSOptions ko;
      ko.method = cfg.test_method;
      ko.n_boot = cfg.n_boot;
      ko.seed = cfg.seeds.bootstrap;
      ko.threads = threads;
      for (const auto& [key, rs] : r.risk) r.tests[key] = spillover_tests(rs, ko);
    });
    r.ok = true;
  } catch (const Error& e) {
    r.failed_stage = current;
    r.error_kind = e.kind();
    r.error_message = e.what();
  } catch (const std::exception& e) {
    r.failed_stage = current;
    r.error_kind = "internal_error";
    r.error_message = e.what();
  }
  if (r.failed_stage) {
    stages[stage_name(*r.failed_stage)] = {{"status", "failed"}, {"error", r.error_message}};
    log::error(label + ": stage " + stage_name(*r.failed_stage) + " failed: " + r.error_message);
  }
  for (int s = 0; s <= static_cast<int>(Stage::Tests); ++s) {
    if (!stages.contains(kStageNames[s])) stages[kStageNames[s]] = {{"status", "skipped"}};
  }

  json m;
  m["label"] = label;
  m["status"] = r.ok ? "ok" : "failed";
  if (!r.ok) {
    m["failed_stage"] = stage_name(*r.failed_stage);
    m["error"] = {{"kind", r.error_kind}, {"message", r.error_message}};
  }
  m["stages"] = stages;
  if (reached && *reached >= Stage::Align) {
    m["observations"] = r.aligned.dates.size();
    m["fills"] = {{"futures", {{"leading", r.aligned.futures_fills.leading}, {"interior", r.aligned.futures_fills.interior}}},
                  {"spot", {{"leading", r.aligned.spot_fills.leading}, {"interior", r.aligned.spot_fills.interior}}}};
    m["calendar_note"] = "calendar is the union of both series' trading days; days in neither series are absent";
  }
  if (reached && *reached >= Stage::Marginal) {
    m["convergence"]["marginal"] = {{"futures", r.futures_marginal->best.converged},
                                    {"spot", r.spot_marginal->best.converged},
                                    {"futures_failed_specs", r.futures_marginal->failed.size()},
                                    {"spot_failed_specs", r.spot_marginal->failed.size()}};
  }
  if (reached && *reached >= Stage::Copula) {
    json cj = json::object();
    for (const auto& c : r.copulas) cj[c.name()] = {{"converged", c.converged}, {"at_bound", c.at_bound}};
    m["convergence"]["copula"] = cj;
  }
  if (reached && *reached >= Stage::Tests) {
    for (const auto& [key, t] : r.tests) m["ratio_dates_dropped"][key] = t.ratio_dates_dropped;
  }
  r.manifest = m;
  if (!dir.empty() && reached) {
    try {
      detail::write_pair_artifacts(dir, r, *reached);
    } catch (const std::exception& e) {
      r.ok = false;
      r.manifest["status"] = "failed";
      r.manifest["error"] = {{"kind", "io_error"}, {"message", e.what()}};
    }
  }
  return r;
}

struct RunSummary {
  json manifest;
  std::size_t failed_pairs = 0;
};

/// Loads every configured pair (optionally only `only_pair`) and runs it
/// through `last`, writing artifacts under output_dir/<label>/ and a
/// manifest at output_dir/manifest.json.
inline RunSummary run_pipeline(const RunConfig& cfg, Stage last = Stage::Tests, const std::string& only_pair = {}) {
  cfg.validate_for_run();
  std::vector<const PairConfig*> todo;
  for (const auto& p : cfg.pairs) {
    if (only_pair.empty() || p.label == only_pair) todo.push_back(&p);
  }
  if (todo.empty()) throw ConfigError("no pair labelled '" + only_pair + "' in config");
  fs::create_directories(cfg.output_dir);

  std::vector<json> entries(todo.size());
  std::vector<bool> ok(todo.size(), false);
  // Pairs run one after another; each pair parallelizes internally.
  for (std::size_t i = 0; i < todo.size(); ++i) {
    const PairConfig& p = *todo[i];
    const auto t0 = std::chrono::steady_clock::now();
    json ingest;
    PriceSeries fut, spot;
    try {
      fut = load_prices(p.futures.string(), cfg.format, p.label + "_futures");
      spot = load_prices(p.spot.string(), cfg.format, p.label + "_spot");
      ingest = {{"status", "ok"},
                {"seconds", io::num(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count())}};
    } catch (const Error& e) {
      log::error(p.label + ": ingest failed: " + e.what());
      json stages = json::object();
      stages["ingest"] = {{"status", "failed"}, {"error", e.what()}};
      for (int s = 1; s <= static_cast<int>(Stage::Tests); ++s) stages[kStageNames[s]] = {{"status", "skipped"}};
      entries[i] = {{"label", p.label},
                    {"status", "failed"},
                    {"failed_stage", "ingest"},
                    {"error", {{"kind", e.kind()}, {"message", e.what()}}},
                    {"stages", stages}};
      continue;
    }
    PairResult r = run_pair(cfg, p.label, fut, spot, last, cfg.output_dir / p.label);
    r.manifest["stages"]["ingest"] = ingest;
    json ordered;
    for (auto it = r.manifest.begin(); it != r.manifest.end(); ++it) {
      if (it.key() != "stages") ordered[it.key()] = it.value();
    }
    json stages;
    for (const char* s : kStageNames) stages[s] = r.manifest["stages"][s];
    ordered["stages"] = stages;
    entries[i] = ordered;
    ok[i] = r.ok;
  }

  RunSummary out;
  json m;
  m["software"] = {{"name", "tailrisk"}, {"version", TAILRISK_VERSION}};
  m["config"] = cfg.echo;
  m["last_stage"] = stage_name(last);
  m["stationarity_attested"] = cfg.stationarity_attested;
  m["pairs"] = entries;
  for (bool b : ok) out.failed_pairs += !b;
  out.manifest = m;
  io::write_json(cfg.output_dir / "manifest.json", m);
  return out;
}

}  // namespace tailrisk

#endif  // TAILRISK_PIPELINE_HPP_
