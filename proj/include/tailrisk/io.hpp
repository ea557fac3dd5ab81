#ifndef TAILRISK_IO_HPP_
#define TAILRISK_IO_HPP_

// JSON and CSV renderings of the library's result types. Numbers are written
// with 12 significant digits; non-finite values become null (JSON) or
// nan/inf (CSV).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "tailrisk/copula_fit.hpp"
#include "tailrisk/error.hpp"
#include "tailrisk/inference.hpp"
#include "tailrisk/marginal.hpp"
#include "tailrisk/market_data.hpp"
#include "tailrisk/risk.hpp"
#include "tailrisk/stats.hpp"

namespace tailrisk::io {

using json = nlohmann::ordered_json;

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::stod(fmt(v));
}

inline json nums(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw Error("io_error", "cannot write " + path.string());
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline json to_json(const TestStat& t) { return {{"statistic", num(t.statistic)}, {"p_value", num(t.p_value)}}; }

inline json to_json(const DescriptiveReport& d) {
  json j;
  j["max"] = num(d.moments.max);
  j["min"] = num(d.moments.min);
  j["mean"] = num(d.moments.mean);
  j["std_dev"] = num(d.moments.std_dev);
  j["skewness"] = num(d.moments.skewness);
  j["kurtosis"] = num(d.moments.kurtosis);
  j["jarque_bera"] = to_json(d.jarque_bera);
  for (const auto& [key, m] : {std::pair{"ljung_box_q", &d.ljung_box_q}, std::pair{"ljung_box_q2", &d.ljung_box_q2},
                               std::pair{"arch_lm", &d.arch_lm}}) {
    json inner = json::object();
    for (const auto& [lag, t] : *m) inner[std::to_string(lag)] = to_json(t);
    j[key] = inner;
  }
  return j;
}

/// Flat (statistic, value) rows of a descriptive report.
inline std::vector<std::pair<std::string, double>> flatten(const DescriptiveReport& d) {
  std::vector<std::pair<std::string, double>> rows = {
      {"max", d.moments.max},           {"min", d.moments.min},
      {"mean", d.moments.mean},         {"std_dev", d.moments.std_dev},
      {"skewness", d.moments.skewness}, {"kurtosis", d.moments.kurtosis},
      {"jarque_bera", d.jarque_bera.statistic}, {"jarque_bera_p", d.jarque_bera.p_value}};
  for (const auto& [key, m] : {std::pair{"Q", &d.ljung_box_q}, std::pair{"Q2", &d.ljung_box_q2},
                               std::pair{"ARCH", &d.arch_lm}}) {
    for (const auto& [lag, t] : *m) {
      rows.emplace_back(std::string(key) + "(" + std::to_string(lag) + ")", t.statistic);
      rows.emplace_back(std::string(key) + "(" + std::to_string(lag) + ")_p", t.p_value);
    }
  }
  return rows;
}

inline json to_json(const CorrelationReport& c) {
  auto one = [](const Correlation& x) { return json{{"coefficient", num(x.coefficient)}, {"p_value", num(x.p_value)}}; };
  return {{"pearson", one(c.pearson)}, {"kendall_tau", one(c.kendall_tau)}, {"spearman", one(c.spearman)}};
}

inline json to_json(const MarginalFit& f) {
  json j;
  j["spec"] = f.spec.label();
  j["orders"] = {{"m", f.spec.m}, {"n", f.spec.n}, {"p", f.spec.p}, {"q", f.spec.q}};
  const auto names = MarginalParams::names(f.spec);
  const auto values = f.params.flatten();
  json params = json::object(), se = json::object();
  for (std::size_t i = 0; i < names.size(); ++i) {
    params[names[i]] = num(values[i]);
    se[names[i]] = num(i < f.std_errors.size() ? f.std_errors[i] : NAN);
  }
  j["params"] = params;
  j["std_errors"] = se;
  j["persistence"] = num(f.params.persistence());
  j["loglik"] = num(f.loglik);
  j["aic"] = num(f.aic_raw);
  j["aic_per_obs"] = num(f.aic_per_obs);
  j["bic"] = num(f.bic_raw);
  j["n_obs"] = f.n_obs;
  j["converged"] = f.converged;
  j["presample"] = {{"mean_return", num(f.presample.mean_return)}, {"variance", num(f.presample.variance)}};
  return j;
}

inline json to_json(const DependenceSummary& d) {
  return {{"tau", num(d.tau)}, {"lambda_low", num(d.lambda_low)}, {"lambda_up", num(d.lambda_up)}};
}

inline json to_json(const CopulaModel& m) {
  json j;
  j["family"] = m.name();
  json params = json::object(), se = json::object();
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    params[m.param_names[i]] = num(m.params[i]);
    se[m.param_names[i]] = num(m.std_errors[i]);
  }
  j["params"] = params;
  j["std_errors"] = se;
  j["loglik"] = num(m.loglik);
  j["aic"] = num(m.aic);
  j["bic"] = num(m.bic);
  j["k"] = m.k;
  j["n_obs"] = m.n_obs;
  j["dependence"] = to_json(m.dependence);
  j["converged"] = m.converged;
  j["at_bound"] = m.at_bound;
  j["clamped_observations"] = m.clamped;
  return j;
}

inline json to_json(const KSResult& k) {
  return {{"statistic", num(k.statistic)}, {"p_value", num(k.p_value)}, {"alternative", std::string(to_string(k.alternative))},
          {"method", std::string(to_string(k.method))}, {"n_boot", k.n_boot}, {"m", k.m}, {"n", k.n}};
}

inline json to_json(const HypothesisResult& h) {
  json j = to_json(h.ks);
  j["h0"] = h.h0;
  j["h1"] = h.h1;
  return j;
}

inline json to_json(const SpilloverTestReport& r) {
  return {{"downside", to_json(r.downside)},
          {"upside", to_json(r.upside)},
          {"asymmetry", to_json(r.asymmetry)},
          {"asymmetry_reverse", to_json(r.asymmetry_reverse)},
          {"ratio_dates_dropped", r.ratio_dates_dropped}};
}

inline json to_json(const RiskSeries& r) {
  json dates = json::array();
  for (Date d : r.dates) dates.push_back(format_date(d));
  return {{"u_down", num(r.u_down)},
          {"u_up", num(r.u_up)},
          {"u_down_normal", num(r.u_down_normal)},
          {"u_up_normal", num(r.u_up_normal)},
          {"dates", dates},
          {"var_down", nums(r.var_down)},
          {"var_up", nums(r.var_up)},
          {"covar_down", nums(r.covar_down)},
          {"covar_up", nums(r.covar_up)},
          {"covar_down_normal", nums(r.covar_down_normal)},
          {"covar_up_normal", nums(r.covar_up_normal)},
          {"delta_covar_down", nums(r.delta_covar_down)},
          {"delta_covar_up", nums(r.delta_covar_up)}};
}

inline json to_json(const std::vector<RiskSummaryRow>& rows) {
  json a = json::array();
  for (const auto& r : rows) {
    a.push_back({{"measure", r.measure}, {"side", r.side}, {"mean", num(r.mean)}, {"std_dev", num(r.std_dev)},
                 {"max", num(r.max)}, {"min", num(r.min)}, {"skewness", num(r.skewness)},
                 {"excess_kurtosis", num(r.kurtosis)}});
  }
  return a;
}

/// Long-format rows: date, measure, side, value.
inline void write_risk_series_csv(const std::filesystem::path& path, const RiskSeries& r) {
  CsvWriter w(path, {"date", "measure", "side", "value"});
  const std::vector<std::tuple<const char*, const char*, const std::vector<double>*>> cols = {
      {"VaR", "down", &r.var_down},
      {"CoVaR", "down", &r.covar_down},
      {"CoVaR_normal", "down", &r.covar_down_normal},
      {"DeltaCoVaR", "down", &r.delta_covar_down},
      {"VaR", "up", &r.var_up},
      {"CoVaR", "up", &r.covar_up},
      {"CoVaR_normal", "up", &r.covar_up_normal},
      {"DeltaCoVaR", "up", &r.delta_covar_up}};
  for (std::size_t t = 0; t < r.size(); ++t) {
    const std::string d = t < r.dates.size() ? format_date(r.dates[t]) : std::to_string(t);
    for (const auto& [measure, side, v] : cols) w.row({d, measure, side, fmt((*v)[t])});
  }
}

/// Wide plot data: date, VaR, CoVaR, Delta-CoVaR for one side.
inline void write_plot_csv(const std::filesystem::path& path, const RiskSeries& r, Side side) {
  CsvWriter w(path, {"date", "var", "covar", "delta_covar"});
  const bool down = side == Side::Down;
  for (std::size_t t = 0; t < r.size(); ++t) {
    w.row({t < r.dates.size() ? format_date(r.dates[t]) : std::to_string(t), fmt(down ? r.var_down[t] : r.var_up[t]),
           fmt(down ? r.covar_down[t] : r.covar_up[t]), fmt(down ? r.delta_covar_down[t] : r.delta_covar_up[t])});
  }
}

inline void write_prices_csv(const std::filesystem::path& path, const PriceSeries& s) {
  CsvWriter w(path, {"date", "price"});
  for (std::size_t i = 0; i < s.size(); ++i) w.row({format_date(s.dates[i]), fmt(s.prices[i])});
}

}  // namespace tailrisk::io

#endif  // TAILRISK_IO_HPP_
