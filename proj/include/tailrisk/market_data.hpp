#ifndef TAILRISK_MARKET_DATA_HPP_
#define TAILRISK_MARKET_DATA_HPP_

// Price ingestion, futures/spot calendar alignment, log returns and the
// descriptive statistics reported for each return series.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tailrisk/error.hpp"
#include "tailrisk/stats.hpp"

namespace tailrisk {

using Date = std::chrono::sys_days;

inline Date make_date(int y, unsigned m, unsigned d) {
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) throw ValidationError("invalid calendar date");
  return Date{ymd};
}

inline std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

/// Parses `text` with a strftime-style `format` (default ISO-8601).
inline std::optional<Date> parse_date(const std::string& text, const std::string& format = "%Y-%m-%d") {
  std::tm tm{};
  std::istringstream in(text);
  in >> std::get_time(&tm, format.c_str());
  if (in.fail()) return std::nullopt;
  in >> std::ws;
  if (!in.eof()) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{tm.tm_year + 1900},
                                        std::chrono::month{static_cast<unsigned>(tm.tm_mon + 1)},
                                        std::chrono::day{static_cast<unsigned>(tm.tm_mday)}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

struct PriceSeries {
  std::string ticker;
  std::vector<Date> dates;
  std::vector<double> prices;

  std::size_t size() const noexcept { return prices.size(); }
  bool empty() const noexcept { return prices.empty(); }

  /// Throws ValidationError unless dates strictly increase and prices are positive.
  void validate() const {
    if (dates.size() != prices.size()) throw ValidationError(ticker + ": dates/prices length mismatch");
    for (std::size_t i = 0; i < prices.size(); ++i) {
      if (!(prices[i] > 0.0) || !std::isfinite(prices[i])) {
        throw ValidationError(ticker + ": non-positive price on " + format_date(dates[i]));
      }
      if (i > 0 && !(dates[i] > dates[i - 1])) {
        throw ValidationError(ticker + ": dates not strictly increasing at " + format_date(dates[i]));
      }
    }
  }
};

struct CsvFormat {
  /// 0 selects tab when the header contains one, comma otherwise.
  char delimiter = 0;
  std::string date_column = "date";
  std::string price_column = "price";
  std::string date_format = "%Y-%m-%d";
};

namespace detail {
inline std::vector<std::string> split_row(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, delim)) {
    const auto b = field.find_first_not_of(" \t\r\"");
    const auto e = field.find_last_not_of(" \t\r\"");
    out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}
}  // namespace detail

/// Parses a delimited price table with a header row. Rows are sorted by date;
/// duplicate dates and non-positive prices are rejected.
inline PriceSeries parse_prices(std::istream& in, const CsvFormat& fmt, std::string ticker) {
  std::string line;
  std::size_t row = 0;
  if (!std::getline(in, line)) throw ParseError(ticker + ": empty input", 0);
  ++row;
  const char delim = fmt.delimiter ? fmt.delimiter : (line.find('\t') != std::string::npos ? '\t' : ',');
  const auto header = detail::split_row(line, delim);
  const auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError(ticker + ": missing column '" + name + "'", row);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t dcol = col(fmt.date_column);
  const std::size_t pcol = col(fmt.price_column);

  std::vector<std::pair<Date, double>> obs;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = detail::split_row(line, delim);
    if (f.size() <= std::max(dcol, pcol)) {
      throw ParseError(ticker + ": row " + std::to_string(row) + " has too few fields", row);
    }
    const auto date = parse_date(f[dcol], fmt.date_format);
    if (!date) throw ParseError(ticker + ": row " + std::to_string(row) + " bad date '" + f[dcol] + "'", row);
    double price;
    try {
      std::size_t used = 0;
      price = std::stod(f[pcol], &used);
      if (used != f[pcol].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(ticker + ": row " + std::to_string(row) + " bad price '" + f[pcol] + "'", row);
    }
    if (!(price > 0.0) || !std::isfinite(price)) {
      throw ValidationError(ticker + ": row " + std::to_string(row) + " non-positive price " + f[pcol]);
    }
    obs.emplace_back(*date, price);
  }
  std::stable_sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  PriceSeries s;
  s.ticker = std::move(ticker);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (i > 0 && obs[i].first == obs[i - 1].first) {
      throw ValidationError(s.ticker + ": duplicate date " + format_date(obs[i].first));
    }
    s.dates.push_back(obs[i].first);
    s.prices.push_back(obs[i].second);
  }
  return s;
}

inline PriceSeries load_prices(const std::string& path, const CsvFormat& fmt = {}, std::string ticker = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open price file " + path, 0);
  return parse_prices(in, fmt, ticker.empty() ? path : std::move(ticker));
}

struct DateWindow {
  Date start;
  Date end;
};

struct FillCounts {
  std::size_t leading = 0;   // filled with the first observed price
  std::size_t interior = 0;  // filled with the previous day's price
};

struct AlignedPair {
  std::vector<Date> dates;
  PriceSeries futures;
  PriceSeries spot;
  FillCounts futures_fills;
  FillCounts spot_fills;
};

namespace detail {
inline PriceSeries fill_onto(const PriceSeries& s, const std::vector<Date>& calendar, FillCounts& fills) {
  PriceSeries out;
  out.ticker = s.ticker;
  out.dates = calendar;
  out.prices.reserve(calendar.size());
  std::size_t j = 0;  // first observation with date > current calendar day
  for (const Date d : calendar) {
    while (j < s.dates.size() && s.dates[j] <= d) ++j;
    if (j > 0 && s.dates[j - 1] == d) {
      out.prices.push_back(s.prices[j - 1]);
    } else if (j == 0) {
      out.prices.push_back(s.prices.front());
      ++fills.leading;
    } else {
      out.prices.push_back(s.prices[j - 1]);
      ++fills.interior;
    }
  }
  return out;
}
}  // namespace detail

/// Aligns a futures/spot pair on the union of their trading days (restricted
/// to `window` when given). Days before a series' first observation take its
/// first price; later gaps take the most recent prior price. Days present in
/// neither series are dropped.
inline AlignedPair align_pair(const PriceSeries& futures, const PriceSeries& spot,
                              const std::optional<DateWindow>& window = std::nullopt) {
  if (futures.empty() || spot.empty()) throw AlignmentError("align_pair: empty input series");
  futures.validate();
  spot.validate();
  const Date lo = std::max(futures.dates.front(), spot.dates.front());
  const Date hi = std::min(futures.dates.back(), spot.dates.back());
  if (lo > hi) throw AlignmentError("align_pair: series date ranges do not overlap");

  std::vector<Date> calendar;
  std::set_union(futures.dates.begin(), futures.dates.end(), spot.dates.begin(), spot.dates.end(),
                 std::back_inserter(calendar));
  if (window) {
    if (!(window->start < window->end)) throw AlignmentError("align_pair: window start must precede end");
    std::erase_if(calendar, [&](Date d) { return d < window->start || d > window->end; });
  }
  if (calendar.empty()) throw AlignmentError("align_pair: no trading days inside the window");

  AlignedPair out;
  out.dates = calendar;
  out.futures = detail::fill_onto(futures, calendar, out.futures_fills);
  out.spot = detail::fill_onto(spot, calendar, out.spot_fills);
  return out;
}

struct ReturnSeries {
  std::string label;
  std::vector<Date> dates;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
};

/// r_t = 100 ln(P_t / P_{t-1}); the first date is consumed.
inline ReturnSeries log_returns(const PriceSeries& s) {
  if (s.size() < 2) throw DomainError("log_returns: need at least two prices");
  ReturnSeries r;
  r.label = s.ticker;
  r.dates.assign(s.dates.begin() + 1, s.dates.end());
  r.values.resize(s.size() - 1);
  for (std::size_t t = 1; t < s.size(); ++t) {
    r.values[t - 1] = 100.0 * std::log(s.prices[t] / s.prices[t - 1]);
    if (!std::isfinite(r.values[t - 1])) throw ValidationError(s.ticker + ": non-finite return");
  }
  return r;
}

inline DescriptiveReport describe(const ReturnSeries& r, std::span<const int> lags) {
  return describe_values(r.values, lags);
}

}  // namespace tailrisk

#endif  // TAILRISK_MARKET_DATA_HPP_
