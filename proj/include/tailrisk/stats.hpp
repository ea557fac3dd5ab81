#ifndef TAILRISK_STATS_HPP_
#define TAILRISK_STATS_HPP_

// Shared statistical kernels: moments, normality and autocorrelation tests,
// the ARCH-LM test, and rank/product-moment correlations.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include "tailrisk/distributions.hpp"
#include "tailrisk/error.hpp"

namespace tailrisk {

struct TestStat {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Upper tail of the chi-squared distribution.
inline double chi2_sf(double x, double dof) {
  if (!(dof > 0.0)) throw DomainError("chi2_sf: dof must be > 0");
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * x, detail::FastPolicy());
}

struct Moments {
  double max = 0.0;
  double min = 0.0;
  double mean = 0.0;
  double std_dev = 0.0;   // sample (T-1) standard deviation
  double skewness = 0.0;  // m3 / m2^(3/2)
  double kurtosis = 0.0;  // raw, normal = 3
};

inline double mean_of(std::span<const double> x) {
  if (x.empty()) throw DegenerateInputError("mean of empty sequence");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Moments with the plain (not bias-corrected) estimators for skewness and
/// kurtosis. Skewness and kurtosis are NaN for a constant series.
inline Moments moments(std::span<const double> x) {
  if (x.empty()) throw DegenerateInputError("moments of empty sequence");
  Moments m;
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  m.min = *mn;
  m.max = *mx;
  if (m.min == m.max) {
    m.mean = m.min;
    m.skewness = m.kurtosis = std::numeric_limits<double>::quiet_NaN();
    return m;
  }
  m.mean = mean_of(x);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - m.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  const double n = static_cast<double>(x.size());
  m.std_dev = x.size() > 1 ? std::sqrt(m2 / (n - 1.0)) : 0.0;
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 > 0.0) {
    m.skewness = m3 / std::pow(m2, 1.5);
    m.kurtosis = m4 / (m2 * m2);
  } else {
    m.skewness = std::numeric_limits<double>::quiet_NaN();
    m.kurtosis = std::numeric_limits<double>::quiet_NaN();
  }
  return m;
}

inline bool is_constant(std::span<const double> x) {
  return x.empty() || std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
}

/// Jarque-Bera from skewness S and raw kurtosis K: (T/6)(S^2 + (K-3)^2/4).
inline TestStat jarque_bera(std::size_t n, double skewness, double kurtosis) {
  TestStat t;
  const double ek = kurtosis - 3.0;
  t.statistic = static_cast<double>(n) / 6.0 * (skewness * skewness + 0.25 * ek * ek);
  t.p_value = chi2_sf(t.statistic, 2.0);
  return t;
}

inline TestStat jarque_bera(std::span<const double> x) {
  if (is_constant(x)) throw DegenerateInputError("Jarque-Bera undefined for a constant series");
  const Moments m = moments(x);
  return jarque_bera(x.size(), m.skewness, m.kurtosis);
}

/// Ljung-Box Q(L) = T(T+2) sum_k rho_k^2 / (T-k), chi-squared with L dof.
inline TestStat ljung_box(std::span<const double> x, int lags) {
  if (lags < 1) throw DomainError("Ljung-Box needs lags >= 1");
  const std::size_t n = x.size();
  if (n < static_cast<std::size_t>(lags) + 1) {
    throw DomainError("Ljung-Box: series shorter than lags + 1");
  }
  if (is_constant(x)) throw DegenerateInputError("Ljung-Box undefined for a constant series");
  const double mu = mean_of(x);
  double denom = 0.0;
  for (double v : x) denom += (v - mu) * (v - mu);
  double q = 0.0;
  for (int k = 1; k <= lags; ++k) {
    double num = 0.0;
    for (std::size_t t = static_cast<std::size_t>(k); t < n; ++t) {
      num += (x[t] - mu) * (x[t - static_cast<std::size_t>(k)] - mu);
    }
    const double rho = num / denom;
    q += rho * rho / static_cast<double>(n - static_cast<std::size_t>(k));
  }
  const double T = static_cast<double>(n);
  q *= T * (T + 2.0);
  return {q, chi2_sf(q, lags)};
}

/// Engle's ARCH-LM: regress squared demeaned values on a constant and their
/// own `lags` lags; statistic is (T - lags) * R^2, chi-squared with `lags` dof.
inline TestStat arch_lm(std::span<const double> x, int lags) {
  if (lags < 1) throw DomainError("ARCH-LM needs lags >= 1");
  const std::size_t n = x.size();
  const auto L = static_cast<std::size_t>(lags);
  if (n < 2 * L + 2) throw DomainError("ARCH-LM: series too short for the requested lags");
  if (is_constant(x)) throw DegenerateInputError("ARCH-LM undefined for a constant series");
  const double mu = mean_of(x);
  std::vector<double> e2(n);
  for (std::size_t t = 0; t < n; ++t) e2[t] = (x[t] - mu) * (x[t] - mu);
  const auto rows = static_cast<Eigen::Index>(n - L);
  Eigen::MatrixXd X(rows, static_cast<Eigen::Index>(L + 1));
  Eigen::VectorXd y(rows);
  for (std::size_t t = L; t < n; ++t) {
    const auto r = static_cast<Eigen::Index>(t - L);
    y[r] = e2[t];
    X(r, 0) = 1.0;
    for (std::size_t j = 1; j <= L; ++j) X(r, static_cast<Eigen::Index>(j)) = e2[t - j];
  }
  const double ybar = y.mean();
  const double tss = (y.array() - ybar).square().sum();
  if (!(tss > 0.0)) throw DegenerateInputError("ARCH-LM: squared series is constant");
  const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
  const double rss = (y - X * beta).squaredNorm();
  const double r2 = std::clamp(1.0 - rss / tss, 0.0, 1.0);
  const double stat = static_cast<double>(rows) * r2;
  return {stat, chi2_sf(stat, lags)};
}

// ---------------------------------------------------------------------------
// Correlations

/// Average ranks (1-based) with ties sharing the mean rank.
inline std::vector<double> average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("pearson: need equal lengths >= 2");
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DegenerateInputError("correlation undefined for constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

namespace detail {
// Bottom-up merge sort counting exchanges, used by Knight's Kendall tau
// algorithm. Leaves `v` sorted.
inline std::uint64_t merge_count_swaps(std::vector<double>& v) {
  const std::size_t n = v.size();
  std::uint64_t swaps = 0;
  constexpr std::size_t kRun = 16;
  for (std::size_t lo = 0; lo < n; lo += kRun) {
    const std::size_t hi = std::min(n, lo + kRun);
    for (std::size_t i = lo + 1; i < hi; ++i) {
      const double key = v[i];
      std::size_t j = i;
      while (j > lo && v[j - 1] > key) {
        v[j] = v[j - 1];
        --j;
      }
      swaps += i - j;
      v[j] = key;
    }
  }
  std::vector<double> buf(n);
  std::vector<double>* src = &v;
  std::vector<double>* dst = &buf;
  for (std::size_t width = kRun; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(n, lo + width), hi = std::min(n, lo + 2 * width);
      const double* a = src->data();
      double* out = dst->data();
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        const bool take_right = a[j] < a[i];
        swaps += take_right ? mid - i : 0;
        out[k++] = take_right ? a[j] : a[i];
        j += take_right;
        i += !take_right;
      }
      while (i < mid) out[k++] = a[i++];
      while (j < hi) out[k++] = a[j++];
    }
    std::swap(src, dst);
  }
  if (src != &v) v.swap(*src);
  return swaps;
}

/// Order-preserving map from double to unsigned key (-0.0 and 0.0 coincide).
inline std::uint64_t order_key(double v) {
  if (v == 0.0) v = 0.0;
  const auto b = std::bit_cast<std::uint64_t>(v);
  return (b & 0x8000000000000000ULL) ? ~b : b | 0x8000000000000000ULL;
}

/// Sorts (x, y) lexicographically into xs, ys: LSD radix on x, then any run
/// of equal x is ordered by y.
inline void sort_pairs(std::span<const double> x, std::span<const double> y, std::vector<double>& xs,
                       std::vector<double>& ys) {
  const std::size_t n = x.size();
  struct Item {
    std::uint64_t key;
    double y;
  };
  std::vector<Item> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = {order_key(x[i]), y[i]};
  constexpr int kBits = 13;
  constexpr std::size_t kBuckets = std::size_t{1} << kBits;
  std::vector<std::size_t> count(kBuckets);
  for (int shift = 0; shift < 64; shift += kBits) {
    std::fill(count.begin(), count.end(), 0);
    for (const Item& it : a) ++count[(it.key >> shift) & (kBuckets - 1)];
    if (count[(a.front().key >> shift) & (kBuckets - 1)] == n) continue;
    std::size_t sum = 0;
    for (auto& c : count) {
      const std::size_t t = c;
      c = sum;
      sum += t;
    }
    for (const Item& it : a) b[count[(it.key >> shift) & (kBuckets - 1)]++] = it;
    a.swap(b);
  }
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && a[j].key == a[i].key) ++j;
    if (j - i > 1) std::sort(a.begin() + static_cast<std::ptrdiff_t>(i), a.begin() + static_cast<std::ptrdiff_t>(j),
                             [](const Item& p, const Item& q) { return p.y < q.y; });
    i = j;
  }
  xs.resize(n);
  ys.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t k = a[i].key;
    ys[i] = a[i].y;
    const std::uint64_t bits = (k & 0x8000000000000000ULL) ? k & ~0x8000000000000000ULL : ~k;
    xs[i] = std::bit_cast<double>(bits);
  }
}

inline std::uint64_t tie_pairs_sorted(const std::vector<double>& v) {
  std::uint64_t total = 0, run = 1;
  for (std::size_t i = 1; i <= v.size(); ++i) {
    if (i < v.size() && v[i] == v[i - 1]) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total;
}
}  // namespace detail

/// Kendall tau-b in O(n log n) (Knight 1966). Equals tau-a without ties.
inline double kendall_tau(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw DomainError("kendall_tau: need equal lengths >= 2");
  std::vector<double> xs, ys;
  detail::sort_pairs(x, y, xs, ys);
  const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t n1 = detail::tie_pairs_sorted(xs);
  std::uint64_t n3 = 0, run = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && xs[i] == xs[i - 1] && ys[i] == ys[i - 1]) {
      ++run;
    } else {
      n3 += run * (run - 1) / 2;
      run = 1;
    }
  }
  const std::uint64_t swaps = detail::merge_count_swaps(ys);
  const std::uint64_t n2 = detail::tie_pairs_sorted(ys);
  if (n0 == n1 || n0 == n2) throw DegenerateInputError("Kendall tau undefined for constant input");
  const double num = static_cast<double>(n0) - static_cast<double>(n1) - static_cast<double>(n2) +
                     static_cast<double>(n3) - 2.0 * static_cast<double>(swaps);
  const double den = std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
  return std::clamp(num / den, -1.0, 1.0);
}

struct Correlation {
  double coefficient = 0.0;
  double p_value = 1.0;
};

struct CorrelationReport {
  Correlation pearson;
  Correlation kendall_tau;
  Correlation spearman;
};

namespace detail {
inline double t_two_sided_p(double r, std::size_t n) {
  if (std::abs(r) >= 1.0) return 0.0;
  if (n <= 2) return 1.0;
  const double dof = static_cast<double>(n - 2);
  const double t = r * std::sqrt(dof / (1.0 - r * r));
  return std::clamp(2.0 * student_t_cdf(-std::abs(t), dof), 0.0, 1.0);
}
}  // namespace detail

/// Pearson, Kendall tau-b and Spearman with asymptotic two-sided p-values.
inline CorrelationReport correlation_suite(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("correlation_suite: lengths differ");
  if (x.size() < 3) throw DomainError("correlation_suite: need at least 3 observations");
  if (is_constant(x) || is_constant(y)) {
    throw DegenerateInputError("correlation undefined for constant input");
  }
  const std::size_t n = x.size();
  CorrelationReport rep;
  rep.pearson.coefficient = pearson(x, y);
  rep.pearson.p_value = detail::t_two_sided_p(rep.pearson.coefficient, n);
  rep.spearman.coefficient = spearman(x, y);
  rep.spearman.p_value = detail::t_two_sided_p(rep.spearman.coefficient, n);
  rep.kendall_tau.coefficient = kendall_tau(x, y);
  const double nn = static_cast<double>(n);
  const double z = 3.0 * rep.kendall_tau.coefficient * std::sqrt(nn * (nn - 1.0)) /
                   std::sqrt(2.0 * (2.0 * nn + 5.0));
  rep.kendall_tau.p_value = std::clamp(2.0 * normal_cdf(-std::abs(z)), 0.0, 1.0);
  return rep;
}

// ---------------------------------------------------------------------------
// Descriptive report shared by raw returns and model residuals.

struct DescriptiveReport {
  Moments moments;
  TestStat jarque_bera;
  std::map<int, TestStat> ljung_box_q;
  std::map<int, TestStat> ljung_box_q2;
  std::map<int, TestStat> arch_lm;
};

/// Moments, Jarque-Bera, Ljung-Box on levels and squares, and ARCH-LM at the
/// requested lags. Squares are taken about the sample mean.
inline DescriptiveReport describe_values(std::span<const double> x, std::span<const int> lags) {
  if (is_constant(x)) throw DegenerateInputError("describe: series is constant");
  int max_lag = 0;
  for (int l : lags) {
    if (l < 1) throw DomainError("describe: lags must be >= 1");
    max_lag = std::max(max_lag, l);
  }
  if (x.size() < static_cast<std::size_t>(max_lag) + 1) {
    throw DomainError("describe: series length must be at least max(lags) + 1");
  }
  DescriptiveReport rep;
  rep.moments = moments(x);
  rep.jarque_bera = jarque_bera(x.size(), rep.moments.skewness, rep.moments.kurtosis);
  std::vector<double> sq(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - rep.moments.mean;
    sq[i] = d * d;
  }
  for (int l : lags) {
    rep.ljung_box_q[l] = ljung_box(x, l);
    rep.ljung_box_q2[l] = ljung_box(sq, l);
    rep.arch_lm[l] = arch_lm(x, l);
  }
  return rep;
}

}  // namespace tailrisk

#endif  // TAILRISK_STATS_HPP_
