#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace lazykdp
{
struct SignificanceResult
{
  /// U of the first sample: pairs with a > b, ties counted as 1/2.
  double u_statistic = 0.0;
  /// Two-sided p-value.
  double p_value = 1.0;
  std::string marker = "ns";
};

/// ns for p > 0.05, then *, **, *** and **** at 0.05, 0.01, 0.001, 0.0001.
inline std::string SignificanceMarker(const double p)
{
  if (p <= 0.0001) return "****";
  if (p <= 0.001) return "***";
  if (p <= 0.01) return "**";
  if (p <= 0.05) return "*";
  return "ns";
}

/// Midranks (1-based) of the pooled sample; tied values share their average.
inline std::vector<double> Midranks(const std::vector<double>& pooled)
{
  const size_t n = pooled.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return pooled[a] < pooled[b]; });
  std::vector<double> ranks(n);
  for (size_t i = 0; i < n;)
  {
    size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]])
    {
      ++j;
    }
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k)
    {
      ranks[order[k]] = rank;
    }
    i = j + 1;
  }
  return ranks;
}

namespace detail
{
inline void RequireSamples(const std::vector<double>& a,
                           const std::vector<double>& b)
{
  if (a.empty() || b.empty())
  {
    throw std::invalid_argument("Mann-Whitney U: samples must be non-empty");
  }
}

inline double UFromRanks(const std::vector<double>& ranks, const size_t n1)
{
  double rank_sum = 0.0;
  for (size_t i = 0; i < n1; ++i)
  {
    rank_sum += ranks[i];
  }
  return rank_sum - 0.5 * static_cast<double>(n1 * (n1 + 1));
}

inline double StandardNormalCdf(const double z)
{
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}
}  // namespace detail

inline double MannWhitneyU(const std::vector<double>& a,
                           const std::vector<double>& b)
{
  detail::RequireSamples(a, b);
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  return detail::UFromRanks(Midranks(pooled), a.size());
}

/// Exact two-sided p-value: enumerates every assignment of the pooled midranks
/// to the first group (conditional on the observed ties) and counts those at
/// least as far from n1*n2/2 as the observed U.
inline SignificanceResult MannWhitneyExact(const std::vector<double>& a,
                                           const std::vector<double>& b)
{
  detail::RequireSamples(a, b);
  const size_t n1 = a.size();
  const size_t n = a.size() + b.size();
  if (n > 30)
  {
    throw std::invalid_argument("MannWhitneyExact: pooled size too large");
  }
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::vector<double> ranks = Midranks(pooled);
  const double u_obs = detail::UFromRanks(ranks, n1);
  const double mean = 0.5 * static_cast<double>(n1 * (n - n1));
  const double observed_gap = std::abs(u_obs - mean);
  const double offset = 0.5 * static_cast<double>(n1 * (n1 + 1));

  uint64_t total = 0;
  uint64_t extreme = 0;
  // Gosper's hack over n1-subsets of n positions.
  uint64_t subset = (uint64_t{1} << n1) - 1;
  const uint64_t limit = uint64_t{1} << n;
  while (subset < limit)
  {
    double rank_sum = 0.0;
    for (size_t i = 0; i < n; ++i)
    {
      if (subset & (uint64_t{1} << i))
      {
        rank_sum += ranks[i];
      }
    }
    ++total;
    if (std::abs(rank_sum - offset - mean) >= observed_gap - 1e-9)
    {
      ++extreme;
    }
    const uint64_t low = subset & (~subset + 1);
    const uint64_t ripple = subset + low;
    subset = ripple | (((subset ^ ripple) >> 2) / low);
  }
  SignificanceResult r;
  r.u_statistic = u_obs;
  r.p_value = std::min(1.0, static_cast<double>(extreme) / static_cast<double>(total));
  r.marker = SignificanceMarker(r.p_value);
  return r;
}

/// Normal approximation with tie-corrected variance, a 0.5 continuity
/// correction and Edgeworth skew and kurtosis terms.
inline SignificanceResult MannWhitneyNormal(const std::vector<double>& a,
                                            const std::vector<double>& b)
{
  detail::RequireSamples(a, b);
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  const double n = n1 + n2;
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::vector<double> ranks = Midranks(pooled);
  const double u = detail::UFromRanks(ranks, a.size());

  std::sort(pooled.begin(), pooled.end());
  double tie_term = 0.0;
  for (size_t i = 0; i < pooled.size();)
  {
    size_t j = i;
    while (j < pooled.size() && pooled[j] == pooled[i])
    {
      ++j;
    }
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double variance =
      n1 * n2 / 12.0 * ((n + 1.0) - (n > 1.0 ? tie_term / (n * (n - 1.0)) : 0.0));
  SignificanceResult r;
  r.u_statistic = u;
  if (variance <= 0.0)
  {
    r.p_value = 1.0;
  }
  else
  {
    const double sd = std::sqrt(variance);
    const double gap = std::max(0.0, std::abs(u - 0.5 * n1 * n2) - 0.5);
    const double z = gap / sd;
    // Edgeworth terms from the exact third and fourth cumulants of a rank sum
    // drawn without replacement from the pooled midranks.
    double skew = 0.0, kurt = 0.0;
    if (n >= 4.0)
    {
      const double mean_rank = (n + 1.0) / 2.0;
      double p2 = 0.0, p3 = 0.0, p4 = 0.0;
      for (const double rank : ranks)
      {
        const double y = rank - mean_rank;
        p2 += y * y;
        p3 += y * y * y;
        p4 += y * y * y * y;
      }
      const double f1 = n1 / n;
      const double f2 = f1 * (n1 - 1.0) / (n - 1.0);
      const double f3 = f2 * (n1 - 2.0) / (n - 2.0);
      const double f4 = f3 * (n1 - 3.0) / (n - 3.0);
      const double m3 = (f1 - 3.0 * f2 + 2.0 * f3) * p3;
      const double m4 = (f1 - 7.0 * f2 + 12.0 * f3 - 6.0 * f4) * p4 +
                        (3.0 * f2 - 6.0 * f3 + 3.0 * f4) * p2 * p2;
      skew = m3 / (variance * sd);
      kurt = (m4 - 3.0 * variance * variance) / (variance * variance);
    }
    // Both tails together; the even skew term cancels. Far out the expansion
    // can turn negative, and the plain normal tail is used instead.
    const double plain = 2.0 * detail::StandardNormalCdf(-z);
    const double density = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    const double z3 = z * z * z;
    const double corrected =
        plain + 2.0 * density *
                    (kurt / 24.0 * (z3 - 3.0 * z) +
                     skew * skew / 72.0 * (z3 * z * z - 10.0 * z3 + 15.0 * z));
    r.p_value = std::min(1.0, corrected > 0.0 ? corrected : plain);
  }
  r.marker = SignificanceMarker(r.p_value);
  return r;
}

/// Two-sided Mann-Whitney U test: exact when the pooled size is at most 16,
/// normal approximation otherwise.
inline SignificanceResult MannWhitney(const std::vector<double>& a,
                                      const std::vector<double>& b)
{
  detail::RequireSamples(a, b);
  if (a.size() + b.size() <= 16)
  {
    return MannWhitneyExact(a, b);
  }
  return MannWhitneyNormal(a, b);
}

inline double Median(std::vector<double> values)
{
  if (values.empty())
  {
    throw std::invalid_argument("Median: empty sample");
  }
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

inline double Mean(const std::vector<double>& values)
{
  if (values.empty())
  {
    throw std::invalid_argument("Mean: empty sample");
  }
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}
}  // namespace lazykdp
