#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "fairdiv/rational.hpp"

namespace fairdiv {

struct StatsError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ContingencyTable {
  std::vector<std::vector<int64_t>> counts;  // rows x cols

  static ContingencyTable two_by_two(int64_t a, int64_t b, int64_t c, int64_t d) {
    return ContingencyTable{{{a, b}, {c, d}}};
  }
};

struct FisherResult {
  Rational exact;
  double p = 1.0;
};

inline Integer binomial(unsigned long n, unsigned long k) {
  Integer r;
  mpz_bin_uiui(r.get_mpz_t(), n, k);
  return r;
}

// Two-sided: sum of probabilities of all same-margin tables no more likely
// than the observed one. Comparison is exact.
inline FisherResult fisher_exact_2x2(const ContingencyTable& t) {
  if (t.counts.size() != 2 || t.counts[0].size() != 2 || t.counts[1].size() != 2)
    throw StatsError("fisher_exact_2x2 needs a 2x2 table");
  for (const auto& row : t.counts)
    for (auto x : row)
      if (x < 0) throw StatsError("negative count");
  const int64_t a = t.counts[0][0], b = t.counts[0][1], c = t.counts[1][0], d = t.counts[1][1];
  const int64_t r1 = a + b, r2 = c + d, c1 = a + c, c2 = b + d, n = r1 + r2;
  if (r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0) throw StatsError("degenerate margins");

  // weight(x) = C(r1,x) C(r2,c1-x); the common denominator is C(n,c1)
  auto weight = [&](int64_t x) { return Integer(binomial(r1, x) * binomial(r2, c1 - x)); };
  const Integer observed = weight(a);
  Integer tail = 0;
  for (int64_t x = std::max<int64_t>(0, c1 - r2); x <= std::min(r1, c1); ++x) {
    Integer w = weight(x);
    if (w <= observed) tail += w;
  }
  FisherResult r;
  r.exact = Rational(tail, binomial(n, c1));
  r.exact.canonicalize();
  r.p = r.exact.get_d();
  return r;
}

inline FisherResult fisher_exact_2x2(int64_t a, int64_t b, int64_t c, int64_t d) {
  return fisher_exact_2x2(ContingencyTable::two_by_two(a, b, c, d));
}

struct DistributionTest {
  double p = 1.0;
  int64_t at_most_observed = 0;
  int64_t iterations = 0;
  int categories = 0;
};

// Monte-Carlo Fisher-Freeman-Halton for a 2 x k table (two samples over the
// same categories). Fixed shard count keeps results independent of thread count.
inline DistributionTest distribution_test(const std::vector<int64_t>& counts_a, const std::vector<int64_t>& counts_b,
                                          int64_t iterations, uint64_t seed) {
  if (counts_a.size() != counts_b.size()) throw StatsError("count vectors differ in length");
  if (iterations < 1) throw StatsError("iterations must be positive");
  std::vector<int64_t> a, b;
  for (size_t j = 0; j < counts_a.size(); ++j) {
    if (counts_a[j] < 0 || counts_b[j] < 0) throw StatsError("negative count");
    if (counts_a[j] + counts_b[j] == 0) continue;
    a.push_back(counts_a[j]);
    b.push_back(counts_b[j]);
  }
  DistributionTest out;
  out.iterations = iterations;
  out.categories = static_cast<int>(a.size());
  const int64_t na = std::accumulate(a.begin(), a.end(), int64_t{0});
  const int64_t nb = std::accumulate(b.begin(), b.end(), int64_t{0});
  if (a.size() < 2 || na == 0 || nb == 0) {
    out.at_most_observed = iterations;
    out.p = 1.0;
    return out;
  }
  const int64_t n = na + nb;
  const int k = static_cast<int>(a.size());
  std::vector<double> logfact(n + 1, 0.0);
  for (int64_t i = 1; i <= n; ++i) logfact[i] = logfact[i - 1] + std::log(static_cast<double>(i));
  std::vector<int64_t> col(k);
  for (int j = 0; j < k; ++j) col[j] = a[j] + b[j];

  auto score = [&](const std::vector<int64_t>& x) {
    double s = 0;
    for (int j = 0; j < k; ++j) s -= logfact[x[j]] + logfact[col[j] - x[j]];
    return s;
  };
  const double observed = score(a);
  const double tol = 1e-7 * std::max(1.0, std::fabs(observed));

  // draw the smaller sample from the urn
  const bool draw_a = na <= nb;
  const int64_t draws = draw_a ? na : nb;
  std::vector<int> urn;
  urn.reserve(n);
  for (int j = 0; j < k; ++j) urn.insert(urn.end(), static_cast<size_t>(col[j]), j);

  constexpr int kShards = 8;
  std::vector<int64_t> hits(kShards, 0);
  auto run_shard = [&](int s) {
    int64_t todo = iterations / kShards + (s < iterations % kShards ? 1 : 0);
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<uint64_t>(s) + 1);
    std::vector<int> local = urn;
    std::vector<int64_t> x(k);
    int64_t h = 0;
    for (int64_t it = 0; it < todo; ++it) {
      std::fill(x.begin(), x.end(), 0);
      for (int64_t i = 0; i < draws; ++i) {
        std::uniform_int_distribution<int64_t> pick(i, n - 1);
        std::swap(local[i], local[pick(rng)]);
        ++x[local[i]];
      }
      if (!draw_a)
        for (int j = 0; j < k; ++j) x[j] = col[j] - x[j];
      if (score(x) <= observed + tol) ++h;
    }
    hits[s] = h;
  };
  std::vector<std::thread> pool;
  const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (iterations >= 10000 && hw > 1) {
    for (int s = 0; s < kShards; ++s) pool.emplace_back(run_shard, s);
    for (auto& t : pool) t.join();
  } else {
    for (int s = 0; s < kShards; ++s) run_shard(s);
  }
  out.at_most_observed = std::accumulate(hits.begin(), hits.end(), int64_t{0});
  out.p = static_cast<double>(out.at_most_observed + 1) / static_cast<double>(iterations + 1);
  return out;
}

struct Interval {
  double lo = 0;
  double hi = 0;
  double center = 0;
  double half_width() const { return (hi - lo) / 2; }
};

inline double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

inline Interval wilson_interval(int64_t successes, int64_t n, double level = 0.95) {
  if (n <= 0) throw StatsError("n must be positive");
  if (successes < 0 || successes > n) throw StatsError("successes out of range");
  if (!(level > 0 && level < 1)) throw StatsError("level must lie in (0,1)");
  const double z = normal_quantile(1 - (1 - level) / 2);
  const double nn = static_cast<double>(n);
  const double phat = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1 + z2 / nn;
  const double center = (phat + z2 / (2 * nn)) / denom;
  const double half = z / denom * std::sqrt(phat * (1 - phat) / nn + z2 / (4 * nn * nn));
  Interval r;
  r.center = center;
  r.lo = std::max(0.0, center - half);
  r.hi = std::min(1.0, center + half);
  if (successes == 0) r.lo = 0;
  if (successes == n) r.hi = 1;
  return r;
}

// mean +- t_{q,k-1} sd / sqrt(k)
inline Interval t_over_groups(const std::vector<double>& values, double level = 0.95) {
  if (values.size() < 2) throw StatsError("t interval needs at least two groups");
  if (!(level > 0 && level < 1)) throw StatsError("level must lie in (0,1)");
  const double k = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / k;
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (k - 1));
  boost::math::students_t_distribution<double> dist(k - 1);
  const double t = boost::math::quantile(dist, 1 - (1 - level) / 2);
  const double half = t * sd / std::sqrt(k);
  return Interval{mean - half, mean + half, mean};
}

enum class CiMethod { wilson, t_over_groups };

}  // namespace fairdiv
