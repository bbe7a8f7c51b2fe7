#pragma once

// Test-side reference implementations. Nothing here calls the engine; every
// check is a direct enumeration over allocations and payment grids.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/multiprecision/cpp_dec_float.hpp>

#include "fairdiv/model.hpp"

namespace oracle {

using fairdiv::Instance;
using fairdiv::Outcome;
using fairdiv::Rational;

// recipients[g] in {-1, 0..n-1}
inline void for_each_recipients(int n, int m, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> r(m, -1);
  std::function<void(int)> rec = [&](int g) {
    if (g == m) {
      fn(r);
      return;
    }
    for (int a = -1; a < n; ++a) {
      r[g] = a;
      rec(g + 1);
    }
  };
  rec(0);
}

// Every payment vector p with p_i in (1/den)Z, p_i >= 0, sum <= budget.
inline void for_each_grid_payment(int n, const Rational& budget, long den,
                                  const std::function<void(const std::vector<Rational>&)>& fn) {
  Rational scaled = budget * den;
  long units = static_cast<long>(scaled.get_d() + 1e-9);
  std::vector<Rational> p(n, Rational(0));
  std::function<void(int, long)> rec = [&](int i, long left) {
    if (i == n) {
      fn(p);
      return;
    }
    for (long x = 0; x <= left; ++x) {
      p[i] = Rational(x, den);
      p[i].canonicalize();
      rec(i + 1, left - x);
    }
  };
  rec(0, units);
}

inline std::vector<Rational> goods_values(const Instance& in, const std::vector<int>& recipients) {
  std::vector<Rational> w(in.n(), Rational(0));
  for (int g = 0; g < in.m(); ++g)
    if (recipients[g] >= 0) w[recipients[g]] += in.valuations[recipients[g]][g];
  return w;
}

inline std::vector<int> recipients_of(const Outcome& o) {
  std::vector<int> r;
  for (const auto& x : o.assignment) r.push_back(x.discarded() ? -1 : x.index());
  return r;
}

inline std::vector<Rational> utilities(const Instance& in, const Outcome& o) {
  auto w = goods_values(in, recipients_of(o));
  for (int i = 0; i < in.n(); ++i) w[i] += o.payments[i];
  return w;
}

inline bool dominates(const std::vector<Rational>& v, const std::vector<Rational>& u) {
  bool strict = false;
  for (size_t i = 0; i < u.size(); ++i) {
    if (v[i] < u[i]) return false;
    if (v[i] > u[i]) strict = true;
  }
  return strict;
}

// Exhaustive dominance search over every goods allocation and every grid payment.
inline bool dominated_on_grid(const Instance& in, const std::vector<Rational>& u, long den) {
  bool found = false;
  for_each_recipients(in.n(), in.m(), [&](const std::vector<int>& r) {
    if (found) return;
    auto w = goods_values(in, r);
    if (in.money == 0) {
      found = dominates(w, u);
      return;
    }
    for_each_grid_payment(in.n(), in.money, den, [&](const std::vector<Rational>& p) {
      if (found) return;
      std::vector<Rational> v = w;
      for (int i = 0; i < in.n(); ++i) v[i] += p[i];
      if (dominates(v, u)) found = true;
    });
  });
  return found;
}

inline Rational ceil_to_grid(const Rational& x, long den) {
  Rational s = x * den;
  fairdiv::Integer q;
  mpz_cdiv_q(q.get_mpz_t(), s.get_num().get_mpz_t(), s.get_den().get_mpz_t());
  Rational r(q, den);
  r.canonicalize();
  return r;
}

// For each allocation, the cheapest grid payment that lifts every agent to u;
// dominated iff it fits the budget and leaves slack or strict improvement.
inline bool dominated_by_need_sum(const Instance& in, const std::vector<Rational>& u, long den) {
  bool found = false;
  for_each_recipients(in.n(), in.m(), [&](const std::vector<int>& r) {
    if (found) return;
    auto w = goods_values(in, r);
    Rational need = 0;
    bool strict = false;
    for (int i = 0; i < in.n(); ++i) {
      Rational p = w[i] < u[i] ? ceil_to_grid(u[i] - w[i], den) : Rational(0);
      need += p;
      if (w[i] + p > u[i]) strict = true;
    }
    if (need < in.money || (need <= in.money && strict)) found = true;
  });
  return found;
}

inline bool envies(const Instance& in, const Outcome& o, int i, int j) {
  auto r = recipients_of(o);
  Rational own = o.payments[i], other = o.payments[j];
  for (int g = 0; g < in.m(); ++g) {
    if (r[g] == i) own += in.valuations[i][g];
    if (r[g] == j) other += in.valuations[i][g];
  }
  return other > own;
}

inline bool envy_free(const Instance& in, const Outcome& o) {
  for (int i = 0; i < in.n(); ++i)
    for (int j = 0; j < in.n(); ++j)
      if (i != j && envies(in, o, i, j)) return false;
  return true;
}

// Largest min-utility over every allocation and grid payment.
inline Rational maximin_on_grid(const Instance& in, long den) {
  Rational best = -1;
  for_each_recipients(in.n(), in.m(), [&](const std::vector<int>& r) {
    auto w = goods_values(in, r);
    for_each_grid_payment(in.n(), in.money, den, [&](const std::vector<Rational>& p) {
      Rational lo = w[0] + p[0];
      for (int i = 1; i < in.n(); ++i) lo = std::min(lo, Rational(w[i] + p[i]));
      best = std::max(best, lo);
    });
  });
  return best;
}

inline bool ef_split_exists(const Instance& in, const std::vector<int>& recipients, long den) {
  bool found = false;
  for_each_grid_payment(in.n(), in.money, den, [&](const std::vector<Rational>& p) {
    if (found) return;
    Outcome o{fairdiv::goods_allocation(recipients), p};
    if (envy_free(in, o)) found = true;
  });
  return found;
}

// Wilson score interval evaluated in 50-digit decimal arithmetic.
struct PreciseInterval {
  double lo;
  double hi;
};

inline PreciseInterval wilson_precise(long successes, long n, double level) {
  using boost::multiprecision::cpp_dec_float_50;
  using F = cpp_dec_float_50;
  boost::math::normal_distribution<F> nd;
  F alpha = (F(1) - F(level)) / 2;
  F z = boost::math::quantile(boost::math::complement(nd, alpha));
  F nn = n;
  F ph = F(successes) / nn;
  F z2 = z * z;
  F denom = 1 + z2 / nn;
  F center = (ph + z2 / (2 * nn)) / denom;
  F half = z / denom * boost::multiprecision::sqrt(ph * (1 - ph) / nn + z2 / (4 * nn * nn));
  return {static_cast<double>(center - half), static_cast<double>(center + half)};
}

// Two-sided Fisher p for a 2x2 table straight from the hypergeometric pmf.
inline Rational fisher_two_sided(long a, long b, long c, long d) {
  auto choose = [](long n, long k) {
    fairdiv::Integer r = 1;
    for (long i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  };
  long r1 = a + b, r2 = c + d, c1 = a + c;
  auto w = [&](long x) { return fairdiv::Integer(choose(r1, x) * choose(r2, c1 - x)); };
  fairdiv::Integer obs = w(a), tail = 0;
  for (long x = std::max(0L, c1 - r2); x <= std::min(r1, c1); ++x)
    if (w(x) <= obs) tail += w(x);
  Rational p(tail, choose(r1 + r2, c1));
  p.canonicalize();
  return p;
}

}  // namespace oracle
