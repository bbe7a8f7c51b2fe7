#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <numeric>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fairdiv/model.hpp"

namespace fairdiv {

// ---------------------------------------------------------------------------
// Enumeration

inline uint64_t allocation_count(const Instance& in) {
  uint64_t c = 1;
  for (int g = 0; g < in.m(); ++g) {
    if (c > std::numeric_limits<uint64_t>::max() / static_cast<uint64_t>(in.n() + 1))
      throw ValidationError("instance too large to enumerate");
    c *= static_cast<uint64_t>(in.n() + 1);
  }
  return c;
}

// Mixed-radix decode: good 0 is the most significant digit; digit i < n is
// agent i, digit n is Discard.
inline GoodsAllocation allocation_at(const Instance& in, uint64_t index) {
  GoodsAllocation a(in.m());
  const uint64_t radix = static_cast<uint64_t>(in.n() + 1);
  for (int g = in.m() - 1; g >= 0; --g) {
    int digit = static_cast<int>(index % radix);
    index /= radix;
    a[g] = digit == in.n() ? Recipient::discard() : Recipient::agent(digit);
  }
  return a;
}

inline uint64_t allocation_index(const Instance& in, const GoodsAllocation& a) {
  uint64_t idx = 0;
  const uint64_t radix = static_cast<uint64_t>(in.n() + 1);
  for (int g = 0; g < in.m(); ++g) idx = idx * radix + (a[g].discarded() ? in.n() : a[g].index());
  return idx;
}

template <class F>
void for_each_goods_allocation(const Instance& in, F&& fn) {
  const uint64_t total = allocation_count(in);
  GoodsAllocation a(in.m(), Recipient::agent(0));
  if (in.m() == 0) {
    fn(a);
    return;
  }
  std::vector<int> digit(in.m(), 0);
  for (uint64_t k = 0; k < total; ++k) {
    fn(static_cast<const GoodsAllocation&>(a));
    for (int g = in.m() - 1; g >= 0; --g) {
      if (++digit[g] <= in.n()) {
        a[g] = digit[g] == in.n() ? Recipient::discard() : Recipient::agent(digit[g]);
        break;
      }
      digit[g] = 0;
      a[g] = Recipient::agent(0);
    }
  }
}

inline std::vector<GoodsAllocation> enumerate_goods_allocations(const Instance& in) {
  std::vector<GoodsAllocation> out;
  out.reserve(allocation_count(in));
  for_each_goods_allocation(in, [&](const GoodsAllocation& a) { out.push_back(a); });
  return out;
}

// ---------------------------------------------------------------------------
// Water-filling

struct WaterFill {
  std::vector<Rational> payments;
  Rational value;  // disparity for the min-disparity fill, water level for maximin
};

// Level L with sum(max(0, L - w_i)) = budget.
inline Rational water_level(const std::vector<Rational>& w, const Rational& budget) {
  if (w.empty()) throw ValidationError("water-fill over an empty vector");
  if (budget < 0) throw ValidationError("negative budget");
  std::vector<Rational> s = w;
  std::sort(s.begin(), s.end());
  Rational prefix = 0;
  const size_t n = s.size();
  for (size_t k = 1; k <= n; ++k) {
    prefix += s[k - 1];
    Rational level = (budget + prefix) / Rational(static_cast<long>(k));
    if (k == n || level <= s[k]) return level;
  }
  return s.back();
}

inline WaterFill water_fill_maximin(const std::vector<Rational>& w, const Rational& budget) {
  Rational level = water_level(w, budget);
  WaterFill r;
  r.payments.reserve(w.size());
  for (const auto& x : w) r.payments.push_back(x < level ? Rational(level - x) : Rational(0));
  r.value = level;
  return r;
}

inline WaterFill water_fill_min_disparity(const std::vector<Rational>& w, const Rational& budget) {
  if (w.empty()) throw ValidationError("water-fill over an empty vector");
  if (budget < 0) throw ValidationError("negative budget");
  const Rational top = *std::max_element(w.begin(), w.end());
  Rational deficit = 0;
  for (const auto& x : w) deficit += top - x;
  WaterFill r;
  if (deficit <= budget) {
    Rational share = (budget - deficit) / Rational(static_cast<long>(w.size()));
    for (const auto& x : w) r.payments.push_back(top - x + share);
    r.value = 0;
    return r;
  }
  auto fill = water_fill_maximin(w, budget);
  r.payments = std::move(fill.payments);
  r.value = top - fill.value;
  return r;
}

// ---------------------------------------------------------------------------
// Summary and cached per-instance tables

struct InstanceSummary {
  Rational min_disparity;
  Rational maximin_value;
  Rational max_welfare;
  Rational goods_welfare_max;
};

struct InstanceTables {
  InstanceSummary summary;
  uint64_t count = 0;
  // goods_value[k * n + i] = v_i(A_i) for allocation index k
  std::vector<Rational> goods_value;
  // Same table scaled by `scale` when everything fits comfortably in int64.
  std::vector<int64_t> scaled_value;
  Integer scale = 1;
  bool has_scaled = false;
};

inline std::string instance_fingerprint(const Instance& in) {
  std::string s = in.id;
  s += '|';
  s += std::to_string(in.n()) + 'x' + std::to_string(in.m()) + '|' + to_string(in.money) + '|';
  for (const auto& row : in.valuations)
    for (const auto& v : row) {
      s += to_string(v);
      s += ',';
    }
  return s;
}

inline std::shared_ptr<const InstanceTables> compute_tables(const Instance& in) {
  validate_instance(in);
  auto t = std::make_shared<InstanceTables>();
  const int n = in.n();
  t->count = allocation_count(in);
  t->goods_value.reserve(t->count * n);

  Rational min_disp = 0;
  bool have_disp = false;
  Rational maximin = 0;
  bool have_maximin = false;

  for_each_goods_allocation(in, [&](const GoodsAllocation& a) {
    auto w = goods_values(in, a);
    bool all_discarded = std::all_of(a.begin(), a.end(), [](const Recipient& r) { return r.discarded(); });
    // the empty outcome (nothing assigned, no money) is not a candidate for EQ
    if (!(all_discarded && in.money == 0)) {
      auto md = water_fill_min_disparity(w, in.money);
      if (!have_disp || md.value < min_disp) {
        min_disp = md.value;
        have_disp = true;
      }
    }
    Rational level = water_level(w, in.money);
    if (!have_maximin || level > maximin) {
      maximin = level;
      have_maximin = true;
    }
    for (auto& x : w) t->goods_value.push_back(std::move(x));
  });

  Rational gw = 0;
  for (int g = 0; g < in.m(); ++g) {
    Rational best = 0;
    for (int i = 0; i < n; ++i) best = std::max(best, in.valuations[i][g]);
    gw += best;
  }
  t->summary.min_disparity = have_disp ? min_disp : Rational(0);
  t->summary.maximin_value = maximin;
  t->summary.goods_welfare_max = gw;
  t->summary.max_welfare = gw + in.money;

  // integer shadow table for the dominance scan
  Integer den = 1;
  for (const auto& row : in.valuations)
    for (const auto& v : row) mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), v.get_den().get_mpz_t());
  mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), in.money.get_den().get_mpz_t());
  Rational bound = gw + in.money;
  Rational scaled_bound = bound * Rational(den);
  if (den < (Integer(1) << 20) && scaled_bound < Rational(Integer(1) << 40)) {
    t->scale = den;
    t->has_scaled = true;
    t->scaled_value.reserve(t->goods_value.size());
    for (const auto& v : t->goods_value) {
      Rational s = v * Rational(den);
      t->scaled_value.push_back(s.get_num().get_si());
    }
  }
  return t;
}

class SummaryCache {
 public:
  std::shared_ptr<const InstanceTables> get(const Instance& in) {
    std::string key = instance_fingerprint(in);
    {
      std::shared_lock lock(mu_);
      auto it = map_.find(key);
      if (it != map_.end()) return it->second;
    }
    auto computed = compute_tables(in);
    std::unique_lock lock(mu_);
    auto [it, inserted] = map_.emplace(std::move(key), computed);
    return it->second;
  }

  size_t size() const {
    std::shared_lock lock(mu_);
    return map_.size();
  }

  void clear() {
    std::unique_lock lock(mu_);
    map_.clear();
  }

 private:
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, std::shared_ptr<const InstanceTables>> map_;
};

inline SummaryCache& default_cache() {
  static SummaryCache cache;
  return cache;
}

inline std::shared_ptr<const InstanceTables> tables(const Instance& in) { return default_cache().get(in); }

inline InstanceSummary summarize(const Instance& in) { return tables(in)->summary; }

// ---------------------------------------------------------------------------
// Axiom checks

struct Envy {
  int envier;
  int envied;
  Rational own;
  Rational other;
};

inline std::vector<Envy> envy_pairs(const Instance& in, const Outcome& o) {
  validate_outcome(in, o);
  std::vector<Envy> out;
  const int n = in.n();
  // cross[i][j] = v_i(A_j)
  std::vector<Rational> cross(static_cast<size_t>(n) * n, Rational(0));
  for (int g = 0; g < in.m(); ++g) {
    if (o.assignment[g].discarded()) continue;
    int holder = o.assignment[g].index();
    for (int i = 0; i < n; ++i) cross[i * n + holder] += in.valuations[i][g];
  }
  for (int i = 0; i < n; ++i) {
    Rational own = cross[i * n + i] + o.payments[i];
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      Rational other = cross[i * n + j] + o.payments[j];
      if (other > own) out.push_back({i, j, own, other});
    }
  }
  return out;
}

inline bool is_envy_free(const Instance& in, const Outcome& o) { return envy_pairs(in, o).empty(); }

namespace detail {

inline bool po_scan_exact(const Instance& in, const InstanceTables& t, const std::vector<Rational>& u) {
  const int n = in.n();
  for (uint64_t k = 0; k < t.count; ++k) {
    const Rational* w = &t.goods_value[k * n];
    Rational need = 0;
    bool strict = false;
    bool over = false;
    for (int i = 0; i < n; ++i) {
      if (w[i] < u[i]) {
        need += u[i] - w[i];
        if (need > in.money) {
          over = true;
          break;
        }
      } else if (w[i] > u[i]) {
        strict = true;
      }
    }
    if (over) continue;
    if (need < in.money || strict) return false;
  }
  return true;
}

inline bool po_scan_scaled(const InstanceTables& t, int n, const std::vector<int64_t>& u, int64_t money,
                           int64_t factor) {
  for (uint64_t k = 0; k < t.count; ++k) {
    const int64_t* w = &t.scaled_value[k * n];
    int64_t need = 0;
    bool strict = false;
    bool over = false;
    for (int i = 0; i < n; ++i) {
      int64_t wi = w[i] * factor;
      if (wi < u[i]) {
        need += u[i] - wi;
        if (need > money) {
          over = true;
          break;
        }
      } else if (wi > u[i]) {
        strict = true;
      }
    }
    if (over) continue;
    if (need < money || strict) return false;
  }
  return true;
}

}  // namespace detail

// A' dominates iff its money need S = sum max(0, u_i - v_i(A'_i)) satisfies
// S < P, or S <= P with some agent strictly above u_i on goods alone.
inline bool is_pareto_optimal(const Instance& in, const Outcome& o) {
  auto u = payoff(in, o).utilities;
  auto t = tables(in);
  const int n = in.n();
  if (t->has_scaled) {
    Integer s = t->scale;
    for (const auto& x : u) mpz_lcm(s.get_mpz_t(), s.get_mpz_t(), x.get_den().get_mpz_t());
    Integer factor = s / t->scale;
    Rational top = t->summary.max_welfare * Rational(s);
    if (factor < (Integer(1) << 16) && top < Rational(Integer(1) << 56)) {
      std::vector<int64_t> us;
      us.reserve(n);
      for (const auto& x : u) {
        Rational y = x * Rational(s);
        us.push_back(y.get_num().get_si());
      }
      Rational m = in.money * Rational(s);
      return detail::po_scan_scaled(*t, n, us, m.get_num().get_si(), factor.get_si());
    }
  }
  return detail::po_scan_exact(in, *t, u);
}

inline NotionSet label(const Instance& in, const Outcome& o) {
  auto u = payoff(in, o);
  const auto& s = tables(in)->summary;
  NotionSet ns;
  Rational d = disparity(u);
  ns.eq_star = d == 0;
  ns.eq = d <= s.min_disparity;
  ns.ef = is_envy_free(in, o);
  ns.rmm = min_utility(u) == s.maximin_value;
  ns.usw = welfare(u) == s.max_welfare;
  ns.po = ns.usw || is_pareto_optimal(in, o);
  return ns;
}

// ---------------------------------------------------------------------------
// Optimal outcome search on a payment grid

struct SearchOptions {
  long money_denominator = 1;
  bool full_money_use = false;
};

template <class F>
void for_each_payment_vector(int n, const Rational& budget, long denominator, bool exact_total, F&& fn) {
  if (denominator < 1) throw ValidationError("money denominator must be positive");
  Rational units_r = budget * Rational(denominator);
  Integer units_floor;
  mpz_fdiv_q(units_floor.get_mpz_t(), units_r.get_num().get_mpz_t(), units_r.get_den().get_mpz_t());
  if (units_floor > 1000000) throw ValidationError("payment grid too large");
  const long units = units_floor.get_si();
  // a full-money-use grid only exists when P is a grid point
  if (exact_total && Rational(units) != units_r) return;
  std::vector<long> k(n, 0);
  std::vector<Rational> p(n, Rational(0));
  std::function<void(int, long)> rec = [&](int i, long left) {
    if (i == n - 1) {
      long lo = exact_total ? left : 0;
      for (long x = lo; x <= left; ++x) {
        p[i] = Rational(x, denominator);
        p[i].canonicalize();
        fn(static_cast<const std::vector<Rational>&>(p));
      }
      return;
    }
    for (long x = 0; x <= left; ++x) {
      p[i] = Rational(x, denominator);
      p[i].canonicalize();
      rec(i + 1, left - x);
    }
  };
  if (n == 0) return;
  rec(0, units);
}

inline bool satisfies(const Instance& in, const Outcome& o, const NotionSet& required) {
  auto u = payoff(in, o);
  const auto& s = tables(in)->summary;
  if (required.eq_star && disparity(u) != 0) return false;
  if (required.eq && disparity(u) > s.min_disparity) return false;
  if (required.rmm && min_utility(u) != s.maximin_value) return false;
  if (required.usw && welfare(u) != s.max_welfare) return false;
  if (required.ef && !is_envy_free(in, o)) return false;
  if (required.po && !(welfare(u) == s.max_welfare || is_pareto_optimal(in, o))) return false;
  return true;
}

inline std::vector<Outcome> optimal_outcomes(const Instance& in, const NotionSet& required, SearchOptions opt = {}) {
  std::vector<Outcome> out;
  const bool exact_total = opt.full_money_use && in.money > 0;
  for_each_goods_allocation(in, [&](const GoodsAllocation& a) {
    if (in.money == 0) {
      Outcome o{a, std::vector<Rational>(in.n(), Rational(0))};
      if (satisfies(in, o, required)) out.push_back(std::move(o));
      return;
    }
    for_each_payment_vector(in.n(), in.money, opt.money_denominator, exact_total,
                            [&](const std::vector<Rational>& p) {
                              Outcome o{a, p};
                              if (satisfies(in, o, required)) out.push_back(std::move(o));
                            });
  });
  return out;
}

inline std::vector<Outcome> optimal_outcomes(const Instance& in, Notion notion, SearchOptions opt = {}) {
  NotionSet s;
  s.set(notion);
  return optimal_outcomes(in, s, opt);
}

// Every outcome on the grid, in enumeration order.
template <class F>
void for_each_outcome(const Instance& in, long money_denominator, F&& fn) {
  for_each_goods_allocation(in, [&](const GoodsAllocation& a) {
    if (in.money == 0) {
      fn(Outcome{a, std::vector<Rational>(in.n(), Rational(0))});
      return;
    }
    for_each_payment_vector(in.n(), in.money, money_denominator, false,
                            [&](const std::vector<Rational>& p) { fn(Outcome{a, p}); });
  });
}

}  // namespace fairdiv
