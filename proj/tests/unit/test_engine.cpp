#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "fairdiv/corpus.hpp"
#include "fairdiv/engine.hpp"
#include "oracles.hpp"

using namespace fairdiv;

namespace {

Instance make(std::vector<std::vector<long>> v, long money = 0, std::string id = "t") {
  Instance in;
  in.id = std::move(id);
  for (size_t i = 0; i < v.size(); ++i) in.agents.push_back("a" + std::to_string(i + 1));
  for (size_t g = 0; g < (v.empty() ? 0 : v[0].size()); ++g) in.goods.push_back("g" + std::to_string(g + 1));
  for (auto& row : v) {
    std::vector<Rational> r;
    for (long x : row) r.emplace_back(x);
    in.valuations.push_back(r);
  }
  in.money = money;
  return in;
}

Instance random_instance(std::mt19937_64& rng, long money, const std::string& id) {
  std::uniform_int_distribution<int> nd(1, 3), md(0, 3), vd(0, 30);
  int n = nd(rng), m = md(rng);
  std::vector<std::vector<long>> v(n, std::vector<long>(m));
  for (auto& row : v)
    for (auto& x : row) x = vd(rng);
  return make(v, money, id);
}

}  // namespace

TEST(Enumerate, Counts) {
  EXPECT_EQ(allocation_count(load_instance("I0")), 27u);
  EXPECT_EQ(allocation_count(load_instance("I5")), 4096u);
  Instance lone = make(std::vector<std::vector<long>>{std::vector<long>{}});
  EXPECT_EQ(allocation_count(lone), 1u);
  uint64_t seen = 0;
  for_each_goods_allocation(lone, [&](const GoodsAllocation& a) {
    EXPECT_TRUE(a.empty());
    ++seen;
  });
  EXPECT_EQ(seen, 1u);
}

TEST(Enumerate, OrderAndIndexRoundTrip) {
  const Instance& i0 = load_instance("I0");
  auto all = enumerate_goods_allocations(i0);
  ASSERT_EQ(all.size(), 27u);
  EXPECT_EQ(all.front(), goods_allocation({0, 0, 0}));
  EXPECT_EQ(all[1], goods_allocation({0, 0, 1}));
  EXPECT_EQ(all[2], goods_allocation({0, 0, -1}));
  EXPECT_EQ(all.back(), goods_allocation({-1, -1, -1}));
  std::set<GoodsAllocation> distinct(all.begin(), all.end());
  EXPECT_EQ(distinct.size(), 27u);
  for (uint64_t k = 0; k < all.size(); ++k) {
    EXPECT_EQ(allocation_at(i0, k), all[k]);
    EXPECT_EQ(allocation_index(i0, all[k]), k);
  }
}

TEST(WaterFill, Examples) {
  auto r = water_fill_min_disparity(int_payments({45, 40, 45}), 5);
  EXPECT_EQ(r.payments, int_payments({0, 5, 0}));
  EXPECT_EQ(r.value, 0);

  auto m = water_fill_maximin(int_payments({44, 36, 44}), 9);
  EXPECT_EQ(m.payments, (std::vector<Rational>{Rational(1, 3), Rational(25, 3), Rational(1, 3)}));
  EXPECT_EQ(m.value, Rational(133, 3));

  EXPECT_EQ(water_level(int_payments({0, 0}), 10), 5);
  auto z = water_fill_min_disparity(int_payments({10, 10}), 0);
  EXPECT_EQ(z.payments, int_payments({0, 0}));
  EXPECT_EQ(z.value, 0);

  auto partial = water_fill_min_disparity(int_payments({50, 10, 30}), 10);
  EXPECT_EQ(partial.payments, int_payments({0, 10, 0}));
  EXPECT_EQ(partial.value, 30);

  EXPECT_THROW(water_level({}, 1), ValidationError);
  EXPECT_THROW(water_level(int_payments({1}), -1), ValidationError);
}

TEST(WaterFill, PropertiesAgainstGrid) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> nd(1, 3), wd(0, 12), bd(0, 8);
  for (int t = 0; t < 150; ++t) {
    int n = nd(rng);
    std::vector<Rational> w(n);
    for (auto& x : w) x = wd(rng);
    Rational budget = make_rational(bd(rng), 2);
    auto mm = water_fill_maximin(w, budget);
    auto md = water_fill_min_disparity(w, budget);
    EXPECT_EQ(sum(mm.payments), budget);
    EXPECT_EQ(sum(md.payments), budget);
    std::vector<Rational> um(n), ud(n);
    for (int i = 0; i < n; ++i) {
      EXPECT_GE(mm.payments[i], 0);
      EXPECT_GE(md.payments[i], 0);
      um[i] = w[i] + mm.payments[i];
      ud[i] = w[i] + md.payments[i];
    }
    EXPECT_EQ(*std::min_element(um.begin(), um.end()), mm.value);
    EXPECT_EQ(disparity(ud), md.value);
    // no grid point of denominator 6 beats either fill
    oracle::for_each_grid_payment(n, budget, 6, [&](const std::vector<Rational>& p) {
      std::vector<Rational> u(n);
      for (int i = 0; i < n; ++i) u[i] = w[i] + p[i];
      EXPECT_LE(*std::min_element(u.begin(), u.end()), mm.value);
      EXPECT_GE(disparity(u), md.value);
    });
  }
}

TEST(Summary, I0) {
  auto s = summarize(load_instance("I0"));
  EXPECT_EQ(s.min_disparity, 0);
  EXPECT_EQ(s.maximin_value, 45);
  EXPECT_EQ(s.max_welfare, 120);
  EXPECT_EQ(s.goods_welfare_max, 120);
}

TEST(Summary, MoneyRaisesWelfareAndMaximin) {
  auto s = summarize(load_instance("I7"));
  EXPECT_EQ(s.max_welfare, s.goods_welfare_max + 5);
  EXPECT_EQ(s.min_disparity, 0);
  EXPECT_EQ(s.maximin_value, oracle::maximin_on_grid(load_instance("I7"), 3));
}

TEST(Envy, Examples) {
  const Instance& i0 = load_instance("I0");
  EXPECT_TRUE(is_envy_free(i0, make_outcome(i0, {0, 1, -1})));
  EXPECT_FALSE(is_envy_free(i0, make_outcome(i0, {0, 1, 0})));

  const Instance& i2 = load_instance("I2");
  auto pairs = envy_pairs(i2, make_outcome(i2, {1, 0, 2, -1}));
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].envier, 1);
  EXPECT_EQ(pairs[0].envied, 2);
  EXPECT_EQ(pairs[0].own, 45);
  EXPECT_EQ(pairs[0].other, 48);
}

TEST(Envy, PaymentsCountOnBothSides) {
  const Instance& i0p = load_instance("I0'");
  EXPECT_TRUE(is_envy_free(i0p, make_outcome(i0p, {0, 1, -1}, int_payments({0, 5}))));
  EXPECT_FALSE(is_envy_free(i0p, make_outcome(i0p, {0, 1, -1}, int_payments({5, 0}))));
}

TEST(Envy, MatchesOracle) {
  for (const auto& id : {"I0", "I2", "I4", "I6"}) {
    const Instance& in = load_instance(id);
    for_each_outcome(in, 1, [&](const Outcome& o) { EXPECT_EQ(is_envy_free(in, o), oracle::envy_free(in, o)); });
  }
}

TEST(Pareto, Examples) {
  const Instance& i0 = load_instance("I0");
  EXPECT_TRUE(is_pareto_optimal(i0, make_outcome(i0, {0, 1, 1})));
  EXPECT_FALSE(is_pareto_optimal(i0, make_outcome(i0, {0, 1, -1})));
  const Instance& i7 = load_instance("I7");
  EXPECT_TRUE(is_pareto_optimal(i7, make_outcome(i7, {0, 1, 2}, int_payments({0, 5, 0}))));
}

TEST(Pareto, MoneySurplusIsNeverOptimal) {
  for (const auto& id : {"I0'", "I7", "I8", "I10"}) {
    const Instance& in = load_instance(id);
    for_each_goods_allocation(in, [&](const GoodsAllocation& a) {
      Outcome o{a, std::vector<Rational>(in.n(), Rational(0))};
      o.payments[0] = in.money - Rational(1, 2);
      EXPECT_FALSE(is_pareto_optimal(in, o)) << id;
    });
  }
}

TEST(Pareto, MatchesExhaustiveGrid) {
  std::mt19937_64 rng(123);
  for (int t = 0; t < 60; ++t) {
    Instance in = random_instance(rng, t % 2 ? 2 : 0, "po" + std::to_string(t));
    for_each_outcome(in, 1, [&](const Outcome& o) {
      auto u = oracle::utilities(in, o);
      EXPECT_EQ(is_pareto_optimal(in, o), !oracle::dominated_by_need_sum(in, u, 1)) << in.id;
    });
  }
}

TEST(Label, PrintedRows) {
  const Instance& i0 = load_instance("I0");
  EXPECT_EQ(notion_key(label(i0, make_outcome(i0, {0, 1, 1}))), "RMM+PO");
  EXPECT_EQ(notion_key(label(i0, make_outcome(i0, {1, -1, 0}))), "EQ*");
  EXPECT_EQ(notion_key(label(i0, make_outcome(i0, {0, 1, 0}))), "USW");
  const Instance& i2 = load_instance("I2");
  EXPECT_EQ(notion_key(label(i2, make_outcome(i2, {2, 0, 1, 2}))), "EF+PO");
  EXPECT_EQ(notion_key(label(i2, make_outcome(i2, {1, 2, 0, 2}))), "EQ*+RMM");
}

TEST(Label, SingleAgentGetsEverything) {
  Instance in = make({{3, 4}});
  auto ns = label(in, make_outcome(in, {0, 0}));
  EXPECT_EQ(notion_key(ns), "EQ*+EF+RMM+USW");
  for (Notion n : kAllNotions) EXPECT_TRUE(ns.has(n));
}

TEST(Label, EmptyOutcomeExcludedFromEqOnlyWithoutMoney) {
  Instance in = make({{10, 0}, {0, 10}}, 0, "eqx");
  auto ns = label(in, make_outcome(in, {-1, -1}));
  EXPECT_TRUE(ns.eq_star);
  EXPECT_TRUE(ns.eq);
  EXPECT_EQ(summarize(in).min_disparity, 0);
  Instance lop = make({{10}, {5}}, 0, "eqlop");
  // the only zero-disparity outcome is the empty one
  EXPECT_EQ(summarize(lop).min_disparity, 5);
  EXPECT_TRUE(label(lop, make_outcome(lop, {1})).eq);
  EXPECT_FALSE(label(lop, make_outcome(lop, {0})).eq);
  Instance paid = make({{10}, {5}}, 1, "eqpaid");
  EXPECT_EQ(summarize(paid).min_disparity, 0);
}

TEST(Label, ImplicationsAlwaysHold) {
  for (const auto& id : {"I0", "I0'", "I2", "I7"}) {
    const Instance& in = load_instance(id);
    for_each_outcome(in, 1, [&](const Outcome& o) {
      auto ns = label(in, o);
      EXPECT_EQ(ns, ns.closed());
    });
  }
}

TEST(Label, ScalingInvariance) {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 30; ++t) {
    Instance in = random_instance(rng, t % 2 ? 3 : 0, "s" + std::to_string(t));
    Instance big = in;
    big.id += "x";
    for (auto& row : big.valuations)
      for (auto& v : row) v *= 7;
    big.money *= 7;
    for_each_outcome(in, 1, [&](const Outcome& o) {
      Outcome scaled = o;
      for (auto& p : scaled.payments) p *= 7;
      EXPECT_EQ(label(in, o), label(big, scaled));
    });
  }
}

TEST(Satisfies, AgreesWithLabel) {
  const Instance& i7 = load_instance("I7");
  for_each_outcome(i7, 1, [&](const Outcome& o) {
    auto ns = label(i7, o);
    for (Notion n : kAllNotions) {
      NotionSet req;
      req.set(n);
      EXPECT_EQ(satisfies(i7, o, req), ns.has(n));
    }
  });
}

TEST(Optimal, I0EqStarMatchesBruteForce) {
  const Instance& i0 = load_instance("I0");
  auto found = optimal_outcomes(i0, Notion::EQ_star);
  size_t expected = 0;
  oracle::for_each_recipients(2, 3, [&](const std::vector<int>& r) {
    auto w = oracle::goods_values(i0, r);
    if (w[0] == w[1]) ++expected;
  });
  EXPECT_EQ(found.size(), expected);
  for (const auto& o : found) EXPECT_EQ(disparity(payoff(i0, o)), 0);
}

TEST(Optimal, I7Examples) {
  auto eq = optimal_outcomes(load_instance("I7"), parse_notion_set("EQ*+RMM+PO"), SearchOptions{1, true});
  ASSERT_EQ(eq.size(), 1u);
  EXPECT_EQ(payoff(load_instance("I7"), eq[0]).utilities, int_payments({45, 45, 45}));
  auto ef = optimal_outcomes(load_instance("I7"), parse_notion_set("EF+PO"), SearchOptions{1, true});
  ASSERT_EQ(ef.size(), 1u);
  EXPECT_EQ(payoff(load_instance("I7"), ef[0]).utilities, int_payments({45, 40, 50}));
}

TEST(Optimal, FullMoneyUseNeedsGridPoint) {
  Instance in = make({{1}, {2}}, 0, "half");
  in.money = Rational(1, 2);
  EXPECT_TRUE(optimal_outcomes(in, NotionSet{}, SearchOptions{1, true}).empty());
  EXPECT_FALSE(optimal_outcomes(in, NotionSet{}, SearchOptions{2, true}).empty());
  EXPECT_THROW(optimal_outcomes(in, NotionSet{}, SearchOptions{0, false}), ValidationError);
}

TEST(Cache, ConcurrentReadersAgree) {
  SummaryCache cache;
  std::vector<std::string> ids = {"I0", "I2", "I4", "I7", "I9", "I10"};
  std::vector<std::thread> pool;
  std::vector<std::vector<Rational>> got(8);
  for (int t = 0; t < 8; ++t)
    pool.emplace_back([&, t] {
      for (int rep = 0; rep < 5; ++rep)
        for (const auto& id : ids) {
          auto tab = cache.get(load_instance(id));
          if (rep == 0) got[t].push_back(tab->summary.max_welfare);
        }
    });
  for (auto& th : pool) th.join();
  EXPECT_EQ(cache.size(), ids.size());
  for (int t = 1; t < 8; ++t) EXPECT_EQ(got[t], got[0]);
  cache.clear();
  EXPECT_EQ(cache.size(), 0u);
}
