#include <gtest/gtest.h>

#include "fairdiv/agents.hpp"
#include "fairdiv/corpus.hpp"

using namespace fairdiv;

TEST(Agents, RoundRobinI0) {
  const Instance& i0 = load_instance("I0");
  auto o = run_round_robin(i0, {0, 1});
  EXPECT_EQ(payoff(i0, o).utilities, int_payments({80, 40}));
  auto rev = run_round_robin(i0, {1, 0});
  EXPECT_EQ(rev.assignment, goods_allocation({0, 1, 1}));
  EXPECT_THROW(run_round_robin(i0, {0, 0}), ValidationError);
}

TEST(Agents, HighestBidderI2) {
  const Instance& i2 = load_instance("I2");
  EXPECT_EQ(payoff(i2, run_highest_bidder(i2)).utilities, int_payments({47, 93, 20}));
}

TEST(Agents, WelfareMaxI0) {
  const Instance& i0 = load_instance("I0");
  EXPECT_EQ(payoff(i0, run_welfare_max(i0)).utilities, int_payments({80, 40}));
}

TEST(Agents, PolicyGuarantees) {
  for (const auto& id : default_corpus().instance_ids()) {
    const Instance& in = load_instance(id);
    auto wm = label(in, run_agent(Policy::welfare_max(), in));
    EXPECT_TRUE(wm.usw) << id;
    EXPECT_TRUE(label(in, run_agent(Policy::equitable_waterfill(), in)).eq) << id;
    EXPECT_TRUE(label(in, run_agent(Policy::maximin(), in)).rmm) << id;
    if (!has_valuation_ties(in)) EXPECT_TRUE(label(in, run_agent(Policy::highest_bidder(), in)).usw) << id;
  }
}

TEST(Agents, RoundRobinAssignsEveryGood) {
  for (const auto& id : default_corpus().instance_ids()) {
    const Instance& in = load_instance(id);
    for (const auto& order : all_orders(in.n())) {
      auto o = run_round_robin(in, order);
      for (const auto& r : o.assignment) EXPECT_FALSE(r.discarded()) << id;
      EXPECT_EQ(sum(o.payments), in.money) << id;
    }
  }
}

TEST(Agents, AllOrders) {
  EXPECT_EQ(all_orders(1).size(), 1u);
  EXPECT_EQ(all_orders(3).size(), 6u);
  EXPECT_EQ(all_orders(3).front(), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(all_orders(3).back(), (std::vector<int>{2, 1, 0}));
}

TEST(Agents, Names) {
  EXPECT_EQ(policy_name(Policy::round_robin({1, 0})), "round_robin(a2,a1)");
  EXPECT_EQ(policy_name(Policy::highest_bidder()), "highest_bidder");
  EXPECT_EQ(parse_policy_kind("round-robin"), PolicyKind::round_robin);
  EXPECT_EQ(parse_policy_kind("welfare_max"), PolicyKind::welfare_max);
  EXPECT_FALSE(parse_policy_kind("random"));
}

TEST(Agents, Ties) {
  EXPECT_TRUE(has_valuation_ties(load_instance("I1.4")));
  EXPECT_FALSE(has_valuation_ties(load_instance("I2")));
}
