#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "fairdiv/engine.hpp"

namespace fairdiv {

enum class PolicyKind { round_robin, highest_bidder, equitable_waterfill, maximin, welfare_max };

struct Policy {
  PolicyKind kind = PolicyKind::round_robin;
  std::vector<int> order;  // round_robin only; empty means identity

  static Policy round_robin(std::vector<int> order = {}) { return {PolicyKind::round_robin, std::move(order)}; }
  static Policy highest_bidder() { return {PolicyKind::highest_bidder, {}}; }
  static Policy equitable_waterfill() { return {PolicyKind::equitable_waterfill, {}}; }
  static Policy maximin() { return {PolicyKind::maximin, {}}; }
  static Policy welfare_max() { return {PolicyKind::welfare_max, {}}; }
};

inline std::string policy_name(const Policy& p) {
  switch (p.kind) {
    case PolicyKind::round_robin: {
      std::string s = "round_robin";
      if (!p.order.empty()) {
        s += '(';
        for (size_t k = 0; k < p.order.size(); ++k) s += (k ? "," : "") + std::string("a") + std::to_string(p.order[k] + 1);
        s += ')';
      }
      return s;
    }
    case PolicyKind::highest_bidder: return "highest_bidder";
    case PolicyKind::equitable_waterfill: return "equitable_waterfill";
    case PolicyKind::maximin: return "maximin";
    case PolicyKind::welfare_max: return "welfare_max";
  }
  return "unknown";
}

inline std::optional<PolicyKind> parse_policy_kind(const std::string& s) {
  if (s == "round_robin" || s == "round-robin") return PolicyKind::round_robin;
  if (s == "highest_bidder" || s == "highest-bidder") return PolicyKind::highest_bidder;
  if (s == "equitable_waterfill" || s == "equitable-waterfill") return PolicyKind::equitable_waterfill;
  if (s == "maximin") return PolicyKind::maximin;
  if (s == "welfare_max" || s == "welfare-max") return PolicyKind::welfare_max;
  return std::nullopt;
}

inline std::vector<Rational> equal_split(const Instance& in) {
  return std::vector<Rational>(in.n(), in.n() ? Rational(in.money / Rational(in.n())) : Rational(0));
}

inline void check_order(const Instance& in, const std::vector<int>& order) {
  std::vector<int> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> ident(in.n());
  std::iota(ident.begin(), ident.end(), 0);
  if (sorted != ident) throw ValidationError("round-robin order must be a permutation of the agents");
}

inline Outcome run_round_robin(const Instance& in, std::vector<int> order) {
  if (order.empty()) {
    order.resize(in.n());
    std::iota(order.begin(), order.end(), 0);
  }
  check_order(in, order);
  Outcome o{GoodsAllocation(in.m(), Recipient::discard()), equal_split(in)};
  std::vector<bool> taken(in.m(), false);
  int left = in.m();
  for (size_t turn = 0; left > 0; ++turn) {
    int i = order[turn % order.size()];
    int best = -1;
    for (int g = 0; g < in.m(); ++g)
      if (!taken[g] && (best < 0 || in.value(i, g) > in.value(i, best))) best = g;
    taken[best] = true;
    o.assignment[best] = Recipient::agent(i);
    --left;
  }
  return o;
}

inline Outcome run_highest_bidder(const Instance& in) {
  Outcome o{GoodsAllocation(in.m(), Recipient::discard()), equal_split(in)};
  for (int g = 0; g < in.m(); ++g) {
    int best = 0;
    for (int i = 1; i < in.n(); ++i)
      if (in.value(i, g) > in.value(best, g)) best = i;
    o.assignment[g] = Recipient::agent(best);
  }
  return o;
}

// First goods allocation in enumeration order whose closed-form fill attains the optimum.
inline Outcome run_equitable_waterfill(const Instance& in) {
  const auto s = summarize(in);
  std::optional<Outcome> found;
  for_each_goods_allocation(in, [&](const GoodsAllocation& a) {
    if (found) return;
    bool empty = std::all_of(a.begin(), a.end(), [](const Recipient& r) { return r.discarded(); });
    if (empty && in.money == 0) return;
    auto fill = water_fill_min_disparity(goods_values(in, a), in.money);
    if (fill.value == s.min_disparity) found = Outcome{a, fill.payments};
  });
  return *found;
}

inline Outcome run_maximin(const Instance& in) {
  const auto s = summarize(in);
  std::optional<Outcome> found;
  for_each_goods_allocation(in, [&](const GoodsAllocation& a) {
    if (found) return;
    auto fill = water_fill_maximin(goods_values(in, a), in.money);
    if (fill.value == s.maximin_value) found = Outcome{a, fill.payments};
  });
  return *found;
}

inline Outcome run_welfare_max(const Instance& in) {
  const auto s = summarize(in);
  std::optional<Outcome> found;
  for_each_goods_allocation(in, [&](const GoodsAllocation& a) {
    if (found) return;
    if (sum(goods_values(in, a)) == s.goods_welfare_max) found = Outcome{a, equal_split(in)};
  });
  return *found;
}

inline Outcome run_agent(const Policy& p, const Instance& in) {
  validate_instance(in);
  switch (p.kind) {
    case PolicyKind::round_robin: return run_round_robin(in, p.order);
    case PolicyKind::highest_bidder: return run_highest_bidder(in);
    case PolicyKind::equitable_waterfill: return run_equitable_waterfill(in);
    case PolicyKind::maximin: return run_maximin(in);
    case PolicyKind::welfare_max: return run_welfare_max(in);
  }
  throw ValidationError("unknown policy");
}

inline std::vector<std::vector<int>> all_orders(int n) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  do out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

inline bool has_valuation_ties(const Instance& in) {
  for (int g = 0; g < in.m(); ++g) {
    Rational best = -1;
    int count = 0;
    for (int i = 0; i < in.n(); ++i) {
      if (in.value(i, g) > best) {
        best = in.value(i, g);
        count = 1;
      } else if (in.value(i, g) == best) {
        ++count;
      }
    }
    if (count > 1) return true;
  }
  return false;
}

}  // namespace fairdiv
