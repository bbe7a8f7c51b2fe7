#pragma once

#include <algorithm>
#include <compare>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairdiv/rational.hpp"

namespace fairdiv {

enum class ViolationKind {
  dimension,
  negative_valuation,
  negative_payment,
  overspent,
  unknown_recipient,
  duplicate_good,
  bad_role,
};

struct Violation {
  ViolationKind kind;
  std::string message;
};

struct ValidationError : std::runtime_error {
  std::vector<Violation> violations;
  explicit ValidationError(std::vector<Violation> v)
      : std::runtime_error(join(v)), violations(std::move(v)) {}
  explicit ValidationError(const std::string& msg)
      : std::runtime_error(msg), violations{{ViolationKind::dimension, msg}} {}

  static std::string join(const std::vector<Violation>& v) {
    std::string out;
    for (const auto& x : v) {
      if (!out.empty()) out += "; ";
      out += x.message;
    }
    return out;
  }
};

struct Instance {
  std::string id;
  std::vector<std::string> agents;
  std::vector<std::string> goods;
  std::vector<std::vector<Rational>> valuations;  // [agent][good]
  Rational money = 0;
  std::optional<int> decision_maker_role;

  int n() const { return static_cast<int>(agents.size()); }
  int m() const { return static_cast<int>(goods.size()); }
  const Rational& value(int agent, int good) const { return valuations[agent][good]; }
};

inline std::vector<Violation> instance_violations(const Instance& in) {
  std::vector<Violation> out;
  if (in.agents.empty()) out.push_back({ViolationKind::dimension, "instance needs at least one agent"});
  if (in.valuations.size() != in.agents.size())
    out.push_back({ViolationKind::dimension, "valuation rows (" + std::to_string(in.valuations.size()) +
                                                 ") != agents (" + std::to_string(in.agents.size()) + ")"});
  for (size_t i = 0; i < in.valuations.size(); ++i) {
    if (in.valuations[i].size() != in.goods.size())
      out.push_back({ViolationKind::dimension, "valuation row " + std::to_string(i + 1) + " has " +
                                                   std::to_string(in.valuations[i].size()) + " entries, expected " +
                                                   std::to_string(in.goods.size())});
    for (const auto& v : in.valuations[i])
      if (v < 0) out.push_back({ViolationKind::negative_valuation, "negative valuation " + to_string(v)});
  }
  if (in.money < 0) out.push_back({ViolationKind::negative_payment, "negative money budget"});
  if (in.decision_maker_role && (*in.decision_maker_role < 0 || *in.decision_maker_role >= in.n()))
    out.push_back({ViolationKind::bad_role, "decision_maker_role out of range"});
  return out;
}

inline void validate_instance(const Instance& in) {
  auto v = instance_violations(in);
  if (!v.empty()) throw ValidationError(std::move(v));
}

// Per-good recipient: an agent index or Discard.
class Recipient {
 public:
  static constexpr int kDiscard = -1;
  constexpr Recipient() = default;
  static constexpr Recipient discard() { return Recipient(); }
  static constexpr Recipient agent(int i) { return Recipient(i); }

  constexpr bool discarded() const { return value_ == kDiscard; }
  constexpr int index() const { return value_; }
  constexpr auto operator<=>(const Recipient&) const = default;

 private:
  constexpr explicit Recipient(int v) : value_(v) {}
  int value_ = kDiscard;
};

using GoodsAllocation = std::vector<Recipient>;

struct Outcome {
  GoodsAllocation assignment;
  std::vector<Rational> payments;

  bool operator==(const Outcome&) const = default;
};

// -1 means discard.
inline GoodsAllocation goods_allocation(const std::vector<int>& recipients) {
  GoodsAllocation a;
  a.reserve(recipients.size());
  for (int r : recipients) a.push_back(r < 0 ? Recipient::discard() : Recipient::agent(r));
  return a;
}

inline Outcome make_outcome(const Instance& in, const std::vector<int>& recipients,
                            std::vector<Rational> payments = {}) {
  if (payments.empty()) payments.assign(in.n(), Rational(0));
  return Outcome{goods_allocation(recipients), std::move(payments)};
}

inline std::vector<Rational> int_payments(std::initializer_list<long> xs) {
  std::vector<Rational> out;
  for (long x : xs) out.emplace_back(x);
  return out;
}

struct PayoffVector {
  std::vector<Rational> utilities;

  size_t size() const { return utilities.size(); }
  const Rational& operator[](size_t i) const { return utilities[i]; }
  bool operator==(const PayoffVector&) const = default;
};

inline std::vector<Violation> outcome_violations(const Instance& in, const Outcome& o) {
  std::vector<Violation> out;
  if (static_cast<int>(o.assignment.size()) != in.m())
    out.push_back({ViolationKind::dimension, "assignment covers " + std::to_string(o.assignment.size()) +
                                                 " goods, instance has " + std::to_string(in.m())});
  if (static_cast<int>(o.payments.size()) != in.n())
    out.push_back({ViolationKind::dimension, "payment vector has " + std::to_string(o.payments.size()) +
                                                 " entries, instance has " + std::to_string(in.n()) + " agents"});
  for (size_t g = 0; g < o.assignment.size(); ++g) {
    const auto& r = o.assignment[g];
    if (!r.discarded() && (r.index() < 0 || r.index() >= in.n()))
      out.push_back({ViolationKind::unknown_recipient,
                     "unknown agent " + std::to_string(r.index() + 1) + " for good " + std::to_string(g + 1)});
  }
  Rational total = 0;
  for (size_t i = 0; i < o.payments.size(); ++i) {
    if (o.payments[i] < 0)
      out.push_back({ViolationKind::negative_payment,
                     "negative payment " + to_string(o.payments[i]) + " to agent " + std::to_string(i + 1)});
    total += o.payments[i];
  }
  if (total > in.money)
    out.push_back({ViolationKind::overspent, "Σp = " + to_display(total) + " > P = " + to_display(in.money)});
  return out;
}

inline void validate_outcome(const Instance& in, const Outcome& o) {
  auto v = outcome_violations(in, o);
  if (!v.empty()) throw ValidationError(std::move(v));
}

// Bundle-style construction; reports a good listed twice instead of silently
// keeping one of them.
inline std::vector<Violation> outcome_from_bundles(const Instance& in, const std::vector<std::vector<int>>& bundles,
                                                   std::vector<Rational> payments, Outcome& out) {
  std::vector<Violation> v;
  out.assignment.assign(in.m(), Recipient::discard());
  std::vector<int> seen(in.m(), 0);
  if (static_cast<int>(bundles.size()) > in.n())
    v.push_back({ViolationKind::unknown_recipient, "more bundles than agents"});
  for (size_t i = 0; i < bundles.size(); ++i) {
    for (int g : bundles[i]) {
      if (g < 0 || g >= in.m()) {
        v.push_back({ViolationKind::dimension, "unknown good index " + std::to_string(g)});
        continue;
      }
      if (seen[g]++)
        v.push_back({ViolationKind::duplicate_good, "good " + in.goods[g] + " assigned more than once"});
      out.assignment[g] = Recipient::agent(static_cast<int>(i));
    }
  }
  out.payments = payments.empty() ? std::vector<Rational>(in.n(), Rational(0)) : std::move(payments);
  auto rest = outcome_violations(in, out);
  v.insert(v.end(), rest.begin(), rest.end());
  return v;
}

// v_i(A_j)
inline Rational bundle_value(const Instance& in, int valuer, const GoodsAllocation& a, int holder) {
  Rational s = 0;
  for (int g = 0; g < in.m(); ++g)
    if (!a[g].discarded() && a[g].index() == holder) s += in.valuations[valuer][g];
  return s;
}

// w_i = v_i(A_i)
inline std::vector<Rational> goods_values(const Instance& in, const GoodsAllocation& a) {
  std::vector<Rational> w(in.n(), Rational(0));
  for (int g = 0; g < in.m(); ++g)
    if (!a[g].discarded()) w[a[g].index()] += in.valuations[a[g].index()][g];
  return w;
}

inline PayoffVector payoff(const Instance& in, const Outcome& o) {
  validate_outcome(in, o);
  auto w = goods_values(in, o.assignment);
  for (int i = 0; i < in.n(); ++i) w[i] += o.payments[i];
  return PayoffVector{std::move(w)};
}

inline Rational disparity(const std::vector<Rational>& u) {
  if (u.empty()) throw ValidationError("disparity of an empty payoff vector");
  auto [lo, hi] = std::minmax_element(u.begin(), u.end());
  return Rational(*hi - *lo);
}

inline Rational disparity(const PayoffVector& p) { return disparity(p.utilities); }

inline Rational min_utility(const PayoffVector& p) {
  if (p.utilities.empty()) throw ValidationError("empty payoff vector");
  return *std::min_element(p.utilities.begin(), p.utilities.end());
}

inline Rational welfare(const PayoffVector& p) { return sum(p.utilities); }

inline bool is_empty_outcome(const Outcome& o) {
  for (const auto& r : o.assignment)
    if (!r.discarded()) return false;
  for (const auto& p : o.payments)
    if (p != 0) return false;
  return true;
}

enum class Notion { EQ, EQ_star, EF, RMM, PO, USW };

inline constexpr Notion kAllNotions[] = {Notion::EQ, Notion::EQ_star, Notion::EF,
                                         Notion::RMM, Notion::PO, Notion::USW};

inline std::string notion_name(Notion n) {
  switch (n) {
    case Notion::EQ: return "EQ";
    case Notion::EQ_star: return "EQ*";
    case Notion::EF: return "EF";
    case Notion::RMM: return "RMM";
    case Notion::PO: return "PO";
    case Notion::USW: return "USW";
  }
  return "?";
}

inline std::optional<Notion> parse_notion(std::string_view s) {
  for (Notion n : kAllNotions)
    if (notion_name(n) == s) return n;
  if (s == "EQ_star" || s == "EQstar") return Notion::EQ_star;
  return std::nullopt;
}

struct NotionSet {
  bool eq = false;
  bool eq_star = false;
  bool ef = false;
  bool rmm = false;
  bool po = false;
  bool usw = false;

  bool has(Notion n) const {
    switch (n) {
      case Notion::EQ: return eq;
      case Notion::EQ_star: return eq_star;
      case Notion::EF: return ef;
      case Notion::RMM: return rmm;
      case Notion::PO: return po;
      case Notion::USW: return usw;
    }
    return false;
  }
  void set(Notion n, bool v = true) {
    switch (n) {
      case Notion::EQ: eq = v; break;
      case Notion::EQ_star: eq_star = v; break;
      case Notion::EF: ef = v; break;
      case Notion::RMM: rmm = v; break;
      case Notion::PO: po = v; break;
      case Notion::USW: usw = v; break;
    }
  }
  bool contains(const NotionSet& other) const {
    for (Notion n : kAllNotions)
      if (other.has(n) && !has(n)) return false;
    return true;
  }
  bool empty() const { return !(eq || eq_star || ef || rmm || po || usw); }
  bool operator==(const NotionSet&) const = default;

  // Close under EQ* => EQ and USW => PO.
  NotionSet closed() const {
    NotionSet s = *this;
    if (s.eq_star) s.eq = true;
    if (s.usw) s.po = true;
    return s;
  }
};

// Canonical key: EQ*/EQ, EF, RMM, USW/PO; the implied member is dropped.
inline std::string notion_key(const NotionSet& s) {
  std::vector<std::string> parts;
  if (s.eq_star)
    parts.push_back("EQ*");
  else if (s.eq)
    parts.push_back("EQ");
  if (s.ef) parts.push_back("EF");
  if (s.rmm) parts.push_back("RMM");
  if (s.usw)
    parts.push_back("USW");
  else if (s.po)
    parts.push_back("PO");
  if (parts.empty()) return "None";
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += "+";
    out += p;
  }
  return out;
}

// Parses printed labels: "EF+RMM+PO", "USW+RMM", "RMM (PO)", "EQ*", "None".
// The result is closed under the two implications.
inline NotionSet parse_notion_set(std::string_view label) {
  NotionSet s;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    if (token != "None") {
      auto n = parse_notion(token);
      if (!n) throw ParseError("unknown notion '" + token + "'");
      s.set(*n);
    }
    token.clear();
  };
  for (char c : label) {
    if (c == '+' || c == ' ' || c == '(' || c == ')' || c == ',') {
      flush();
    } else {
      token.push_back(c);
    }
  }
  flush();
  return s.closed();
}

inline std::string agent_label(int i) { return "Person " + std::to_string(i + 1); }

inline std::string good_letter(int g) {
  std::string s;
  int x = g;
  do {
    s.insert(s.begin(), static_cast<char>('A' + x % 26));
    x = x / 26 - 1;
  } while (x >= 0);
  return s;
}

inline std::string good_label(int g) { return "Good " + good_letter(g); }

inline std::string describe_assignment(const Instance& in, const GoodsAllocation& a) {
  std::ostringstream os;
  for (int i = 0; i <= in.n(); ++i) {
    if (i) os << " | ";
    bool any = false;
    for (int g = 0; g < in.m(); ++g) {
      bool match = i == in.n() ? a[g].discarded() : (!a[g].discarded() && a[g].index() == i);
      if (!match) continue;
      if (any) os << ",";
      os << "g" << g + 1;
      any = true;
    }
    if (!any) os << "-";
  }
  return os.str();
}

inline std::string format_vector(const std::vector<Rational>& v) {
  std::string out = "(";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += to_string(v[i]);
  }
  return out + ")";
}

}  // namespace fairdiv
