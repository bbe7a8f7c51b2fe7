#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

#include "fairdiv/model.hpp"

namespace fairdiv {

using json = nlohmann::ordered_json;

inline json rational_to_json(const Rational& r) {
  if (is_integer(r) && r.get_num().fits_slong_p()) return r.get_num().get_si();
  return to_display(r);
}

inline std::optional<Rational> rational_from_json(const json& j) {
  if (j.is_number_integer()) return Rational(static_cast<long>(j.get<int64_t>()));
  if (j.is_number_unsigned()) return Rational(std::to_string(j.get<uint64_t>()));
  if (j.is_number_float()) return rational_from_double(j.get<double>());
  if (j.is_string()) return try_parse_rational(j.get<std::string>());
  return std::nullopt;
}

inline json instance_to_json(const Instance& in) {
  json j;
  j["id"] = in.id;
  j["agents"] = in.agents;
  j["goods"] = in.goods;
  json rows = json::array();
  for (const auto& row : in.valuations) {
    json r = json::array();
    for (const auto& v : row) r.push_back(rational_to_json(v));
    rows.push_back(r);
  }
  j["valuations"] = rows;
  j["money"] = rational_to_json(in.money);
  j["decision_maker_role"] = in.decision_maker_role ? json(*in.decision_maker_role) : json(nullptr);
  return j;
}

inline Instance instance_from_json(const json& j) {
  Instance in;
  try {
    in.id = j.at("id").get<std::string>();
    in.agents = j.at("agents").get<std::vector<std::string>>();
    in.goods = j.at("goods").get<std::vector<std::string>>();
    for (const auto& row : j.at("valuations")) {
      std::vector<Rational> r;
      for (const auto& v : row) {
        auto x = rational_from_json(v);
        if (!x) throw ParseError("bad valuation " + v.dump());
        r.push_back(*x);
      }
      in.valuations.push_back(std::move(r));
    }
    if (j.contains("money")) {
      auto x = rational_from_json(j.at("money"));
      if (!x) throw ParseError("bad money " + j.at("money").dump());
      in.money = *x;
    }
    if (j.contains("decision_maker_role") && !j.at("decision_maker_role").is_null())
      in.decision_maker_role = j.at("decision_maker_role").get<int>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("instance JSON: ") + e.what());
  }
  validate_instance(in);
  return in;
}

// Names used in prompts and in the extraction format.
inline bool is_role(const Instance& in, int agent) {
  return in.decision_maker_role && *in.decision_maker_role == agent;
}

inline std::string recipient_name(const Instance& in, int agent) {
  return is_role(in, agent) ? "You" : agent_label(agent);
}

inline std::string money_key(const Instance& in, int agent) {
  return is_role(in, agent) ? "Your money" : agent_label(agent) + " money";
}

// Extraction object: {"Good A": "Person 1" | "None", ..., "Person 1 money": x}
inline json outcome_to_json(const Instance& in, const Outcome& o) {
  json j = json::object();
  for (int g = 0; g < in.m(); ++g)
    j[good_label(g)] = o.assignment[g].discarded() ? std::string("None") : recipient_name(in, o.assignment[g].index());
  if (in.money > 0)
    for (int i = 0; i < in.n(); ++i) j[money_key(in, i)] = rational_to_json(o.payments[i]);
  return j;
}

namespace detail {

inline std::string lower_trim(std::string s) {
  std::string out;
  for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  size_t a = out.find_first_not_of(" \t\r\n\"'.");
  size_t b = out.find_last_not_of(" \t\r\n\"'.");
  if (a == std::string::npos) return "";
  return out.substr(a, b - a + 1);
}

inline std::string normalize_key(const std::string& k) {
  std::string out;
  for (char c : lower_trim(k))
    if (c != ' ' && c != '_' && c != '-') out.push_back(c);
  return out;
}

}  // namespace detail

struct OutcomeParse {
  std::optional<Outcome> outcome;
  std::string failure;
  explicit operator bool() const { return outcome.has_value(); }
};

// Returns agent index, -1 for discard, or nullopt if unrecognised.
inline std::optional<int> parse_recipient(const Instance& in, const json& v) {
  if (v.is_null()) return -1;
  if (v.is_number_integer()) {
    int k = v.get<int>();
    if (k >= 1 && k <= in.n()) return k - 1;
    return std::nullopt;
  }
  if (!v.is_string()) return std::nullopt;
  std::string s = detail::lower_trim(v.get<std::string>());
  if (s.empty() || s == "none" || s == "null" || s == "discard" || s == "discarded" || s == "nobody" ||
      s == "no one" || s == "thrown away")
    return -1;
  if (in.decision_maker_role && (s == "you" || s == "me" || s == "yourself" || s == "myself"))
    return *in.decision_maker_role;
  for (const char* prefix : {"person ", "person", "individual ", "agent "}) {
    std::string p(prefix);
    if (s.rfind(p, 0) == 0) {
      std::string rest = s.substr(p.size());
      if (!rest.empty() && std::all_of(rest.begin(), rest.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
          rest.size() < 6) {
        int k = std::stoi(rest);
        if (k >= 1 && k <= in.n()) return k - 1;
        return std::nullopt;
      }
    }
  }
  for (int i = 0; i < in.n(); ++i)
    if (detail::lower_trim(in.agents[i]) == s) return i;
  return std::nullopt;
}

inline std::optional<Rational> parse_money_value(const json& v) {
  if (v.is_null()) return Rational(0);
  if (auto r = rational_from_json(v)) return r;
  if (!v.is_string()) return std::nullopt;
  // "5 units", "$2.5"
  std::string s = v.get<std::string>();
  size_t a = s.find_first_of("0123456789.");
  if (a == std::string::npos) return std::nullopt;
  size_t b = s.find_first_not_of("0123456789./", a);
  std::string head = s.substr(0, a);
  for (char c : head)
    if (c != ' ' && c != '$') return std::nullopt;
  return try_parse_rational(s.substr(a, b == std::string::npos ? std::string::npos : b - a));
}

inline OutcomeParse outcome_from_json(const Instance& in, const json& j) {
  OutcomeParse r;
  if (!j.is_object()) {
    r.failure = "JSON value is not an object";
    return r;
  }
  Outcome o;
  o.assignment.assign(in.m(), Recipient::discard());
  o.payments.assign(in.n(), Rational(0));

  std::vector<std::string> good_keys(in.m()), money_keys(in.n());
  for (int g = 0; g < in.m(); ++g) good_keys[g] = detail::normalize_key(good_label(g));
  for (int i = 0; i < in.n(); ++i) money_keys[i] = detail::normalize_key(money_key(in, i));

  for (auto it = j.begin(); it != j.end(); ++it) {
    std::string key = detail::normalize_key(it.key());
    bool matched = false;
    for (int g = 0; g < in.m() && !matched; ++g) {
      if (key != good_keys[g] && key != detail::normalize_key(in.goods[g])) continue;
      matched = true;
      auto rec = parse_recipient(in, it.value());
      if (!rec) {
        r.failure = "unknown recipient " + it.value().dump() + " for " + good_label(g);
        return r;
      }
      o.assignment[g] = *rec < 0 ? Recipient::discard() : Recipient::agent(*rec);
    }
    for (int i = 0; i < in.n() && !matched; ++i) {
      if (key != money_keys[i] && key != detail::normalize_key(agent_label(i) + " money")) continue;
      matched = true;
      auto x = parse_money_value(it.value());
      if (!x) {
        r.failure = "unreadable money value " + it.value().dump() + " for " + agent_label(i);
        return r;
      }
      o.payments[i] = *x;
    }
    if (!matched && key.find("money") != std::string::npos && key.find("good") == std::string::npos) {
      r.failure = "unknown money key '" + it.key() + "'";
      return r;
    }
  }
  auto v = outcome_violations(in, o);
  if (!v.empty()) {
    for (const auto& x : v)
      if (x.kind == ViolationKind::overspent) {
        r.failure = "money overspent: " + x.message;
        return r;
      }
    r.failure = ValidationError::join(v);
    return r;
  }
  r.outcome = std::move(o);
  return r;
}

}  // namespace fairdiv
