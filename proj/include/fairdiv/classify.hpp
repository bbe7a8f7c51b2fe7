#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fairdiv/corpus.hpp"
#include "fairdiv/engine.hpp"
#include "fairdiv/io.hpp"
#include "fairdiv/stats.hpp"

namespace fairdiv {

enum class ResponseKind { labeled, invalid, other };

struct LabeledResponse {
  std::string instance_id;
  ResponseKind kind = ResponseKind::labeled;
  std::optional<Outcome> outcome;
  std::optional<PayoffVector> payoffs;
  NotionSet notions;
  std::string source;
  std::optional<std::string> raw_ref;
  std::string invalid_reason;

  bool valid() const { return kind == ResponseKind::labeled; }
};

inline const char* kInvalidKey = "Invalid";
inline const char* kOtherKey = "Other";

inline std::string response_key(const LabeledResponse& r) {
  switch (r.kind) {
    case ResponseKind::invalid: return kInvalidKey;
    case ResponseKind::other: return kOtherKey;
    case ResponseKind::labeled: return notion_key(r.notions);
  }
  return kInvalidKey;
}

inline LabeledResponse classify_one(const Instance& in, const Outcome& o, const std::string& source,
                                    std::optional<std::string> raw_ref = std::nullopt) {
  LabeledResponse r;
  r.instance_id = in.id;
  r.source = source;
  r.raw_ref = std::move(raw_ref);
  auto v = outcome_violations(in, o);
  if (!v.empty()) {
    r.kind = ResponseKind::invalid;
    r.invalid_reason = ValidationError::join(v);
    return r;
  }
  r.outcome = o;
  r.payoffs = payoff(in, o);
  r.notions = label(in, o);
  return r;
}

inline LabeledResponse invalid_response(const std::string& instance_id, const std::string& source,
                                        const std::string& reason, std::optional<std::string> raw_ref = std::nullopt) {
  LabeledResponse r;
  r.instance_id = instance_id;
  r.source = source;
  r.kind = ResponseKind::invalid;
  r.invalid_reason = reason;
  r.raw_ref = std::move(raw_ref);
  return r;
}

inline std::vector<LabeledResponse> classify_responses(const Instance& in, const std::vector<Outcome>& outcomes,
                                                       const std::string& source) {
  std::vector<LabeledResponse> out;
  out.reserve(outcomes.size());
  for (const auto& o : outcomes) out.push_back(classify_one(in, o, source));
  return out;
}

// Largest-remainder rounding of percentages (entries then Other) to `total` counts.
inline std::vector<int64_t> apportion(const std::vector<Rational>& percents, int64_t total) {
  std::vector<int64_t> counts(percents.size(), 0);
  std::vector<std::pair<Rational, size_t>> rema;
  Rational psum = 0;
  for (const auto& p : percents) psum += p;
  if (psum <= 0) return counts;
  int64_t assigned = 0;
  for (size_t i = 0; i < percents.size(); ++i) {
    Rational exact = percents[i] * Rational(total) / psum;
    Integer fl;
    mpz_fdiv_q(fl.get_mpz_t(), exact.get_num().get_mpz_t(), exact.get_den().get_mpz_t());
    counts[i] = fl.get_si();
    assigned += counts[i];
    rema.emplace_back(Rational(exact - Rational(fl)), i);
  }
  std::stable_sort(rema.begin(), rema.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  for (size_t k = 0; assigned < total && k < rema.size(); ++k, ++assigned) ++counts[rema[k].second];
  return counts;
}

// Human reference as `total` synthetic responses; Other mass becomes Other rows.
inline std::vector<LabeledResponse> expand_reference(const Instance& in, const HumanReference& ref,
                                                     int64_t total = 100, const std::string& source = "human") {
  std::vector<Rational> pct;
  for (const auto& e : ref.entries) pct.push_back(e.percent);
  pct.push_back(ref.other_percent);
  auto counts = apportion(pct, total);
  std::vector<LabeledResponse> out;
  for (size_t i = 0; i < ref.entries.size(); ++i) {
    auto r = classify_one(in, ref.entries[i].outcome, source);
    for (int64_t c = 0; c < counts[i]; ++c) out.push_back(r);
  }
  LabeledResponse other;
  other.instance_id = in.id;
  other.kind = ResponseKind::other;
  other.source = source;
  for (int64_t c = 0; c < counts.back(); ++c) out.push_back(other);
  return out;
}

struct FrequencyRow {
  std::string key;
  int64_t count = 0;
  double percent = 0;
};

struct FrequencyTable {
  std::string instance_id;
  std::vector<FrequencyRow> rows;
  int64_t total = 0;

  const FrequencyRow* find(const std::string& key) const {
    for (const auto& r : rows)
      if (r.key == key) return &r;
    return nullptr;
  }
  int64_t count(const std::string& key) const {
    auto r = find(key);
    return r ? r->count : 0;
  }
};

// Ranking: count descending, then key ascending. Invalid and Other go last.
inline FrequencyTable make_table(const std::string& id, const std::map<std::string, int64_t>& counts) {
  FrequencyTable t;
  t.instance_id = id;
  for (const auto& [k, c] : counts) {
    t.rows.push_back({k, c, 0.0});
    t.total += c;
  }
  auto special = [](const std::string& k) { return k == kInvalidKey || k == kOtherKey; };
  std::stable_sort(t.rows.begin(), t.rows.end(), [&](const FrequencyRow& a, const FrequencyRow& b) {
    if (special(a.key) != special(b.key)) return !special(a.key);
    if (a.count != b.count) return a.count > b.count;
    return a.key < b.key;
  });
  for (auto& r : t.rows) r.percent = t.total ? 100.0 * static_cast<double>(r.count) / static_cast<double>(t.total) : 0;
  return t;
}

inline FrequencyTable aggregate(const std::vector<LabeledResponse>& records, const std::string& instance_id) {
  std::map<std::string, int64_t> counts;
  for (const auto& r : records)
    if (r.instance_id == instance_id) ++counts[response_key(r)];
  return make_table(instance_id, counts);
}

inline FrequencyTable aggregate_pooled(const std::vector<LabeledResponse>& records) {
  std::map<std::string, int64_t> counts;
  for (const auto& r : records) ++counts[response_key(r)];
  return make_table("ALL", counts);
}

inline std::vector<std::string> instance_ids_in(const std::vector<LabeledResponse>& records) {
  std::vector<std::string> ids;
  for (const auto& r : records)
    if (std::find(ids.begin(), ids.end(), r.instance_id) == ids.end()) ids.push_back(r.instance_id);
  // stable presentation: catalog order first, then lexicographic
  const auto& order = catalog_order();
  std::stable_sort(ids.begin(), ids.end(), [&](const std::string& a, const std::string& b) {
    auto ia = std::find(order.begin(), order.end(), a) - order.begin();
    auto ib = std::find(order.begin(), order.end(), b) - order.begin();
    if (ia != ib) return ia < ib;
    return a < b;
  });
  return ids;
}

inline std::vector<FrequencyTable> aggregate_by_instance(const std::vector<LabeledResponse>& records) {
  std::vector<FrequencyTable> out;
  for (const auto& id : instance_ids_in(records)) out.push_back(aggregate(records, id));
  return out;
}

struct NotionRate {
  Notion notion;
  std::vector<std::pair<std::string, double>> per_instance;  // percent satisfied
  double mean = 0;
  Interval t_interval;        // across instances; degenerate when one instance
  Interval wilson_pooled;     // over all responses, in percent
  int64_t successes = 0;
  int64_t total = 0;
};

inline std::vector<NotionRate> per_notion_rates(const std::vector<LabeledResponse>& records, double level = 0.95) {
  std::vector<NotionRate> out;
  auto ids = instance_ids_in(records);
  for (Notion n : kAllNotions) {
    NotionRate rate;
    rate.notion = n;
    std::vector<double> values;
    for (const auto& id : ids) {
      int64_t s = 0, t = 0;
      for (const auto& r : records) {
        if (r.instance_id != id) continue;
        ++t;
        if (r.valid() && r.notions.has(n)) ++s;
      }
      double pct = t ? 100.0 * static_cast<double>(s) / static_cast<double>(t) : 0;
      rate.per_instance.emplace_back(id, pct);
      values.push_back(pct);
      rate.successes += s;
      rate.total += t;
    }
    if (values.empty()) {
      out.push_back(rate);
      continue;
    }
    double mean = 0;
    for (double v : values) mean += v;
    rate.mean = mean / static_cast<double>(values.size());
    bool constant = std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); });
    if (values.size() >= 2 && !constant) {
      rate.t_interval = t_over_groups(values, level);
    } else if (values.size() >= 2) {
      rate.t_interval = Interval{rate.mean, rate.mean, rate.mean};
    }
    if (rate.total > 0) {
      auto w = wilson_interval(rate.successes, rate.total, level);
      rate.wilson_pooled = Interval{100 * w.lo, 100 * w.hi, 100 * w.center};
      if (values.size() < 2) rate.t_interval = rate.wilson_pooled;
    }
    out.push_back(rate);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output

inline std::string format_percent(double p, int decimals = 1) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, p);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string tables_to_csv(const std::vector<FrequencyTable>& tables) {
  std::ostringstream os;
  os << "instance_id,notion_key,count,percent\n";
  for (const auto& t : tables)
    for (const auto& r : t.rows)
      os << csv_escape(t.instance_id) << ',' << csv_escape(r.key) << ',' << r.count << ','
         << format_percent(r.percent, 4) << '\n';
  return os.str();
}

inline json table_to_json(const FrequencyTable& t) {
  json j;
  j["instance_id"] = t.instance_id;
  j["total"] = t.total;
  json rows = json::array();
  for (const auto& r : t.rows) rows.push_back({{"key", r.key}, {"count", r.count}, {"percent", r.percent}});
  j["rows"] = rows;
  return j;
}

inline std::string table_to_text(const FrequencyTable& t, size_t top = 0) {
  std::ostringstream os;
  os << t.instance_id << " (n=" << t.total << ")\n";
  size_t width = 10;
  for (const auto& r : t.rows) width = std::max(width, r.key.size());
  size_t shown = 0;
  for (const auto& r : t.rows) {
    if (top && shown++ >= top) break;
    os << "  " << r.key << std::string(width - r.key.size() + 2, ' ') << r.count << "  (" << format_percent(r.percent)
       << "%)\n";
  }
  return os.str();
}

inline std::string rates_to_csv(const std::vector<NotionRate>& rates) {
  std::ostringstream os;
  os << "notion,mean_percent,t_lo,t_hi,wilson_lo,wilson_hi,successes,total\n";
  for (const auto& r : rates)
    os << notion_name(r.notion) << ',' << format_percent(r.mean, 4) << ',' << format_percent(r.t_interval.lo, 4) << ','
       << format_percent(r.t_interval.hi, 4) << ',' << format_percent(r.wilson_pooled.lo, 4) << ','
       << format_percent(r.wilson_pooled.hi, 4) << ',' << r.successes << ',' << r.total << '\n';
  return os.str();
}

inline std::string rates_to_text(const std::vector<NotionRate>& rates) {
  std::ostringstream os;
  for (const auto& r : rates) {
    std::string name = notion_name(r.notion);
    os << "  " << name << std::string(5 - std::min<size_t>(5, name.size()), ' ') << format_percent(r.mean)
       << " (±" << format_percent(r.t_interval.half_width()) << ")\n";
  }
  return os.str();
}

inline json labeled_to_json(const Instance& in, const LabeledResponse& r) {
  json j;
  j["instance_id"] = r.instance_id;
  j["source"] = r.source;
  j["status"] = r.kind == ResponseKind::labeled ? "ok" : (r.kind == ResponseKind::other ? "other" : "invalid");
  if (r.outcome) j["outcome"] = outcome_to_json(in, *r.outcome);
  if (r.payoffs) {
    json p = json::array();
    for (const auto& u : r.payoffs->utilities) p.push_back(rational_to_json(u));
    j["payoffs"] = p;
  }
  j["notion_key"] = response_key(r);
  if (!r.invalid_reason.empty()) j["failure"] = r.invalid_reason;
  if (r.raw_ref) j["raw_ref"] = *r.raw_ref;
  return j;
}

}  // namespace fairdiv
