#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairdiv/corpus_embedded.hpp"
#include "fairdiv/io.hpp"

namespace fairdiv {

struct NotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct HumanEntry {
  Outcome outcome;
  Rational percent;
  std::vector<Rational> printed_payoffs;
  std::string printed_notions;
  std::optional<std::string> money_condition;
  std::string note;
};

struct HumanReference {
  std::string instance_id;
  std::vector<HumanEntry> entries;
  Rational other_percent;
};

inline HumanReference human_reference_from_json(const Instance& in, const json& j) {
  HumanReference ref;
  ref.instance_id = j.at("instance_id").get<std::string>();
  Rational listed = 0;
  for (const auto& e : j.at("entries")) {
    HumanEntry h;
    auto parsed = outcome_from_json(in, e.at("allocation"));
    if (!parsed) throw ParseError(ref.instance_id + " human entry: " + parsed.failure);
    h.outcome = *parsed.outcome;
    if (e.contains("payments")) {
      h.outcome.payments.clear();
      for (const auto& p : e.at("payments")) {
        auto x = rational_from_json(p);
        if (!x) throw ParseError(ref.instance_id + ": bad payment " + p.dump());
        h.outcome.payments.push_back(*x);
      }
      validate_outcome(in, h.outcome);
    }
    auto pct = rational_from_json(e.at("percent"));
    if (!pct || *pct < 0 || *pct > 100) throw ParseError(ref.instance_id + ": bad percent");
    h.percent = *pct;
    listed += h.percent;
    if (e.contains("printed_payoffs"))
      for (const auto& p : e.at("printed_payoffs")) h.printed_payoffs.push_back(*rational_from_json(p));
    h.printed_notions = e.value("printed_notions", "");
    if (e.contains("money_condition")) h.money_condition = e.at("money_condition").get<std::string>();
    h.note = e.value("note", "");
    ref.entries.push_back(std::move(h));
  }
  if (j.contains("other_percent")) {
    ref.other_percent = *rational_from_json(j.at("other_percent"));
  } else {
    ref.other_percent = listed < 100 ? Rational(100 - listed) : Rational(0);
  }
  if (ref.other_percent < 0 || listed + ref.other_percent > make_rational(1005, 10))
    throw ParseError(ref.instance_id + ": percentages exceed 100");
  return ref;
}

// Catalog order for listings.
inline const std::vector<std::string>& catalog_order() {
  static const std::vector<std::string> ids = {"I0",  "I0'", "I1",   "I2",   "I3",   "I4",   "I5",
                                               "I6",  "I7",  "I8",   "I9",   "I10",  "I2*",  "I4*",
                                               "I1.1", "I1.2", "I1.3", "I1.4"};
  return ids;
}

inline std::string id_from_stem(std::string stem) {
  auto replace = [&](const std::string& from, const std::string& to) {
    if (auto p = stem.find(from); p != std::string::npos) stem.replace(p, from.size(), to);
  };
  replace("_prime", "'");
  replace("_star", "*");
  return stem;
}

class Corpus {
 public:
  Corpus() { load_embedded(); }

  explicit Corpus(const std::optional<std::filesystem::path>& override_dir) {
    load_embedded();
    if (override_dir) load_directory(*override_dir);
  }

  const Instance& instance(const std::string& id) const {
    auto it = instances_.find(id);
    if (it == instances_.end()) throw NotFound("unknown instance '" + id + "'");
    return it->second;
  }

  bool has_instance(const std::string& id) const { return instances_.count(id) > 0; }

  const HumanReference& human(const std::string& id) const {
    auto it = human_.find(id);
    if (it == human_.end()) throw NotFound("no human reference data for '" + id + "'");
    return it->second;
  }

  bool has_human(const std::string& id) const { return human_.count(id) > 0; }

  const std::string& cot_example(const std::string& id) const {
    auto it = cot_.find(id);
    if (it == cot_.end()) throw NotFound("no worked example text for '" + id + "'");
    return it->second;
  }

  std::vector<std::string> instance_ids() const {
    std::vector<std::string> out;
    for (const auto& id : catalog_order())
      if (instances_.count(id)) out.push_back(id);
    for (const auto& [id, _] : instances_)
      if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
    return out;
  }

  std::vector<std::string> human_ids() const {
    std::vector<std::string> out;
    for (const auto& id : instance_ids())
      if (human_.count(id)) out.push_back(id);
    return out;
  }

  void add_instance(Instance in) { instances_[in.id] = std::move(in); }

 private:
  void add_file(const std::string& path, const std::string& content) {
    auto slash = path.find('/');
    std::string dir = path.substr(0, slash);
    std::string name = path.substr(slash + 1);
    if (dir == "instances") {
      auto in = instance_from_json(json::parse(content));
      instances_[in.id] = std::move(in);
    } else if (dir == "human") {
      pending_human_.push_back(content);
    } else if (dir == "cot") {
      std::string text = content;
      while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
      std::string stem = name.substr(0, name.rfind('.'));
      cot_[id_from_stem(stem)] = text;
    }
  }

  void resolve_human() {
    for (const auto& content : pending_human_) {
      auto j = json::parse(content);
      const auto& in = instance(j.at("instance_id").get<std::string>());
      auto ref = human_reference_from_json(in, j);
      human_[ref.instance_id] = std::move(ref);
    }
    pending_human_.clear();
  }

  void load_embedded() {
    for (const auto& f : embedded::kFiles) add_file(std::string(f.path), std::string(f.content));
    resolve_human();
  }

  void load_directory(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw NotFound("corpus directory not found: " + dir.string());
    std::vector<std::pair<std::string, std::string>> files;
    for (const char* sub : {"instances", "human", "cot"}) {
      fs::path p = dir / sub;
      if (!fs::is_directory(p)) continue;
      for (const auto& e : fs::directory_iterator(p)) {
        if (!e.is_regular_file()) continue;
        std::ifstream f(e.path(), std::ios::binary);
        std::stringstream ss;
        ss << f.rdbuf();
        files.emplace_back(std::string(sub) + "/" + e.path().filename().string(), ss.str());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& [path, content] : files) add_file(path, content);
    resolve_human();
  }

  std::map<std::string, Instance> instances_;
  std::map<std::string, HumanReference> human_;
  std::map<std::string, std::string> cot_;
  std::vector<std::string> pending_human_;
};

inline std::optional<std::filesystem::path> corpus_dir_from_env() {
  if (const char* p = std::getenv("FAIRDIV_CORPUS_DIR"); p && *p) return std::filesystem::path(p);
  return std::nullopt;
}

inline const Corpus& default_corpus() {
  static const Corpus corpus(corpus_dir_from_env());
  return corpus;
}

inline const Instance& load_instance(const std::string& id) { return default_corpus().instance(id); }

inline const HumanReference& human_reference(const std::string& id) { return default_corpus().human(id); }

}  // namespace fairdiv
