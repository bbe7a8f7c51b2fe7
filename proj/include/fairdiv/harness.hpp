#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "fairdiv/classify.hpp"
#include "fairdiv/corpus.hpp"
#include "fairdiv/parse.hpp"
#include "fairdiv/prompts.hpp"
#include "fairdiv/provider.hpp"

namespace fairdiv {

inline std::string utc_timestamp() {
  auto now = std::chrono::system_clock::now();
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

struct TranscriptEntry {
  Message message;
  int round = 0;
  int stage = 1;
};

enum class SampleStatus { ok, invalid, transport_error };

inline std::string status_name(SampleStatus s) {
  switch (s) {
    case SampleStatus::ok: return "ok";
    case SampleStatus::invalid: return "invalid";
    case SampleStatus::transport_error: return "transport_error";
  }
  return "invalid";
}

struct SampleRecord {
  std::string run_id;
  std::string instance_id;
  int sample = 0;
  std::string family;
  std::string model;
  std::vector<TranscriptEntry> transcript;
  std::optional<Outcome> outcome;
  SampleStatus status = SampleStatus::invalid;
  std::string failure;
  NotionSet notions;
  std::optional<PayoffVector> payoffs;
  int rounds = 1;
  std::optional<bool> satisfied;  // refinement only
  std::string started_at;
  std::string finished_at;

  std::string notion_key() const { return status == SampleStatus::ok ? fairdiv::notion_key(notions) : kInvalidKey; }
};

inline json sample_to_json(const Instance& in, const SampleRecord& r) {
  json j;
  j["run_id"] = r.run_id;
  j["instance_id"] = r.instance_id;
  j["sample"] = r.sample;
  j["family"] = r.family;
  j["model"] = r.model;
  j["status"] = status_name(r.status);
  j["outcome"] = r.outcome ? outcome_to_json(in, *r.outcome) : json(nullptr);
  j["failure"] = r.failure.empty() ? json(nullptr) : json(r.failure);
  j["notion_key"] = r.notion_key();
  json notions = json::array();
  if (r.status == SampleStatus::ok)
    for (Notion n : kAllNotions)
      if (r.notions.has(n)) notions.push_back(notion_name(n));
  j["notions"] = notions;
  if (r.payoffs) {
    json p = json::array();
    for (const auto& u : r.payoffs->utilities) p.push_back(rational_to_json(u));
    j["payoffs"] = p;
  } else {
    j["payoffs"] = nullptr;
  }
  j["rounds"] = r.rounds;
  j["satisfied"] = r.satisfied ? json(*r.satisfied) : json(nullptr);
  json t = json::array();
  for (const auto& e : r.transcript)
    t.push_back({{"round", e.round}, {"stage", e.stage}, {"role", e.message.role}, {"content", e.message.content}});
  j["transcript"] = t;
  j["started_at"] = r.started_at;
  j["finished_at"] = r.finished_at;
  return j;
}

class RecordSink {
 public:
  virtual ~RecordSink() = default;
  virtual void append(const Instance& in, const SampleRecord& r) = 0;
};

// Append-only JSONL; one line per sample, flushed per append.
class JsonlSink : public RecordSink {
 public:
  explicit JsonlSink(const std::string& path, bool truncate = false)
      : out_(path, truncate ? std::ios::trunc : std::ios::app) {
    if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
  }

  void append(const Instance& in, const SampleRecord& r) override {
    std::string line = sample_to_json(in, r).dump();
    std::lock_guard<std::mutex> lock(mu_);
    out_ << line << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
  std::mutex mu_;
};

class MemorySink : public RecordSink {
 public:
  void append(const Instance& in, const SampleRecord& r) override {
    std::lock_guard<std::mutex> lock(mu_);
    lines_.push_back(sample_to_json(in, r));
  }
  std::vector<json> lines() const {
    std::lock_guard<std::mutex> lock(mu_);
    return lines_;
  }

 private:
  mutable std::mutex mu_;
  std::vector<json> lines_;
};

struct RunRecord {
  std::string run_id;
  std::string instance_id;
  json config;
  std::vector<SampleRecord> samples;

  int64_t transport_failures() const {
    return std::count_if(samples.begin(), samples.end(),
                         [](const SampleRecord& s) { return s.status == SampleStatus::transport_error; });
  }
};

struct RunConfig {
  std::vector<std::string> instances;
  PromptFamily family;
  json family_json;
  ProviderConfig provider;
  std::string output_path;
  uint64_t seed = 0;
  std::string run_id;
};

// ---------------------------------------------------------------------------
// One sample

namespace detail {

struct Exchange {
  std::string response;
  std::optional<Outcome> outcome;
  std::string failure;
  bool transport_failed = false;
};

inline Exchange ask(const Instance& in, const std::string& prompt, bool two_stage, ChatProvider& provider, int sample,
                    int round, std::vector<TranscriptEntry>& transcript) {
  Exchange ex;
  try {
    Messages first{Message{"user", prompt}};
    transcript.push_back({first.back(), round, 1});
    ex.response = provider.complete(first, RequestInfo{sample, round, 1});
    transcript.push_back({Message{"assistant", ex.response}, round, 1});
    std::string structured = ex.response;
    if (two_stage) {
      auto second = render_extraction_prompt(in, prompt, ex.response);
      transcript.push_back({second.back(), round, 2});
      structured = provider.complete(second, RequestInfo{sample, round, 2});
      transcript.push_back({Message{"assistant", structured}, round, 2});
    }
    auto parsed = parse_response(in, structured);
    if (parsed) ex.outcome = parsed.outcome;
    else ex.failure = parsed.failure;
  } catch (const TransportError& e) {
    ex.transport_failed = true;
    ex.failure = std::string("transport: ") + e.what();
  }
  return ex;
}

inline void finish(const Instance& in, SampleRecord& r, const Exchange& ex) {
  if (ex.transport_failed) {
    r.status = SampleStatus::transport_error;
    r.failure = ex.failure;
    return;
  }
  if (!ex.outcome) {
    r.status = SampleStatus::invalid;
    r.failure = ex.failure;
    return;
  }
  r.outcome = ex.outcome;
  r.payoffs = payoff(in, *ex.outcome);
  r.notions = label(in, *ex.outcome);
  r.status = SampleStatus::ok;
  r.failure.clear();
}

inline bool has_target(const NotionSet& s, Notion n) {
  return n == Notion::EQ ? s.eq : s.has(n);
}

}  // namespace detail

inline void check_feedback_notion(Notion n) {
  if (n != Notion::EQ && n != Notion::EQ_star && n != Notion::RMM && n != Notion::EF)
    throw PromptError("unsupported feedback notion " + notion_name(n));
}

inline SampleRecord run_sample(const Instance& in, const PromptFamily& family, ChatProvider& provider, int sample,
                               const std::string& run_id, const Corpus& corpus = default_corpus()) {
  SampleRecord r;
  r.run_id = run_id;
  r.instance_id = in.id;
  r.sample = sample;
  r.family = family_name(family.kind);
  r.model = provider.name();
  r.started_at = utc_timestamp();
  const Instance target = prompt_instance(in, family);

  if (family.kind == FamilyKind::feedback_refinement) {
    check_feedback_notion(family.notion);
    const std::string persona = render_prompt_text(in, family, corpus);
    std::string prompt = persona;
    detail::Exchange ex;
    int round = 0;
    for (;; ++round) {
      ex = detail::ask(target, prompt, true, provider, sample, round, r.transcript);
      if (ex.transport_failed) break;
      bool ok = ex.outcome && detail::has_target(label(target, *ex.outcome), family.notion);
      if (ok || round >= family.max_retries) break;
      prompt = render_feedback_text(family.notion, persona, ex.response);
    }
    r.rounds = round + 1;
    detail::finish(target, r, ex);
    r.satisfied = r.status == SampleStatus::ok && detail::has_target(r.notions, family.notion);
    if (!ex.transport_failed && !*r.satisfied) {
      std::string why = "not satisfied after " + std::to_string(r.rounds) + " attempts";
      r.failure = r.failure.empty() ? why : why + "; " + r.failure;
    }
  } else {
    auto ex = detail::ask(target, render_prompt_text(in, family, corpus), family.two_stage(), provider, sample, 0,
                          r.transcript);
    detail::finish(target, r, ex);
  }
  r.finished_at = utc_timestamp();
  return r;
}

inline RunRecord refinement_loop(const Instance& in, Notion notion, ChatProvider& provider, int max_retries = 2,
                                 const std::string& run_id = "refine", int sample = 0) {
  check_feedback_notion(notion);
  RunRecord rec;
  rec.run_id = run_id;
  rec.instance_id = in.id;
  rec.config = {{"family", "feedback"}, {"notion", notion_name(notion)}, {"max_retries", max_retries}};
  rec.samples.push_back(run_sample(in, PromptFamily::feedback(notion, max_retries), provider, sample, run_id));
  return rec;
}

// Runs every instance x sample with at most `concurrency` requests in flight.
inline std::vector<RunRecord> run_experiment(const std::vector<std::string>& instance_ids, const PromptFamily& family,
                                             const ProviderConfig& cfg, ChatProvider& provider, RecordSink& sink,
                                             const std::string& run_id, const Corpus& corpus = default_corpus()) {
  cfg.validate();
  std::vector<const Instance*> instances;
  for (const auto& id : instance_ids) instances.push_back(&corpus.instance(id));
  // render once up front so family/instance mismatches fail before any request
  for (const auto* in : instances) render_prompt_text(*in, family, corpus);

  std::vector<RunRecord> runs(instances.size());
  for (size_t k = 0; k < instances.size(); ++k) {
    runs[k].run_id = run_id;
    runs[k].instance_id = instances[k]->id;
    runs[k].config = {{"family", family_name(family.kind)},
                      {"model", cfg.model},
                      {"endpoint", cfg.endpoint},
                      {"temperature", cfg.temperature},
                      {"samples", cfg.samples}};
    runs[k].samples.resize(cfg.samples);
  }
  const int64_t total = static_cast<int64_t>(instances.size()) * cfg.samples;
  std::atomic<int64_t> next{0};
  auto worker = [&] {
    for (int64_t t = next++; t < total; t = next++) {
      size_t k = static_cast<size_t>(t / cfg.samples);
      int s = static_cast<int>(t % cfg.samples);
      auto rec = run_sample(*instances[k], family, provider, s, run_id, corpus);
      sink.append(prompt_instance(*instances[k], family), rec);
      runs[k].samples[s] = std::move(rec);
    }
  };
  int threads = static_cast<int>(std::min<int64_t>(cfg.concurrency, total));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return runs;
}

// ---------------------------------------------------------------------------
// Reading records back

inline LabeledResponse labeled_from_json(const Corpus& corpus, const json& j, const std::string& source_fallback) {
  std::string id = j.at("instance_id").get<std::string>();
  std::string source = j.contains("model") ? j.at("model").get<std::string>()
                                           : j.value("source", source_fallback);
  std::optional<std::string> ref;
  if (j.contains("run_id") && j.contains("sample"))
    ref = j.at("run_id").get<std::string>() + "#" + std::to_string(j.at("sample").get<int>());
  const Instance& in = corpus.instance(id);
  std::string status = j.value("status", "ok");
  if (status == "other") {
    LabeledResponse r;
    r.instance_id = id;
    r.kind = ResponseKind::other;
    r.source = source;
    return r;
  }
  if (!j.contains("outcome") || j.at("outcome").is_null() || status != "ok")
    return invalid_response(id, source, j.contains("failure") && j.at("failure").is_string()
                                            ? j.at("failure").get<std::string>()
                                            : "no outcome",
                            ref);
  auto parsed = outcome_from_json(in, j.at("outcome"));
  if (!parsed) return invalid_response(id, source, parsed.failure, ref);
  return classify_one(in, *parsed.outcome, source, ref);
}

inline std::vector<LabeledResponse> load_jsonl(const std::string& path, const Corpus& corpus = default_corpus()) {
  std::ifstream f(path);
  if (!f) throw NotFound("cannot read " + path);
  std::vector<LabeledResponse> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError(path + ":" + std::to_string(lineno) + ": bad JSON");
    out.push_back(labeled_from_json(corpus, j, path));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Derived instances for ordering-robustness runs

struct Permutation {
  std::vector<int> agents;  // new position k holds old agent agents[k]
  std::vector<int> goods;
};

inline Instance permute_instance(const Instance& in, const Permutation& p, const std::string& suffix = "~perm") {
  if (static_cast<int>(p.agents.size()) != in.n() || static_cast<int>(p.goods.size()) != in.m())
    throw ValidationError("permutation size mismatch");
  Instance out;
  out.id = in.id + suffix;
  out.money = in.money;
  for (int a : p.agents) out.agents.push_back(in.agents.at(a));
  for (int g : p.goods) out.goods.push_back(in.goods.at(g));
  for (int a : p.agents) {
    std::vector<Rational> row;
    for (int g : p.goods) row.push_back(in.value(a, g));
    out.valuations.push_back(std::move(row));
  }
  if (in.decision_maker_role)
    out.decision_maker_role =
        static_cast<int>(std::find(p.agents.begin(), p.agents.end(), *in.decision_maker_role) - p.agents.begin());
  validate_instance(out);
  return out;
}

// Maps an outcome of the permuted instance back to the original indexing.
inline Outcome unpermute_outcome(const Outcome& o, const Permutation& p) {
  Outcome out;
  out.assignment.assign(p.goods.size(), Recipient::discard());
  out.payments.assign(p.agents.size(), Rational(0));
  for (size_t k = 0; k < p.goods.size(); ++k) {
    const auto& r = o.assignment[k];
    out.assignment[p.goods[k]] = r.discarded() ? Recipient::discard() : Recipient::agent(p.agents[r.index()]);
  }
  for (size_t k = 0; k < p.agents.size(); ++k) out.payments[p.agents[k]] = o.payments[k];
  return out;
}

inline Permutation random_permutation(const Instance& in, uint64_t seed) {
  std::mt19937_64 rng(seed);
  Permutation p;
  p.agents.resize(in.n());
  p.goods.resize(in.m());
  std::iota(p.agents.begin(), p.agents.end(), 0);
  std::iota(p.goods.begin(), p.goods.end(), 0);
  std::shuffle(p.agents.begin(), p.agents.end(), rng);
  std::shuffle(p.goods.begin(), p.goods.end(), rng);
  return p;
}

// ---------------------------------------------------------------------------
// Run config

inline PromptFamily family_from_json(const json& j, const Instance* menu_instance, const Corpus& corpus) {
  PromptFamily f;
  if (j.is_string()) {
    auto k = parse_family_kind(j.get<std::string>());
    if (!k) throw ConfigError("unknown family '" + j.get<std::string>() + "'");
    f.kind = *k;
    return f;
  }
  auto kind = parse_family_kind(j.at("kind").get<std::string>());
  if (!kind) throw ConfigError("unknown family '" + j.at("kind").get<std::string>() + "'");
  f.kind = *kind;
  if (j.contains("notion")) {
    auto n = parse_notion(j.at("notion").get<std::string>());
    if (!n) throw ConfigError("unknown notion " + j.at("notion").dump());
    f.notion = *n;
  }
  if (j.contains("intention")) {
    auto i = parse_intention(j.at("intention").get<std::string>());
    if (!i) throw ConfigError("unknown intention " + j.at("intention").dump());
    f.intention = *i;
  }
  f.max_retries = j.value("max_retries", 2);
  f.example_instance_id = j.value("example", std::string("I0"));
  f.role_agent = j.value("role_agent", 0);
  if (j.contains("context")) {
    auto c = parse_menu_context(j.at("context").get<std::string>());
    if (!c) throw ConfigError("unknown menu context " + j.at("context").dump());
    f.context = *c;
  }
  if (f.kind == FamilyKind::menu_selection) {
    if (!menu_instance) throw ConfigError("menu family needs exactly one instance");
    const json& opts = j.at("options");
    if (opts.is_string() && opts.get<std::string>() == "human") {
      auto h = human_menu(corpus.human(menu_instance->id), f.context);
      f.options = h.options;
      f.option_percents = h.option_percents;
    } else {
      for (const auto& o : opts) {
        auto parsed = outcome_from_json(*menu_instance, o);
        if (!parsed) throw ConfigError("menu option: " + parsed.failure);
        f.options.push_back(*parsed.outcome);
      }
      if (j.contains("percents"))
        for (const auto& p : j.at("percents")) f.option_percents.push_back(*rational_from_json(p));
    }
  }
  return f;
}

inline RunConfig run_config_from_json(const json& j, const Corpus& corpus = default_corpus()) {
  RunConfig c;
  try {
    c.instances = j.at("instances").get<std::vector<std::string>>();
    if (c.instances.empty()) throw ConfigError("instances must be non-empty");
    for (const auto& id : c.instances) corpus.instance(id);
    c.family_json = j.at("family");
    const Instance* menu_in = c.instances.size() == 1 ? &corpus.instance(c.instances[0]) : nullptr;
    c.family = family_from_json(c.family_json, menu_in, corpus);
    const json& p = j.at("provider");
    c.provider.endpoint = p.value("endpoint", std::string("stub"));
    c.provider.style = p.value("style", std::string("openai"));
    c.provider.model = p.value("model", std::string("stub"));
    c.provider.temperature = p.value("temperature", 1.0);
    c.provider.samples = p.value("samples", 100);
    c.provider.concurrency = p.value("concurrency", 4);
    c.provider.max_tokens = p.value("max_tokens", 2048);
    c.provider.timeout_seconds = p.value("timeout_seconds", 120);
    c.provider.env_key_name = p.value("env_key_name", std::string());
    if (p.contains("script")) c.provider.script = p.at("script").get<std::vector<std::string>>();
    if (p.contains("retry")) {
      const json& r = p.at("retry");
      c.provider.retry.max_attempts = r.value("max_attempts", c.provider.retry.max_attempts);
      c.provider.retry.initial_backoff_ms = r.value("initial_backoff_ms", c.provider.retry.initial_backoff_ms);
      c.provider.retry.multiplier = r.value("multiplier", c.provider.retry.multiplier);
      c.provider.retry.max_backoff_ms = r.value("max_backoff_ms", c.provider.retry.max_backoff_ms);
    }
    c.output_path = j.value("output_path", std::string("run.jsonl"));
    c.seed = j.value("seed", uint64_t{0});
    c.run_id = j.value("run_id", "run-" + std::to_string(c.seed));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  c.provider.validate();
  return c;
}

}  // namespace fairdiv
