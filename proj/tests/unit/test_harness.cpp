#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <thread>

#include <httplib.h>

#include "fairdiv/classify.hpp"
#include "fairdiv/harness.hpp"

using namespace fairdiv;

namespace {

ProviderConfig stub_config(std::vector<std::string> script, int samples, int concurrency = 4) {
  ProviderConfig c;
  c.script = std::move(script);
  c.samples = samples;
  c.concurrency = concurrency;
  return c;
}

std::string answer(const Instance& in, const Outcome& o) {
  return "After weighing the options I pick this one.\n" + outcome_to_json(in, o).dump(1);
}

std::vector<LabeledResponse> relabel(const MemorySink& sink) {
  std::vector<LabeledResponse> out;
  for (const auto& j : sink.lines()) out.push_back(labeled_from_json(default_corpus(), j, "mem"));
  return out;
}

}  // namespace

TEST(Harness, StubRunIsLabeled) {
  const Instance& i6 = load_instance("I6");
  auto cfg = stub_config({answer(i6, human_reference("I6").entries[0].outcome)}, 20);
  ScriptedProvider provider(cfg.script);
  MemorySink sink;
  auto runs = run_experiment({"I6"}, PromptFamily::original(), cfg, provider, sink, "r1");
  ASSERT_EQ(runs.size(), 1u);
  ASSERT_EQ(runs[0].samples.size(), 20u);
  for (const auto& s : runs[0].samples) {
    EXPECT_EQ(s.status, SampleStatus::ok);
    EXPECT_EQ(s.notion_key(), "EQ*");
    ASSERT_EQ(s.transcript.size(), 4u);
    EXPECT_EQ(s.transcript[0].message.role, "user");
    EXPECT_EQ(s.transcript[2].stage, 2);
  }
  auto t = aggregate(relabel(sink), "I6");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0].key, "EQ*");
  EXPECT_DOUBLE_EQ(t.rows[0].percent, 100.0);
}

TEST(Harness, ProseOnlyIsInvalid) {
  auto cfg = stub_config({"I would split things evenly between everyone."}, 10, 1);
  ScriptedProvider provider(cfg.script);
  MemorySink sink;
  run_experiment({"I0", "I7"}, PromptFamily::original(), cfg, provider, sink, "r2");
  auto recs = relabel(sink);
  ASSERT_EQ(recs.size(), 20u);
  for (const auto& id : {"I0", "I7"}) {
    auto t = aggregate(recs, id);
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.rows[0].key, "Invalid");
  }
  for (const auto& j : sink.lines()) {
    EXPECT_EQ(j["status"], "invalid");
    EXPECT_TRUE(j["outcome"].is_null());
    EXPECT_TRUE(j["failure"].is_string());
  }
}

TEST(Harness, SingleStageSkipsExtraction) {
  const Instance& i0 = load_instance("I0");
  auto cfg = stub_config({answer(i0, make_outcome(i0, {0, 1, -1}))}, 3, 1);
  ScriptedProvider provider(cfg.script);
  MemorySink sink;
  auto runs = run_experiment({"I0"}, PromptFamily::template_single(), cfg, provider, sink, "r3");
  for (const auto& s : runs[0].samples) {
    EXPECT_EQ(s.transcript.size(), 2u);
    EXPECT_EQ(s.notion_key(), "EF");
  }
}

TEST(Harness, ScriptCyclesBySample) {
  const Instance& i0 = load_instance("I0");
  auto cfg = stub_config({answer(i0, make_outcome(i0, {0, 1, -1})), answer(i0, make_outcome(i0, {0, 1, 0}))}, 6, 3);
  ScriptedProvider provider(cfg.script);
  MemorySink sink;
  auto runs = run_experiment({"I0"}, PromptFamily::original(), cfg, provider, sink, "r4");
  for (const auto& s : runs[0].samples) EXPECT_EQ(s.notion_key(), s.sample % 2 ? "USW" : "EF");
  EXPECT_EQ(sink.lines().size(), 6u);
}

TEST(Refinement, SatisfiedOnSecondRound) {
  const Instance& i2 = load_instance("I2");
  ScriptedProvider provider({answer(i2, make_outcome(i2, {1, 0, 1, 2})), answer(i2, make_outcome(i2, {1, 2, 0, 2}))});
  auto rec = refinement_loop(i2, Notion::EQ_star, provider, 2);
  ASSERT_EQ(rec.samples.size(), 1u);
  const auto& s = rec.samples[0];
  EXPECT_EQ(s.rounds, 2);
  EXPECT_EQ(s.satisfied, true);
  EXPECT_EQ(s.notion_key(), "EQ*+RMM");
  bool feedback_seen = false;
  for (const auto& e : s.transcript)
    if (e.round == 1 && e.stage == 1 && e.message.role == "user")
      feedback_seen = e.message.content.find("does not minimize the inequality") != std::string::npos;
  EXPECT_TRUE(feedback_seen);
}

TEST(Refinement, GivesUpAfterRetries) {
  const Instance& i2 = load_instance("I2");
  ScriptedProvider provider({answer(i2, make_outcome(i2, {1, 0, 1, 2}))});
  auto rec = refinement_loop(i2, Notion::EQ_star, provider, 2);
  const auto& s = rec.samples[0];
  EXPECT_EQ(s.rounds, 3);
  EXPECT_EQ(s.satisfied, false);
  EXPECT_EQ(s.failure.rfind("not satisfied after 3 attempts", 0), 0u);
  EXPECT_EQ(s.status, SampleStatus::ok);
}

TEST(Refinement, RejectsUnsupportedNotion) {
  ScriptedProvider provider({"x"});
  EXPECT_THROW(refinement_loop(load_instance("I2"), Notion::PO, provider), PromptError);
}

TEST(Records, JsonlRoundTrip) {
  const Instance& i7 = load_instance("I7");
  auto path = std::filesystem::temp_directory_path() / "fairdiv_records_test.jsonl";
  std::filesystem::remove(path);
  auto cfg = stub_config({answer(i7, make_outcome(i7, {0, 1, 2}, int_payments({0, 5, 0}))), "no idea"}, 4, 2);
  ScriptedProvider provider(cfg.script);
  {
    JsonlSink sink(path.string(), true);
    run_experiment({"I7"}, PromptFamily::original(), cfg, provider, sink, "rt");
  }
  auto recs = load_jsonl(path.string());
  ASSERT_EQ(recs.size(), 4u);
  int ok = 0;
  for (const auto& r : recs) {
    EXPECT_EQ(r.source, "stub");
    ASSERT_TRUE(r.raw_ref);
    EXPECT_EQ(r.raw_ref->rfind("rt#", 0), 0u);
    if (r.valid()) {
      ++ok;
      EXPECT_EQ(r.payoffs->utilities, int_payments({45, 45, 45}));
      EXPECT_EQ(response_key(r), "EQ*+RMM+PO");
    }
  }
  EXPECT_EQ(ok, 2);
  std::filesystem::remove(path);
  EXPECT_THROW(load_jsonl(path.string()), NotFound);
}

TEST(Records, LabeledFromJsonVariants) {
  json other = {{"instance_id", "I2"}, {"status", "other"}};
  EXPECT_EQ(response_key(labeled_from_json(default_corpus(), other, "h")), "Other");
  json bad = {{"instance_id", "I7"}, {"outcome", {{"Good A", "Person 1"}, {"Person 1 money", 9}}}};
  auto r = labeled_from_json(default_corpus(), bad, "h");
  EXPECT_FALSE(r.valid());
  EXPECT_EQ(r.invalid_reason.rfind("money overspent", 0), 0u);
  EXPECT_EQ(r.source, "h");
  json unknown = {{"instance_id", "I99"}};
  EXPECT_THROW(labeled_from_json(default_corpus(), unknown, "h"), NotFound);
}

TEST(Config, ParsesAndValidates) {
  json j = json::parse(R"({
    "instances": ["I2"],
    "family": {"kind": "menu", "options": "human", "context": "human_percentages"},
    "provider": {"endpoint": "stub", "samples": 5, "concurrency": 2, "script": ["x"],
                 "retry": {"max_attempts": 2}},
    "seed": 7
  })");
  auto c = run_config_from_json(j);
  EXPECT_EQ(c.family.kind, FamilyKind::menu_selection);
  EXPECT_EQ(c.family.options.size(), 5u);
  EXPECT_EQ(c.family.option_percents.size(), 5u);
  EXPECT_EQ(c.provider.samples, 5);
  EXPECT_EQ(c.provider.retry.max_attempts, 2);
  EXPECT_EQ(c.run_id, "run-7");

  j["provider"]["script"] = json::array();
  EXPECT_THROW(run_config_from_json(j), ConfigError);
  j["provider"]["script"] = {"x"};
  j["instances"] = {"I2", "I3"};
  EXPECT_THROW(run_config_from_json(j), ConfigError);
  j["family"] = "persona";
  j["instances"] = {"I99"};
  EXPECT_THROW(run_config_from_json(j), NotFound);
  j["instances"] = {"I2"};
  j["family"] = "bogus";
  EXPECT_THROW(run_config_from_json(j), ConfigError);
  j["family"] = {{"kind", "feedback"}, {"notion", "EF"}, {"max_retries", 4}};
  auto f = run_config_from_json(j);
  EXPECT_EQ(f.family.notion, Notion::EF);
  EXPECT_EQ(f.family.max_retries, 4);
}

TEST(Permutation, RoundTripPreservesLabels) {
  for (const char* id : {"I2", "I7", "I9"}) {
    const Instance& in = load_instance(id);
    for (uint64_t seed = 0; seed < 4; ++seed) {
      auto p = random_permutation(in, seed);
      Instance q = permute_instance(in, p, "~" + std::to_string(seed));
      if (in.decision_maker_role) EXPECT_EQ(q.agents[*q.decision_maker_role], in.agents[*in.decision_maker_role]);
      int64_t k = 0;
      for_each_outcome(q, 1, [&](const Outcome& o) {
        if (++k % 11) return;
        Outcome back = unpermute_outcome(o, p);
        EXPECT_EQ(label(q, o), label(in, back)) << id;
        auto uq = payoff(q, o).utilities, ub = payoff(in, back).utilities;
        for (int i = 0; i < in.n(); ++i) EXPECT_EQ(uq[i], ub[p.agents[i]]);
      });
    }
  }
}

class LocalServer : public ::testing::Test {
 protected:
  void SetUp() override {
    port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  void TearDown() override {
    server.stop();
    thread.join();
  }
  ProviderConfig config(const std::string& style) {
    ProviderConfig c;
    c.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat";
    c.style = style;
    c.model = "local-model";
    c.samples = 1;
    c.retry.initial_backoff_ms = 1;
    c.retry.max_attempts = 3;
    c.timeout_seconds = 5;
    return c;
  }
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> hits{0};
};

TEST_F(LocalServer, OpenAiStyle) {
  json seen;
  server.Post("/v1/chat", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    seen = json::parse(req.body);
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"hello"}}]})", "application/json");
  });
  HttpChatProvider p(config("openai"));
  EXPECT_EQ(p.complete({{"user", "hi"}}, {}), "hello");
  EXPECT_EQ(seen["model"], "local-model");
  EXPECT_EQ(seen["messages"][0]["content"], "hi");
  EXPECT_FALSE(seen.contains("max_tokens"));
  EXPECT_TRUE(is_local_endpoint(config("openai").endpoint));
  EXPECT_FALSE(is_local_endpoint("https://api.example.com/v1/chat"));
}

TEST_F(LocalServer, AnthropicStyle) {
  json seen;
  std::string version;
  server.Post("/v1/chat", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    version = req.get_header_value("anthropic-version");
    res.set_content(R"({"content":[{"type":"text","text":"a"},{"type":"text","text":"b"}]})", "application/json");
  });
  HttpChatProvider p(config("anthropic"));
  EXPECT_EQ(p.complete({{"system", "be brief"}, {"user", "hi"}}, {}), "ab");
  EXPECT_EQ(seen["system"], "be brief");
  EXPECT_EQ(seen["messages"].size(), 1u);
  EXPECT_EQ(seen["max_tokens"], 2048);
  EXPECT_FALSE(version.empty());
}

TEST_F(LocalServer, RetriesTransientErrors) {
  server.Post("/v1/chat", [&](const httplib::Request&, httplib::Response& res) {
    int k = ++hits;
    if (k == 1) {
      res.status = 500;
    } else if (k == 2) {
      res.status = 429;
    } else {
      res.set_content(R"({"choices":[{"message":{"content":"ok"}}]})", "application/json");
    }
  });
  HttpChatProvider p(config("openai"));
  EXPECT_EQ(p.complete({{"user", "hi"}}, {}), "ok");
  EXPECT_EQ(hits.load(), 3);
}

TEST_F(LocalServer, GivesUpWithTransportError) {
  server.Post("/v1/chat", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 503;
  });
  HttpChatProvider p(config("openai"));
  EXPECT_THROW(p.complete({{"user", "hi"}}, {}), TransportError);
  EXPECT_EQ(hits.load(), 3);
}

TEST_F(LocalServer, ClientErrorsAreNotRetried) {
  server.Post("/v1/chat", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 400;
  });
  HttpChatProvider p(config("openai"));
  EXPECT_THROW(p.complete({{"user", "hi"}}, {}), TransportError);
  EXPECT_EQ(hits.load(), 1);
}

TEST_F(LocalServer, TransportFailureMarksSample) {
  server.Post("/v1/chat", [&](const httplib::Request&, httplib::Response& res) { res.status = 502; });
  auto cfg = config("openai");
  cfg.samples = 2;
  HttpChatProvider p(cfg);
  MemorySink sink;
  auto runs = run_experiment({"I0"}, PromptFamily::original(), cfg, p, sink, "tf");
  EXPECT_EQ(runs[0].transport_failures(), 2);
  for (const auto& j : sink.lines()) EXPECT_EQ(j["status"], "transport_error");
}

TEST(Provider, MissingKeyIsConfigError) {
  ProviderConfig c;
  c.endpoint = "http://127.0.0.1:1/x";
  c.env_key_name = "FAIRDIV_TEST_SURELY_UNSET_KEY";
  EXPECT_THROW(HttpChatProvider{c}, ConfigError);
  c.style = "other";
  EXPECT_THROW(c.validate(), ConfigError);
}
