#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "fairdiv/fairdiv.hpp"

using namespace fairdiv;

namespace {

struct Fatal : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::unique_ptr<Corpus> g_corpus;

const Corpus& corpus() { return *g_corpus; }

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Fatal("cannot write " + path);
  f << content;
}

std::string payoff_str(const PayoffVector& u) { return format_vector(u.utilities); }

std::string outcome_row(const Instance& in, const Outcome& o) {
  std::ostringstream os;
  auto u = payoff(in, o);
  os << describe_assignment(in, o.assignment);
  if (in.money > 0) os << "  p=" << format_vector(o.payments);
  os << "  u=" << payoff_str(u) << "  " << notion_key(label(in, o));
  return os.str();
}

std::string outcome_csv(const Instance& in, const Outcome& o) {
  auto u = payoff(in, o);
  std::ostringstream os;
  os << csv_escape(in.id) << ',' << csv_escape(describe_assignment(in, o.assignment)) << ','
     << csv_escape(format_vector(o.payments)) << ',' << csv_escape(format_vector(u.utilities)) << ','
     << to_display(disparity(u)) << ',' << notion_key(label(in, o)) << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeOpts {
  std::string id;
  std::string notion;
  long denominator = 1;
  bool full = false;
  bool full_money = false;
  std::string csv;
};

int cmd_analyze(const AnalyzeOpts& o) {
  const Instance& in = corpus().instance(o.id);
  auto s = summarize(in);
  std::cout << in.id << ": " << in.n() << " agents, " << in.m() << " goods, P = " << to_display(in.money) << "\n";
  std::cout << "  min disparity   " << to_display(s.min_disparity) << "\n";
  std::cout << "  maximin value   " << to_display(s.maximin_value) << "\n";
  std::cout << "  max welfare     " << to_display(s.max_welfare) << "\n";
  std::cout << "  goods welfare   " << to_display(s.goods_welfare_max) << "\n";
  std::cout << "  allocations     " << allocation_count(in) << "\n";

  std::string csv = "instance_id,assignment,payments,payoffs,disparity,notion_key\n";
  if (!o.notion.empty()) {
    NotionSet req = parse_notion_set(o.notion);
    if (req.empty()) throw Fatal("unknown notion '" + o.notion + "'");
    auto outs = optimal_outcomes(in, req, SearchOptions{o.denominator, o.full_money});
    std::cout << "\n" << o.notion << " outcomes (payment grid 1/" << o.denominator << "): " << outs.size() << "\n";
    for (const auto& x : outs) {
      std::cout << "  " << outcome_row(in, x) << "\n";
      csv += outcome_csv(in, x);
    }
  }
  if (o.full) {
    std::cout << "\nall outcomes";
    if (in.money > 0) std::cout << " (payment grid 1/" << o.denominator << ")";
    std::cout << ":\n";
    int64_t count = 0;
    for_each_outcome(in, o.denominator, [&](const Outcome& x) {
      std::cout << "  " << outcome_row(in, x) << "\n";
      csv += outcome_csv(in, x);
      ++count;
    });
    std::cout << "  (" << count << " rows)\n";
  }
  if (!o.csv.empty()) write_file(o.csv, csv);
  return 0;
}

// ---------------------------------------------------------------------------
// sources

// A source is a JSONL path, "human", or "agent:<policy>".
std::vector<LabeledResponse> load_source(const std::string& src, const std::vector<std::string>& ids, int64_t total) {
  if (src == "human") {
    std::vector<LabeledResponse> out;
    auto use = ids.empty() ? corpus().human_ids() : ids;
    for (const auto& id : use) {
      auto part = expand_reference(corpus().instance(id), corpus().human(id), total);
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  if (src.rfind("agent:", 0) == 0) {
    auto kind = parse_policy_kind(src.substr(6));
    if (!kind) throw Fatal("unknown agent policy '" + src.substr(6) + "'");
    std::vector<LabeledResponse> out;
    auto use = ids.empty() ? corpus().human_ids() : ids;
    for (const auto& id : use) {
      const Instance& in = corpus().instance(id);
      std::vector<Policy> policies;
      if (*kind == PolicyKind::round_robin)
        for (auto& ord : all_orders(in.n())) policies.push_back(Policy::round_robin(ord));
      else
        policies.push_back(Policy{*kind, {}});
      for (const auto& p : policies) out.push_back(classify_one(in, run_agent(p, in), policy_name(p)));
    }
    return out;
  }
  if (!std::filesystem::exists(src)) throw Fatal("source not found: " + src);
  auto all = load_jsonl(src, corpus());
  if (ids.empty()) return all;
  std::vector<LabeledResponse> out;
  for (auto& r : all)
    if (std::find(ids.begin(), ids.end(), r.instance_id) != ids.end()) out.push_back(std::move(r));
  return out;
}

std::vector<LabeledResponse> load_sources(const std::vector<std::string>& srcs, const std::vector<std::string>& ids,
                                          int64_t total) {
  std::vector<LabeledResponse> out;
  for (const auto& s : srcs) {
    auto part = load_source(s, ids, total);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// classify

struct ClassifyOpts {
  std::vector<std::string> sources;
  std::vector<std::string> instances;
  std::string csv;
  std::string json_out;
  size_t top = 0;
  int64_t total = 100;
};

int cmd_classify(const ClassifyOpts& o) {
  auto records = load_sources(o.sources, o.instances, o.total);
  auto tables = aggregate_by_instance(records);
  for (const auto& t : tables) std::cout << table_to_text(t, o.top);
  auto pooled = aggregate_pooled(records);
  std::cout << table_to_text(pooled, o.top);
  tables.push_back(pooled);
  if (!o.csv.empty()) write_file(o.csv, tables_to_csv(tables));
  if (!o.json_out.empty()) {
    json j = json::array();
    for (const auto& r : records) j.push_back(labeled_to_json(corpus().instance(r.instance_id), r));
    write_file(o.json_out, j.dump(2) + "\n");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// compare

struct CompareOpts {
  std::string source;
  std::string against = "human";
  std::vector<std::string> instances;
  int64_t iterations = 100000;
  uint64_t seed = 1;
  std::string csv;
  int64_t total = 100;
};

struct Comparison {
  std::string instance_id;
  DistributionTest mc;
  std::vector<std::pair<Notion, std::optional<FisherResult>>> per_notion;
  std::vector<std::array<int64_t, 4>> notion_counts;
  FrequencyTable a, b;
};

std::vector<int64_t> counts_over(const FrequencyTable& t, const std::vector<std::string>& keys) {
  std::vector<int64_t> out;
  for (const auto& k : keys) out.push_back(t.count(k));
  return out;
}

Comparison compare_group(const std::string& id, const std::vector<LabeledResponse>& a,
                         const std::vector<LabeledResponse>& b, int64_t iterations, uint64_t seed) {
  Comparison c;
  c.instance_id = id;
  c.a = id == "ALL" ? aggregate_pooled(a) : aggregate(a, id);
  c.b = id == "ALL" ? aggregate_pooled(b) : aggregate(b, id);
  std::set<std::string> keyset;
  for (const auto& r : c.a.rows) keyset.insert(r.key);
  for (const auto& r : c.b.rows) keyset.insert(r.key);
  std::vector<std::string> keys(keyset.begin(), keyset.end());
  c.mc = distribution_test(counts_over(c.a, keys), counts_over(c.b, keys), iterations, seed);
  auto sat = [&](const std::vector<LabeledResponse>& rs, Notion n) {
    int64_t s = 0, t = 0;
    for (const auto& r : rs) {
      if (id != "ALL" && r.instance_id != id) continue;
      ++t;
      if (r.valid() && r.notions.has(n)) ++s;
    }
    return std::pair<int64_t, int64_t>{s, t - s};
  };
  for (Notion n : kAllNotions) {
    auto [sa, fa] = sat(a, n);
    auto [sb, fb] = sat(b, n);
    c.notion_counts.push_back({sa, fa, sb, fb});
    std::optional<FisherResult> p;
    if (sa + fa > 0 && sb + fb > 0 && sa + sb > 0 && fa + fb > 0) p = fisher_exact_2x2(sa, fa, sb, fb);
    c.per_notion.emplace_back(n, p);
  }
  return c;
}

std::string pval(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, p < 1e-4 ? "%.3e" : "%.4f", p);
  return buf;
}

int cmd_compare(const CompareOpts& o) {
  auto a = load_source(o.source, o.instances, o.total);
  auto b = load_source(o.against, o.instances, o.total);
  auto ida = instance_ids_in(a), idb = instance_ids_in(b);
  for (const auto& id : o.instances) {
    if (std::find(ida.begin(), ida.end(), id) == ida.end()) throw Fatal("instance " + id + " missing from " + o.source);
    if (std::find(idb.begin(), idb.end(), id) == idb.end()) throw Fatal("instance " + id + " missing from " + o.against);
  }
  std::vector<std::string> shared;
  for (const auto& id : ida)
    if (std::find(idb.begin(), idb.end(), id) != idb.end()) shared.push_back(id);
  if (shared.empty()) throw Fatal("sources share no instances");
  if (ida != idb) {
    std::cerr << "note: comparing the " << shared.size() << " shared instance(s) only\n";
    auto keep = [&](std::vector<LabeledResponse>& v) {
      v.erase(std::remove_if(v.begin(), v.end(),
                             [&](const LabeledResponse& r) {
                               return std::find(shared.begin(), shared.end(), r.instance_id) == shared.end();
                             }),
              v.end());
    };
    keep(a);
    keep(b);
  }
  std::vector<std::string> groups = shared;
  if (groups.size() > 1) groups.push_back("ALL");

  std::ostringstream csv;
  csv << "instance_id,test,notion,a_yes,a_no,b_yes,b_no,p_value\n";
  for (size_t g = 0; g < groups.size(); ++g) {
    auto c = compare_group(groups[g], a, b, o.iterations, o.seed + g);
    std::cout << "== " << c.instance_id << ": " << o.source << " (n=" << c.a.total << ") vs " << o.against
              << " (n=" << c.b.total << ")\n";
    std::cout << "  full distribution (Monte-Carlo, " << c.mc.iterations << " tables, " << c.mc.categories
              << " keys): p = " << pval(c.mc.p) << "\n";
    csv << c.instance_id << ",distribution,," << ",,,," << pval(c.mc.p) << "\n";
    std::cout << "  per notion (exact 2x2):\n";
    for (size_t k = 0; k < c.per_notion.size(); ++k) {
      const auto& [n, p] = c.per_notion[k];
      const auto& cnt = c.notion_counts[k];
      std::string name = notion_name(n);
      std::cout << "    " << name << std::string(5 - std::min<size_t>(5, name.size()), ' ') << cnt[0] << "/"
                << cnt[0] + cnt[1] << " vs " << cnt[2] << "/" << cnt[2] + cnt[3]
                << "  p = " << (p ? pval(p->p) : std::string("n/a")) << "\n";
      csv << c.instance_id << ",fisher_2x2," << name << ',' << cnt[0] << ',' << cnt[1] << ',' << cnt[2] << ','
          << cnt[3] << ',' << (p ? pval(p->p) : std::string()) << "\n";
    }
    std::cout << "  top keys, " << o.source << ":\n" << table_to_text(c.a, 5);
    std::cout << "  top keys, " << o.against << ":\n" << table_to_text(c.b, 5);
  }
  std::cout << "per-notion rates, " << o.source << ":\n" << rates_to_text(per_notion_rates(a));
  std::cout << "per-notion rates, " << o.against << ":\n" << rates_to_text(per_notion_rates(b));
  if (!o.csv.empty()) write_file(o.csv, csv.str());
  return 0;
}

// ---------------------------------------------------------------------------
// run

struct RunOpts {
  std::string config;
  bool yes = false;
  std::string output;
};

int cmd_run(const RunOpts& o) {
  std::ifstream f(o.config);
  if (!f) throw Fatal("cannot read " + o.config);
  auto j = json::parse(f, nullptr, false);
  if (j.is_discarded()) throw Fatal(o.config + ": invalid JSON");
  RunConfig cfg = run_config_from_json(j, corpus());
  if (!o.output.empty()) cfg.output_path = o.output;
  if (!is_local_endpoint(cfg.provider.endpoint) && !o.yes)
    throw Fatal("refusing to query " + cfg.provider.endpoint + " without --yes");
  auto provider = make_provider(cfg.provider);
  JsonlSink sink(cfg.output_path);
  auto runs = run_experiment(cfg.instances, cfg.family, cfg.provider, *provider, sink, cfg.run_id, corpus());
  std::vector<LabeledResponse> records;
  int64_t transport = 0;
  for (const auto& run : runs) {
    transport += run.transport_failures();
    const Instance in = prompt_instance(corpus().instance(run.instance_id), cfg.family);
    for (const auto& s : run.samples) {
      if (s.status == SampleStatus::ok) records.push_back(classify_one(in, *s.outcome, s.model));
      else records.push_back(invalid_response(in.id, s.model, s.failure));
    }
  }
  for (const auto& t : aggregate_by_instance(records)) std::cout << table_to_text(t);
  std::cout << "wrote " << cfg.output_path << "\n";
  if (transport > 0) {
    std::cerr << transport << " sample(s) failed after retries\n";
    return 2;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// agents

struct AgentsOpts {
  std::vector<std::string> instances;
  std::string policy;
  std::string jsonl;
  std::string csv;
};

int cmd_agents(const AgentsOpts& o) {
  auto ids = o.instances.empty() ? corpus().human_ids() : o.instances;
  std::vector<PolicyKind> kinds = {PolicyKind::round_robin, PolicyKind::highest_bidder,
                                   PolicyKind::equitable_waterfill, PolicyKind::maximin, PolicyKind::welfare_max};
  if (!o.policy.empty()) {
    auto k = parse_policy_kind(o.policy);
    if (!k) throw Fatal("unknown policy '" + o.policy + "'");
    kinds = {*k};
  }
  std::unique_ptr<std::ofstream> out;
  if (!o.jsonl.empty()) out = std::make_unique<std::ofstream>(o.jsonl, std::ios::trunc);
  std::ostringstream csv;
  csv << "instance_id,policy,assignment,payments,payoffs,notion_key\n";
  int64_t rr_total = 0, rr_ef = 0;
  for (const auto& id : ids) {
    const Instance& in = corpus().instance(id);
    std::cout << id << "\n";
    for (auto kind : kinds) {
      std::vector<Policy> policies;
      if (kind == PolicyKind::round_robin)
        for (auto& ord : all_orders(in.n())) policies.push_back(Policy::round_robin(ord));
      else
        policies.push_back(Policy{kind, {}});
      for (const auto& p : policies) {
        Outcome x = run_agent(p, in);
        auto r = classify_one(in, x, policy_name(p));
        std::cout << "  " << policy_name(p) << std::string(std::max<int>(1, 26 - (int)policy_name(p).size()), ' ')
                  << outcome_row(in, x) << "\n";
        csv << csv_escape(id) << ',' << csv_escape(policy_name(p)) << ','
            << csv_escape(describe_assignment(in, x.assignment)) << ',' << csv_escape(format_vector(x.payments))
            << ',' << csv_escape(format_vector(r.payoffs->utilities)) << ',' << response_key(r) << '\n';
        if (out) {
          json j = labeled_to_json(in, r);
          j["policy"] = policy_name(p);
          *out << j.dump() << '\n';
        }
        if (kind == PolicyKind::round_robin) {
          ++rr_total;
          if (r.notions.ef) ++rr_ef;
        }
      }
    }
  }
  if (rr_total > 0)
    std::cout << "round-robin EF rate: " << rr_ef << "/" << rr_total << " ("
              << format_percent(100.0 * rr_ef / rr_total) << "%)\n";
  if (!o.csv.empty()) write_file(o.csv, csv.str());
  return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportOpts {
  std::vector<std::string> sources;
  std::vector<std::string> instances;
  std::string against;
  int64_t iterations = 100000;
  uint64_t seed = 1;
  std::string out_dir;
  size_t top = 5;
};

int cmd_report(const ReportOpts& o) {
  auto records = load_sources(o.sources, o.instances, 100);
  std::ostringstream text;
  auto tables = aggregate_by_instance(records);
  text << "# frequency tables\n";
  for (const auto& t : tables) text << table_to_text(t, o.top);
  auto pooled = aggregate_pooled(records);
  text << table_to_text(pooled, o.top);
  tables.push_back(pooled);
  auto rates = per_notion_rates(records);
  text << "# per-notion rates (mean over instances, 95% t interval)\n" << rates_to_text(rates);

  std::ostringstream ecsv;
  ecsv << "instance_id,ef_count,responses,ef_rate\n";
  text << "# EF rate by instance\n";
  auto ef_line = [&](const std::string& id, int64_t ef, int64_t n) {
    double pct = n > 0 ? 100.0 * ef / n : 0.0;
    text << "  " << id << std::string(std::max<int>(1, 6 - (int)id.size()), ' ') << ef << "/" << n << " ("
         << format_percent(pct) << "%)\n";
    ecsv << id << ',' << ef << ',' << n << ',' << format_percent(pct) << "\n";
  };
  int64_t ef_all = 0, n_all = 0, rr_ef = 0, rr_n = 0;
  for (const auto& id : instance_ids_in(records)) {
    int64_t ef = 0, n = 0;
    for (const auto& r : records) {
      if (r.instance_id != id) continue;
      ++n;
      if (r.valid() && r.notions.ef) ++ef;
      if (r.source.rfind("round_robin", 0) == 0) {
        ++rr_n;
        if (r.valid() && r.notions.ef) ++rr_ef;
      }
    }
    ef_line(id, ef, n);
    ef_all += ef;
    n_all += n;
  }
  ef_line("ALL", ef_all, n_all);
  if (rr_n > 0)
    text << "round-robin EF rate: " << rr_ef << "/" << rr_n << " (" << format_percent(100.0 * rr_ef / rr_n) << "%)\n";

  std::ostringstream pcsv;
  pcsv << "instance_id,p_distribution\n";
  if (!o.against.empty()) {
    auto ref = load_source(o.against, instance_ids_in(records), 100);
    text << "# distribution tests vs " << o.against << "\n";
    auto ids = instance_ids_in(records);
    for (size_t g = 0; g < ids.size(); ++g) {
      auto c = compare_group(ids[g], records, ref, o.iterations, o.seed + g);
      text << "  " << ids[g] << "  p = " << pval(c.mc.p) << "\n";
      pcsv << ids[g] << ',' << pval(c.mc.p) << "\n";
    }
  }
  std::cout << text.str();
  if (!o.out_dir.empty()) {
    std::filesystem::create_directories(o.out_dir);
    write_file(o.out_dir + "/tables.csv", tables_to_csv(tables));
    write_file(o.out_dir + "/rates.csv", rates_to_csv(rates));
    write_file(o.out_dir + "/ef_rates.csv", ecsv.str());
    if (!o.against.empty()) write_file(o.out_dir + "/tests.csv", pcsv.str());
    write_file(o.out_dir + "/report.txt", text.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairdiv: fair-division labeling and LLM evaluation harness"};
  app.require_subcommand(1);
  std::string corpus_dir;
  app.add_option("--corpus-dir", corpus_dir, "Directory with instances/, human/ and cot/ overrides");

  AnalyzeOpts ao;
  auto* analyze = app.add_subcommand("analyze", "Summarize an instance and list optimal outcomes");
  analyze->add_option("instance", ao.id, "Instance id (e.g. I7)")->required();
  analyze->add_option("--notion", ao.notion, "Notion or set to search, e.g. EQ* or EF+PO");
  analyze->add_option("--money-denominator", ao.denominator, "Payment grid denominator")->check(CLI::PositiveNumber);
  analyze->add_flag("--full", ao.full, "Print every outcome with its labels");
  analyze->add_flag("--full-money", ao.full_money, "Only outcomes that spend all the money");
  analyze->add_option("--csv", ao.csv, "Write rows as CSV");

  ClassifyOpts co;
  auto* classify = app.add_subcommand("classify", "Label responses and print frequency tables");
  classify->add_option("sources", co.sources, "JSONL files, 'human', or 'agent:<policy>'")->required();
  classify->add_option("--instance", co.instances, "Restrict to these instances");
  classify->add_option("--csv", co.csv, "Write tables as CSV");
  classify->add_option("--json", co.json_out, "Write labeled records as JSON");
  classify->add_option("--top", co.top, "Rows per table (0 = all)");
  classify->add_option("--human-total", co.total, "Synthetic responses per human reference");

  CompareOpts cmp;
  auto* compare = app.add_subcommand("compare", "Test a response source against another");
  compare->add_option("source", cmp.source, "JSONL file, 'human', or 'agent:<policy>'")->required();
  compare->add_option("--against", cmp.against, "Reference source (default human)");
  compare->add_option("--instance", cmp.instances, "Restrict to these instances");
  compare->add_option("--iterations", cmp.iterations, "Monte-Carlo tables")->check(CLI::PositiveNumber);
  compare->add_option("--seed", cmp.seed, "Monte-Carlo seed");
  compare->add_option("--csv", cmp.csv, "Write p-values as CSV");
  compare->add_option("--human-total", cmp.total, "Synthetic responses per human reference");

  RunOpts ro;
  auto* run = app.add_subcommand("run", "Query a provider according to a run config");
  run->add_option("config", ro.config, "Run config JSON")->required();
  run->add_flag("--yes", ro.yes, "Allow requests to non-local endpoints");
  run->add_option("--output", ro.output, "Override output_path");

  AgentsOpts ag;
  auto* agents = app.add_subcommand("agents", "Run baseline allocation procedures");
  agents->add_option("--instance", ag.instances, "Instances (default: those with human data)");
  agents->add_option("--policy", ag.policy, "Single policy to run");
  agents->add_option("--jsonl", ag.jsonl, "Write labeled outcomes as JSONL");
  agents->add_option("--csv", ag.csv, "Write outcomes as CSV");

  ReportOpts rp;
  auto* report = app.add_subcommand("report", "Tables, per-notion rates and tests for response sources");
  report->add_option("sources", rp.sources, "JSONL files, 'human', or 'agent:<policy>'")->required();
  report->add_option("--instance", rp.instances, "Restrict to these instances");
  report->add_option("--against", rp.against, "Reference source for distribution tests");
  report->add_option("--iterations", rp.iterations, "Monte-Carlo tables")->check(CLI::PositiveNumber);
  report->add_option("--seed", rp.seed, "Monte-Carlo seed");
  report->add_option("--out-dir", rp.out_dir, "Write CSV and text outputs here");
  report->add_option("--top", rp.top, "Rows per table (0 = all)");

  CLI11_PARSE(app, argc, argv);

  try {
    std::optional<std::filesystem::path> dir = corpus_dir_from_env();
    if (!corpus_dir.empty()) dir = corpus_dir;
    g_corpus = std::make_unique<Corpus>(dir);
    if (analyze->parsed()) return cmd_analyze(ao);
    if (classify->parsed()) return cmd_classify(co);
    if (compare->parsed()) return cmd_compare(cmp);
    if (run->parsed()) return cmd_run(ro);
    if (agents->parsed()) return cmd_agents(ag);
    if (report->parsed()) return cmd_report(rp);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
