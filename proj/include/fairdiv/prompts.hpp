#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairdiv/corpus.hpp"
#include "fairdiv/engine.hpp"
#include "fairdiv/io.hpp"

namespace fairdiv {

struct PromptError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Message {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;

  bool operator==(const Message&) const = default;
};

using Messages = std::vector<Message>;

enum class FamilyKind {
  original_two_stage,
  template_single_stage,
  modified_intention,
  persona,
  objective,
  feedback_refinement,
  chain_of_thought,
  menu_selection,
  role_assigned,
};

enum class Intention { fairest, most_desirable, acceptable_by_all, an_allocation };

enum class MenuContext { none, human_percentages, explanations };

struct PromptFamily {
  FamilyKind kind = FamilyKind::original_two_stage;
  Intention intention = Intention::fairest;
  Notion notion = Notion::EQ_star;
  int max_retries = 2;
  std::string example_instance_id = "I0";
  std::vector<Outcome> options;
  std::vector<Rational> option_percents;  // human_percentages context
  MenuContext context = MenuContext::none;
  int role_agent = 0;

  bool two_stage() const { return kind != FamilyKind::template_single_stage; }

  static PromptFamily original() { return {}; }
  static PromptFamily template_single() {
    PromptFamily f;
    f.kind = FamilyKind::template_single_stage;
    return f;
  }
  static PromptFamily intention_variant(Intention i) {
    PromptFamily f;
    f.kind = FamilyKind::modified_intention;
    f.intention = i;
    return f;
  }
  static PromptFamily persona_for(Notion n) {
    PromptFamily f;
    f.kind = FamilyKind::persona;
    f.notion = n;
    return f;
  }
  static PromptFamily objective_for(Notion n) {
    PromptFamily f;
    f.kind = FamilyKind::objective;
    f.notion = n;
    return f;
  }
  static PromptFamily feedback(Notion n, int max_retries = 2) {
    PromptFamily f;
    f.kind = FamilyKind::feedback_refinement;
    f.notion = n;
    f.max_retries = max_retries;
    return f;
  }
  static PromptFamily cot(std::string example_id = "I0") {
    PromptFamily f;
    f.kind = FamilyKind::chain_of_thought;
    f.example_instance_id = std::move(example_id);
    return f;
  }
  static PromptFamily menu(std::vector<Outcome> options, MenuContext ctx = MenuContext::none,
                           std::vector<Rational> percents = {}) {
    PromptFamily f;
    f.kind = FamilyKind::menu_selection;
    f.options = std::move(options);
    f.context = ctx;
    f.option_percents = std::move(percents);
    return f;
  }
  static PromptFamily role(int agent) {
    PromptFamily f;
    f.kind = FamilyKind::role_assigned;
    f.role_agent = agent;
    return f;
  }
};

inline std::string family_name(FamilyKind k) {
  switch (k) {
    case FamilyKind::original_two_stage: return "original";
    case FamilyKind::template_single_stage: return "template";
    case FamilyKind::modified_intention: return "intention";
    case FamilyKind::persona: return "persona";
    case FamilyKind::objective: return "objective";
    case FamilyKind::feedback_refinement: return "feedback";
    case FamilyKind::chain_of_thought: return "cot";
    case FamilyKind::menu_selection: return "menu";
    case FamilyKind::role_assigned: return "role";
  }
  return "unknown";
}

inline std::optional<FamilyKind> parse_family_kind(const std::string& s) {
  for (auto k : {FamilyKind::original_two_stage, FamilyKind::template_single_stage, FamilyKind::modified_intention,
                 FamilyKind::persona, FamilyKind::objective, FamilyKind::feedback_refinement,
                 FamilyKind::chain_of_thought, FamilyKind::menu_selection, FamilyKind::role_assigned})
    if (family_name(k) == s) return k;
  return std::nullopt;
}

inline std::string intention_name(Intention i) {
  switch (i) {
    case Intention::fairest: return "fairest";
    case Intention::most_desirable: return "most_desirable";
    case Intention::acceptable_by_all: return "acceptable_by_all";
    case Intention::an_allocation: return "an_allocation";
  }
  return "fairest";
}

inline std::optional<Intention> parse_intention(const std::string& s) {
  for (auto i : {Intention::fairest, Intention::most_desirable, Intention::acceptable_by_all, Intention::an_allocation})
    if (intention_name(i) == s) return i;
  return std::nullopt;
}

inline std::string menu_context_name(MenuContext c) {
  switch (c) {
    case MenuContext::none: return "none";
    case MenuContext::human_percentages: return "human_percentages";
    case MenuContext::explanations: return "explanations";
  }
  return "none";
}

inline std::optional<MenuContext> parse_menu_context(const std::string& s) {
  for (auto c : {MenuContext::none, MenuContext::human_percentages, MenuContext::explanations})
    if (menu_context_name(c) == s) return c;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Text pieces

namespace text {

inline const char* kOpening = "Consider a problem where goods need to be allocated among different individuals.";
inline const char* kIndivisible =
    "The goods to be allocated are indivisible, that is, you have to give the good as a whole to one person or you "
    "can decide to not allocate it at all, i.e., you throw it away.";
inline const char* kClosing =
    "Your task is to determine the allocation that you consider to be the fairest - there are no 'correct' or "
    "'incorrect' answers.";
inline const char* kRoleClosing =
    "Your task is to determine the allocation that you consider the fairest- no 'correct' or 'incorrect' answers "
    "exist.";
inline const char* kExtractionHead = "Please present the allocation you have selected in the following JSON format:";

// "a", "a, and b", "a, b, and c"
inline std::string list_join(const std::vector<std::string>& items) {
  if (items.empty()) return "";
  if (items.size() == 1) return items[0];
  std::string out;
  for (size_t k = 0; k + 1 < items.size(); ++k) out += items[k] + ", ";
  return out + "and " + items.back();
}

// "A and D", "A, B, and C"
inline std::string letters_join(const std::vector<std::string>& letters) {
  if (letters.size() == 2) return letters[0] + " and " + letters[1];
  return list_join(letters);
}

inline std::string number(const Rational& r) { return to_display(r); }

inline std::string goods_phrase(const Instance& in) {
  std::vector<std::string> goods;
  for (int g = 0; g < in.m(); ++g) goods.push_back(good_label(g));
  std::string count = std::to_string(in.m()) + (in.m() == 1 ? " good" : " goods");
  if (in.m() == 0) return count;
  return count + ", namely " + list_join(goods);
}

inline std::string imagine_sentence(const Instance& in) {
  std::vector<std::string> agents;
  for (int i = 0; i < in.n(); ++i) agents.push_back(agent_label(i));
  return "Imagine that the individuals involved, i.e. " + list_join(agents) +
         ", approach you and ask you to determine a fair allocation of " + goods_phrase(in) + ". " + kIndivisible;
}

inline std::string role_sentence(const Instance& in) {
  std::vector<std::string> agents;
  for (int i = 0; i < in.n(); ++i)
    if (!is_role(in, i)) agents.push_back(agent_label(i));
  agents.push_back("You");
  return "Your task is to allocate " + goods_phrase(in) + ", among the individuals involved, i.e. " +
         list_join(agents) +
         ". Pick an allocation you consider to be fair and that you think is acceptable to the other participants "
         "(assume that your proposal can only be realized if all participants agree). " +
         kIndivisible;
}

inline std::string intro(const Instance& in) {
  return std::string(kOpening) + " " + (in.decision_maker_role ? role_sentence(in) : imagine_sentence(in));
}

inline std::string value_lines(const Instance& in) {
  std::string out;
  for (int i = 0; i < in.n(); ++i) {
    std::vector<std::string> parts;
    for (int g = 0; g < in.m(); ++g) parts.push_back("for " + good_label(g) + " is " + number(in.value(i, g)));
    if (i) out += "\n";
    out += (is_role(in, i) ? std::string("Your") : agent_label(i) + "'s") + " value " + list_join(parts) + ".";
  }
  return out;
}

inline std::string money_paragraph(const Instance& in) {
  std::string p = number(in.money);
  return "A total of " + p +
         " units of money are also available for allocation. This amount of money is worth exactly as much as a good "
         "of the same value, for each individual. Since this is a divisible resource, parts of it can be allocated to "
         "different agents, although the total money allocated cannot exceed " +
         p + " units.";
}

// intro, values and money clause; the closing line is supplied by the caller
inline std::string problem_body(const Instance& in) {
  std::string out = intro(in) + "\n\n" + value_lines(in);
  if (in.money > 0) out += "\n\n" + money_paragraph(in);
  return out;
}

inline std::string recipient_phrase(const Instance& in, int i) {
  return is_role(in, i) ? "You get" : agent_label(i) + " gets";
}

inline std::string describe_outcome(const Instance& in, const Outcome& o) {
  std::vector<std::string> clauses;
  std::vector<std::string> discarded;
  for (int g = 0; g < in.m(); ++g)
    if (o.assignment[g].discarded()) discarded.push_back(good_letter(g));
  for (int i = 0; i < in.n(); ++i) {
    std::vector<std::string> letters;
    for (int g = 0; g < in.m(); ++g)
      if (!o.assignment[g].discarded() && o.assignment[g].index() == i) letters.push_back(good_letter(g));
    std::string what;
    if (letters.size() == 1) what = "Good " + letters[0];
    else if (!letters.empty()) what = "Goods " + letters_join(letters);
    const Rational& p = o.payments[i];
    if (p > 0) {
      std::string money = number(p) + (p == 1 ? " unit of money" : " units of money");
      what = what.empty() ? money : what + " and " + money;
    }
    if (what.empty()) what = "nothing";
    clauses.push_back(recipient_phrase(in, i) + " " + what);
  }
  if (discarded.size() == 1) clauses.push_back("Good " + discarded[0] + " is discarded");
  else if (!discarded.empty()) clauses.push_back("Goods " + letters_join(discarded) + " are discarded");
  return list_join(clauses) + ".";
}

inline std::string payoffs_sentence(const Instance& in, const PayoffVector& u) {
  bool equal = std::all_of(u.utilities.begin(), u.utilities.end(), [&](const Rational& x) { return x == u[0]; });
  if (equal && in.n() > 1) return "Each Person gets " + number(u[0]) + " units of utility.";
  std::vector<std::string> parts;
  for (int i = 0; i < in.n(); ++i) {
    std::string s = recipient_phrase(in, i) + " " + number(u[i]);
    if (i == 0) s += " units of utility";
    else if (i + 1 < in.n()) s += " units";
    parts.push_back(s);
  }
  return list_join(parts) + ".";
}

inline std::string properties_sentence(const NotionSet& s) {
  std::vector<std::string> names, glosses;
  auto add = [&](bool on, const char* name, const char* gloss) {
    if (!on) return;
    names.push_back(name);
    glosses.push_back(gloss);
  };
  add(s.eq_star, "is equitable", "it ensures perfect equality");
  add(s.eq && !s.eq_star, "is equitable", "it minimizes the difference between the payoffs");
  add(s.ef, "is envy-free", "no agent is envious of another");
  add(s.rmm, "satisfies the maximin principle", "it maximizes the minimum payoff");
  add(s.usw, "maximizes the total utility", "it maximizes the sum of payoffs");
  add(s.po, "is Pareto-optimal",
      "there is no allocation where all agents are as well-off and at least one agent is strictly better-off");
  if (names.empty()) return "This allocation satisfies none of the properties listed for the other options.";
  auto join_and = [](const std::vector<std::string>& v) {
    std::string out;
    for (size_t k = 0; k < v.size(); ++k) out += (k ? (k + 1 == v.size() ? " and " : ", ") : "") + v[k];
    return out;
  };
  return "This allocation " + join_and(names) + ", i.e. " + join_and(glosses) + ".";
}

inline std::string format_percent_1(const Rational& p) {
  Rational scaled = p * 10;
  Integer num = scaled.get_num(), den = scaled.get_den();
  // round half away from zero to one decimal
  Integer q = (2 * num + den) / (2 * den);
  std::string digits = q.get_str();
  if (digits.size() < 2) digits.insert(0, 2 - digits.size(), '0');
  return digits.substr(0, digits.size() - 1) + "." + digits.back();
}

inline std::string intention_closing(Intention i) {
  switch (i) {
    case Intention::fairest: return kClosing;
    case Intention::most_desirable:
      return "Your task is to determine the allocation that you consider to be the most desirable - there are no "
             "'correct' or 'incorrect' answers.";
    case Intention::acceptable_by_all:
      return "Your task is to determine the allocation that you think is acceptable by all - there are no 'correct' "
             "or 'incorrect' answers.";
    case Intention::an_allocation:
      return "Your task is to determine an allocation - there are no 'correct' or 'incorrect' answers.";
  }
  return kClosing;
}

inline std::string objective_closing(Notion n) {
  switch (n) {
    case Notion::EQ:
    case Notion::EQ_star:
      return "Your task is to determine the allocation in which all individuals have exactly the same value for their "
             "respective bundles. In other words, all individuals should value their bundles equally.";
    case Notion::EF:
      return "Your task is to determine the allocation where each individual prefers their own bundle the most. In "
             "other words, there should be no envy between any pair of individuals.";
    case Notion::RMM:
      return "Your task is to determine the allocation where the value derived by the worst-off individual is the "
             "most across all possible allocations. In other words, find the allocation that satisfies the "
             "\"Max-Min\" criterion.";
    case Notion::USW:
      return "Your task is to determine the allocation that maximizes the sum of values derived by all individuals "
             "from their respective bundles.";
    case Notion::PO: break;
  }
  throw PromptError("no objective wording for " + notion_name(n));
}

inline std::string persona_closing(Notion n) {
  switch (n) {
    case Notion::EQ:
    case Notion::EQ_star:
      return "You are someone who cares about equitability, that is, all individuals should value their bundles "
             "equally. Your task is to determine the allocation that you consider to be the fairest.";
    case Notion::EF:
      return "You are someone who cares about envy-freeness, that is, no individual should prefer the bundle of "
             "another individual. Your task is to determine the allocation that you consider to be the fairest.";
    case Notion::RMM:
      return "You are someone who cares about the worst-off individual, that is, the value derived by the worst-off "
             "individual should be as large as possible. Your task is to determine the allocation that you consider "
             "to be the fairest.";
    case Notion::USW:
      return "You are someone who cares about efficiency, that is, the sum of values derived by all individuals "
             "should be as large as possible. Your task is to determine the allocation that you consider to be the "
             "fairest.";
    case Notion::PO: break;
  }
  throw PromptError("no persona wording for " + notion_name(n));
}

inline std::string feedback_text(Notion n) {
  switch (n) {
    case Notion::EQ:
    case Notion::EQ_star:
      return "The allocation that you provided does not minimize the inequality between the individuals involved. "
             "Please return an allocation that does minimize the difference between the payoffs received by "
             "individuals.";
    case Notion::RMM:
      return "The allocation that you provided does not maximize the payoff received by the worst-off individual. "
             "Please return an allocation that does maximize the payoff of the worst-off individual.";
    case Notion::EF:
      return "The allocation that you provided does not minimize the envy between the individuals involved. Please "
             "return an allocation that does minimize the envy between individuals.";
    default: break;
  }
  throw PromptError("unsupported feedback notion " + notion_name(n));
}

inline std::string menu_closing(const Instance& in, const PromptFamily& f) {
  for (const auto& o : f.options) {
    auto v = outcome_violations(in, o);
    if (!v.empty()) throw PromptError("menu option invalid for " + in.id + ": " + ValidationError::join(v));
  }
  if (f.options.empty()) throw PromptError("menu needs at least one option");
  std::string out;
  switch (f.context) {
    case MenuContext::none: {
      out = "Your task is to determine the allocation that you consider to be the fairest among the options given "
            "below:\n\n";
      for (size_t k = 0; k < f.options.size(); ++k)
        out += "Allocation-" + std::to_string(k + 1) + ": " + describe_outcome(in, f.options[k]) + "\n";
      out += "\nPlease indicate the allocation you think is fairest and explain the reasons behind your choice.";
      return out;
    }
    case MenuContext::human_percentages: {
      if (f.option_percents.size() != f.options.size())
        throw PromptError("human-percentage menu needs one percentage per option");
      out = "Your task is to determine the allocation that you consider fairest. For your reference, human "
            "respondents chose the following allocations more frequently (with the percentage of responses "
            "corresponding to each allocation indicated in brackets):\n\n";
      for (size_t k = 0; k < f.options.size(); ++k) {
        if (k) out += "\n";
        out += "Allocation-" + std::to_string(k + 1) + " (" + format_percent_1(f.option_percents[k]) +
               "% responses): " + describe_outcome(in, f.options[k]);
      }
      return out;
    }
    case MenuContext::explanations: {
      out = "Your task is to determine the allocation that you consider fairest among the options given below:\n\n";
      for (size_t k = 0; k < f.options.size(); ++k) {
        const auto& o = f.options[k];
        if (k) out += "\n";
        out += "Option " + std::to_string(k + 1) + ":\n{\n";
        out += "    Allocation: " + describe_outcome(in, o) + "\n";
        out += "    Payoffs: " + payoffs_sentence(in, payoff(in, o)) + "\n";
        out += "    Properties: " + properties_sentence(label(in, o)) + "\n}";
      }
      return out;
    }
  }
  return out;
}

}  // namespace text

// ---------------------------------------------------------------------------
// Rendering

inline Instance with_role(const Instance& in, int agent) {
  if (agent < 0 || agent >= in.n()) throw PromptError("role agent out of range for " + in.id);
  Instance out = in;
  out.decision_maker_role = agent;
  return out;
}

// Instance the prompt is actually about (role_assigned rebinds the decision maker).
inline Instance prompt_instance(const Instance& in, const PromptFamily& f) {
  return f.kind == FamilyKind::role_assigned ? with_role(in, f.role_agent) : in;
}

inline std::string render_extraction_skeleton(const Instance& in) {
  std::string out = std::string(text::kExtractionHead) + "\n{\n";
  for (int g = 0; g < in.m(); ++g) {
    std::string G = good_label(g);
    out += "\"" + G + "\": \"<person to whom " + G + " is allocated, \"None\" if " + G + " is discarded>\",\n";
  }
  if (in.money > 0) {
    for (int i = 0; i < in.n(); ++i) {
      std::string who = is_role(in, i) ? "You" : agent_label(i);
      out += "\"" + money_key(in, i) + "\": \"<money allocated to " + who + ", 0 if no money was allocated to " + who +
             ">\"" + (i + 1 < in.n() ? "," : "") + "\n";
    }
  }
  return out + "}";
}

inline std::string render_prompt_text(const Instance& raw, const PromptFamily& f, const Corpus& corpus) {
  const Instance in = prompt_instance(raw, f);
  switch (f.kind) {
    case FamilyKind::original_two_stage:
    case FamilyKind::role_assigned:
      return text::problem_body(in) + "\n\n" + (in.decision_maker_role ? text::kRoleClosing : text::kClosing);
    case FamilyKind::template_single_stage:
      return text::problem_body(in) + "\n\n" + (in.decision_maker_role ? text::kRoleClosing : text::kClosing) +
             "\n\n" + render_extraction_skeleton(in);
    case FamilyKind::modified_intention:
      return text::problem_body(in) + "\n\n" + text::intention_closing(f.intention);
    case FamilyKind::objective:
      return text::problem_body(in) + "\n\n" + text::objective_closing(f.notion);
    case FamilyKind::persona:
    case FamilyKind::feedback_refinement:
      if (f.kind == FamilyKind::feedback_refinement) text::feedback_text(f.notion);
      return text::problem_body(in) + "\n\n" + text::persona_closing(f.notion);
    case FamilyKind::chain_of_thought: {
      const std::string& example = corpus.cot_example(f.example_instance_id);
      std::string target = in.decision_maker_role ? text::role_sentence(in) : text::imagine_sentence(in);
      std::string out = "Consider the following problem where goods need to be allocated among different "
                        "individuals:\n" +
                        example +
                        "\n\nNow, consider another problem where goods need to be allocated among different "
                        "individuals. " +
                        target + "\n\n" + text::value_lines(in);
      if (in.money > 0) out += "\n\n" + text::money_paragraph(in);
      return out + "\n\nYour task is to determine the allocation that you think is fairest.";
    }
    case FamilyKind::menu_selection:
      return text::problem_body(in) + "\n\n" + text::menu_closing(in, f);
  }
  throw PromptError("unknown prompt family");
}

inline Messages render_prompt(const Instance& in, const PromptFamily& f, const Corpus& corpus = default_corpus()) {
  return {Message{"user", render_prompt_text(in, f, corpus)}};
}

inline std::string render_extraction_text(const Instance& in, const std::string& first_prompt,
                                          const std::string& response) {
  return "Previously, I asked you the following question:\n\"" + first_prompt + ".\"\n\nAnd this was your response\n\"" +
         response + "\"\n\n" + render_extraction_skeleton(in);
}

inline Messages render_extraction_prompt(const Instance& in, const std::string& first_prompt,
                                         const std::string& response) {
  return {Message{"user", render_extraction_text(in, first_prompt, response)}};
}

inline std::string render_feedback_text(Notion notion, const std::string& persona_prompt, const std::string& latest) {
  return "Previously, I asked you the following question:\n\"" + persona_prompt + ".\"\n\nAnd this was your response\n\"" +
         latest + "\"\n\n" + text::feedback_text(notion);
}

// Options in the order the human reference lists them, with their percentages.
inline PromptFamily human_menu(const HumanReference& ref, MenuContext ctx = MenuContext::none) {
  std::vector<Outcome> options;
  std::vector<Rational> percents;
  for (const auto& e : ref.entries) {
    options.push_back(e.outcome);
    percents.push_back(e.percent);
  }
  return PromptFamily::menu(std::move(options), ctx, std::move(percents));
}

}  // namespace fairdiv
