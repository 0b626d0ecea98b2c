#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "types.hpp"

namespace vadrules {

/// A prompt with named `{placeholder}` slots. Rendering with a complete
/// placeholder map yields placeholder-free text.
struct PromptTemplate {
  struct Segment {
    bool is_placeholder = false;
    std::string text;  // literal text, or the placeholder name

    friend bool operator==(const Segment&, const Segment&) = default;
  };

  std::string name;  // one of p_v, p_g, p_a, p_k, p_r
  std::vector<Segment> segments;

  static PromptTemplate parse(std::string name, std::string_view text) {
    PromptTemplate tmpl;
    tmpl.name = std::move(name);
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t open = text.find('{', pos);
      if (open == std::string_view::npos) {
        tmpl.segments.push_back({false, std::string(text.substr(pos))});
        break;
      }
      std::size_t close = text.find('}', open);
      if (close == std::string_view::npos) {
        throw ParseError("unterminated placeholder in prompt template " + tmpl.name);
      }
      if (open > pos) tmpl.segments.push_back({false, std::string(text.substr(pos, open - pos))});
      tmpl.segments.push_back({true, std::string(text.substr(open + 1, close - open - 1))});
      pos = close + 1;
    }
    return tmpl;
  }

  std::string render(const std::map<std::string, std::string>& values) const {
    std::string out;
    for (const auto& segment : segments) {
      if (!segment.is_placeholder) {
        out += segment.text;
        continue;
      }
      auto it = values.find(segment.text);
      if (it == values.end()) {
        throw ConfigError("missing placeholder '" + segment.text + "' for prompt " + name);
      }
      out += it->second;
    }
    return out;
  }

  std::vector<std::string> placeholders() const {
    std::vector<std::string> names;
    for (const auto& segment : segments) {
      if (segment.is_placeholder) names.push_back(segment.text);
    }
    return names;
  }

  friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;
};

namespace prompts {

/// Frame-perception prompt, long form with the step-by-step nudge. Default.
inline PromptTemplate perception() {
  return PromptTemplate::parse(
      "p_v",
      "How many people are in the image and what is each of them doing? "
      "What are in the image other than people? Think step by step.");
}

/// Frame-perception prompt, short two-question form.
inline PromptTemplate perception_short() {
  return PromptTemplate::parse(
      "p_v", "What are people doing? What are in the images other than people?");
}

/// Keyword-extraction prompt over a rule listing.
inline PromptTemplate keyword_extraction() {
  return PromptTemplate::parse(
      "p_k",
      "You will be given a set of rules for detecting abnormal activities and objects; "
      "please extract the anomaly keywords, activities using \"ing\" verbs, and anomaly "
      "objects using nouns, and provide a combined Python list with each represented by "
      "a single word. The output should be in the format: [\"object1\", ..., \"activity1\", "
      "\"activity2\", ...]. Now you are given {rules}:");
}

/// Recheck prompt: double-check a dummy answer against the rules.
inline PromptTemplate recheck() {
  return PromptTemplate::parse(
      "p_r",
      "You will be given an description of frame, your task is to double check my initial "
      "anomaly detection result based on the rules.\n"
      "The rules are: {rules}\n"
      "My initial result is {dummy}\n"
      "First, if human activity is present, which rule is matching? List the rule category, "
      "e.g., normal or anomaly, with the rule number.\n"
      "Second, if an environmental object is present, which rule is matching? List the rule "
      "category, e.g., normal or anomaly, with the rule number.\n"
      "Third, are the human activities or environmental objects anomaly? Answer: anomaly, "
      "if ANY anomaly rule (even if only one, no matter human activities or environmental "
      "objects) matches, otherwise answer: normal.\n"
      "Now you are given the frame {description}, think step by step.");
}

inline std::string heading_scaffold(bool anomaly, bool split_human_env) {
  const char* kind = anomaly ? "Anomaly" : "Normal";
  std::string out;
  if (split_human_env) {
    out = std::string("**Rules for ") + kind + " Human Activities:\n1. \n**Rules for " + kind +
          " Environmental Objects:\n1. ";
  } else {
    out = std::string("**Rules for ") + kind + ":\n1. ";
  }
  return out;
}

/// Multi-turn rule-generation conversation. Strategy toggles drop their
/// corresponding turns or phrasing (ablation runs).
inline std::vector<Message> rule_generation_messages(const std::string& dataset,
                                                     const std::string& descriptions,
                                                     const StrategyToggles& toggles) {
  auto system = PromptTemplate::parse(
      "p_g",
      "As a surveillance monitor for urban safety using the {dataset} dataset, my job is to "
      "derive rules for detecting abnormal human activities or environmental objects.");

  std::string derive_normal =
      "Based on the assumption that the given frame descriptions are normal, "
      "Please derive rules for normal";
  derive_normal += toggles.abstract_and_concrete
                       ? ", start from an abstract concept, and then generalize to concrete "
                         "activities or objects."
                       : ".";

  std::string derive_anomaly =
      "Compared with the above rules for normal, can you provide potential rules for anomaly?";
  if (toggles.abstract_and_concrete) {
    derive_anomaly +=
        " Please start from an abstract concept then generalize to concrete activities or "
        "objects, compared with normal ones.";
  }

  std::string ask = "Now you are given frame description {descriptions}. What are the ";
  ask += toggles.normal_and_anomaly ? "Normal and Anomaly" : "Normal";
  ask += " rules you have? Think step by step. Reply following the above format";
  ask += toggles.abstract_and_concrete
             ? ", start from an abstract concept and then generalize to concrete activities "
               "or objects."
             : ".";
  ask += " List them using short terms, not an entire sentence.";

  std::vector<Message> messages;
  messages.push_back({Role::system, system.render({{"dataset", dataset}})});
  messages.push_back({Role::user, derive_normal});
  messages.push_back({Role::assistant, heading_scaffold(false, toggles.human_and_environment)});
  if (toggles.normal_and_anomaly) {
    messages.push_back({Role::user, derive_anomaly});
    messages.push_back({Role::assistant, heading_scaffold(true, toggles.human_and_environment)});
  }
  messages.push_back(
      {Role::user, PromptTemplate::parse("p_g", ask).render({{"descriptions", descriptions}})});
  return messages;
}

/// Multi-turn rule-aggregation conversation over n independently generated
/// rule listings.
inline std::vector<Message> rule_aggregation_messages(const std::string& dataset,
                                                      std::size_t n_sets,
                                                      const std::string& rule_sets_block) {
  auto system = PromptTemplate::parse(
      "p_a",
      "As a surveillance monitor for urban safety using the {dataset} dataset, my job is to "
      "organize rules for detecting abnormal activities and objects.");
  auto brief = PromptTemplate::parse(
      "p_a",
      "You are given {n} independent sets of rules for Normal and Anomaly. For the organized "
      "normal Rules, list the given normal rules with high-frequency elements For the "
      "organized anomaly Rules, list all the given anomaly rules");
  auto ask = PromptTemplate::parse(
      "p_a",
      "Now you are given {n} independent sets of rules as the sublists of {rule_sets}. What "
      "rules for Anomaly and Normal do you get? Think step by step, and reply following the "
      "above format.");

  const std::string n_str = std::to_string(n_sets);
  std::string scaffold = "**Rules for Anomaly Human Activities:\n1. \n"
                         "**Rules for Anomaly Environmental Objects:\n1. \n"
                         "**Rules for Normal Human Activities:\n1. \n"
                         "**Rules for Normal Environmental Objects:\n1. ";

  std::vector<Message> messages;
  messages.push_back({Role::system, system.render({{"dataset", dataset}})});
  messages.push_back({Role::user, brief.render({{"n", n_str}})});
  messages.push_back({Role::assistant, std::move(scaffold)});
  messages.push_back({Role::user, ask.render({{"n", n_str}, {"rule_sets", rule_sets_block}})});
  return messages;
}

/// Multiple-choice reasoning-evaluation conversation.
inline std::vector<Message> choice_messages(const std::string& rules_text,
                                            const std::string& description,
                                            const std::string& choices_block) {
  auto system = PromptTemplate::parse(
      "p_r",
      "You will be given a description of the frame and four choices. Your task is to make "
      "the correct choice based on the rules. The rules are: {rules}");
  auto user = PromptTemplate::parse(
      "p_r",
      "Description: {description}\nChoices: {choices}\nChoose just one correct answer from "
      "the options (A, B, C, or D) and output without any explanation. Please Answer:");
  return {{Role::system, system.render({{"rules", rules_text}})},
          {Role::user, user.render({{"description", description}, {"choices", choices_block}})}};
}

}  // namespace prompts
}  // namespace vadrules
