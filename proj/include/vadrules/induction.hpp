#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "backend.hpp"
#include "detail/rng.hpp"
#include "detail/strings.hpp"
#include "perception.hpp"
#include "prompts.hpp"
#include "types.hpp"

namespace vadrules {

struct FrameRef {
  std::string video_id;
  std::int64_t frame_index = 0;

  friend bool operator==(const FrameRef&, const FrameRef&) = default;
};

struct ReferenceBatchPlan {
  std::vector<std::vector<FrameRef>> batches;  // n batches of m frames each
  std::uint64_t seed = 0;
};

/// Draws n batches of m normal reference frames. Sampling is without
/// replacement within a batch and independent across batches; fully
/// deterministic given the seed.
inline ReferenceBatchPlan sample_references(const DescriptionCorpus& corpus,
                                            const InductionConfig& config) {
  config.validate();
  auto normals = corpus.normal_frames();
  if (normals.size() < config.frames_per_batch) {
    throw ConfigError("corpus has " + std::to_string(normals.size()) +
                      " normal frames but batches need " +
                      std::to_string(config.frames_per_batch));
  }
  detail::Rng rng(config.seed);
  ReferenceBatchPlan plan;
  plan.seed = config.seed;
  plan.batches.reserve(config.n_batches);
  for (std::size_t b = 0; b < config.n_batches; ++b) {
    auto indices = rng.sample_indices(normals.size(), config.frames_per_batch);
    std::vector<FrameRef> batch;
    batch.reserve(indices.size());
    for (std::size_t idx : indices) {
      batch.push_back({normals[idx]->video_id, normals[idx]->frame_index});
    }
    plan.batches.push_back(std::move(batch));
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Rule text parsing and rendering

class RuleParseError : public ParseError {
 public:
  RuleParseError(const std::string& message, std::string raw_text)
      : ParseError(message), raw_text_(std::move(raw_text)) {}

  const std::string& raw_text() const { return raw_text_; }

 private:
  std::string raw_text_;
};

namespace detail {

/// Recognizes headings like "**Rules for Anomaly Human Activities:**",
/// case-insensitively, with arbitrary *, #, - decorations. A heading without
/// a recognizable category suffix maps to the human-activities list so that
/// unsplit ablation output still parses.
inline std::optional<RuleSection> match_rule_heading(std::string_view line) {
  std::string lowered = to_lower(trim(line));
  std::size_t start = lowered.find_first_not_of("*#- \t");
  if (start == std::string::npos) return std::nullopt;
  std::string_view rest = std::string_view(lowered).substr(start);
  constexpr std::string_view kPrefix = "rules for ";
  if (rest.substr(0, kPrefix.size()) != kPrefix) return std::nullopt;
  rest.remove_prefix(kPrefix.size());
  bool anomaly;
  if (rest.substr(0, 7) == "anomaly") {
    anomaly = true;
    rest.remove_prefix(7);
  } else if (rest.substr(0, 6) == "normal") {
    anomaly = false;
    rest.remove_prefix(6);
  } else {
    return std::nullopt;
  }
  bool env = rest.find("environment") != std::string_view::npos;
  if (anomaly) return env ? RuleSection::anomaly_env : RuleSection::anomaly_human;
  return env ? RuleSection::normal_env : RuleSection::normal_human;
}

/// Matches numbered items "12. text" or "12) text"; returns the item text.
inline std::optional<std::string> match_rule_item(std::string_view line) {
  std::string_view rest = trim(line);
  std::size_t digits = 0;
  while (digits < rest.size() && std::isdigit(static_cast<unsigned char>(rest[digits]))) {
    ++digits;
  }
  if (digits == 0 || digits >= rest.size()) return std::nullopt;
  char sep = rest[digits];
  if (sep != '.' && sep != ')') return std::nullopt;
  std::string text(trim(rest.substr(digits + 1)));
  if (text.empty()) return std::nullopt;
  return text;
}

}  // namespace detail

/// Parses model output into the four rule lists. Numbered items are collected
/// under the innermost preceding heading; printed numbers are replaced by list
/// position. Raises RuleParseError when no heading is recognized.
inline RuleSet parse_rules(const std::string& text) {
  RuleSet rules;
  rules.raw_text = text;
  std::optional<RuleSection> current;
  bool any_heading = false;
  for (const auto& line : detail::split_lines(text)) {
    if (auto section = detail::match_rule_heading(line)) {
      current = section;
      any_heading = true;
      continue;
    }
    if (!current) continue;
    if (auto item = detail::match_rule_item(line)) {
      auto& list = rules.section(*current);
      list.push_back({static_cast<int>(list.size()) + 1, std::move(*item)});
    }
  }
  if (!any_heading) {
    std::string snippet;
    for (const auto& line : detail::split_lines(text)) {
      auto trimmed = detail::trim(line);
      if (!trimmed.empty()) {
        snippet = std::string(trimmed.substr(0, 80));
        break;
      }
    }
    throw RuleParseError(
        "no rule headings found (expected lines like '**Rules for Anomaly Human "
        "Activities:**'); first line: '" + snippet + "'",
        text);
  }
  return rules;
}

/// Canonical four-section rendering; parse_rules(render_rules(r)) restores the
/// same lists.
inline std::string render_rules(const RuleSet& rules) {
  auto section_text = [](const char* heading, const std::vector<RuleItem>& items) {
    std::string out = std::string("**Rules for ") + heading + ":**\n";
    for (std::size_t i = 0; i < items.size(); ++i) {
      out += std::to_string(i + 1) + ". " + items[i].text + "\n";
    }
    return out;
  };
  std::string out;
  out += section_text("Anomaly Human Activities", rules.anomaly_human);
  out += "\n";
  out += section_text("Anomaly Environmental Objects", rules.anomaly_env);
  out += "\n";
  out += section_text("Normal Human Activities", rules.normal_human);
  out += "\n";
  out += section_text("Normal Environmental Objects", rules.normal_env);
  return out;
}

// ---------------------------------------------------------------------------
// Model-backed induction steps

/// One rule-generation call over a batch of reference descriptions.
inline RuleSet generate_rules(const std::vector<FrameDescription>& batch,
                              const std::string& dataset, const StrategyToggles& toggles,
                              ChatBackend& backend, const std::string& model_id,
                              double temperature = 0.0) {
  std::string descriptions;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (i > 0) descriptions += "\n";
    descriptions += batch[i].text;
  }
  ChatExchange exchange;
  exchange.model_id = model_id;
  exchange.temperature = temperature;
  exchange.messages = prompts::rule_generation_messages(dataset, descriptions, toggles);
  return parse_rules(backend.chat(exchange));
}

/// Combines n rule sets into one robust set via a model vote. With
/// aggregation toggled off, or a single input, the first set passes through
/// unchanged.
inline RuleSet aggregate_rules(const std::vector<RuleSet>& rule_sets, const std::string& dataset,
                               bool aggregation_enabled, ChatBackend& backend,
                               const std::string& model_id, double temperature = 0.0) {
  if (rule_sets.empty()) throw ConfigError("aggregate_rules needs at least one rule set");
  if (!aggregation_enabled || rule_sets.size() == 1) return rule_sets.front();

  std::string block;
  for (std::size_t i = 0; i < rule_sets.size(); ++i) {
    block += "Set " + std::to_string(i + 1) + ":\n";
    block += rule_sets[i].raw_text.empty() ? render_rules(rule_sets[i]) : rule_sets[i].raw_text;
    block += "\n\n";
  }
  ChatExchange exchange;
  exchange.model_id = model_id;
  exchange.temperature = temperature;
  exchange.messages = prompts::rule_aggregation_messages(dataset, rule_sets.size(), block);
  return parse_rules(backend.chat(exchange));
}

}  // namespace vadrules
