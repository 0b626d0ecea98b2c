#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "backend.hpp"
#include "induction.hpp"
#include "prompts.hpp"
#include "smoothing.hpp"
#include "types.hpp"

namespace vadrules {

struct RuleCitation {
  RuleSection section = RuleSection::anomaly_human;
  int ordinal = 0;

  friend bool operator==(const RuleCitation&, const RuleCitation&) = default;
};

struct Verdict {
  int label = 0;
  std::vector<RuleCitation> matched_rules;  // opportunistic, may be empty
  std::string raw_text;
  bool parse_ok = false;
};

namespace detail {

/// True if `word` starts at `pos` in `line` and is not glued to a preceding
/// word character ("abnormal" must not match "normal").
inline bool word_starts_at(std::string_view line, std::size_t pos, std::string_view word) {
  if (line.substr(pos, word.size()) != word) return false;
  return pos == 0 || !is_word_char(line[pos - 1]);
}

}  // namespace detail

/// Scans for the last case-insensitive "answer" followed on the same line by
/// "anomaly" (1) or "normal" (0). Total: unparseable text yields (0, false).
inline std::pair<int, bool> parse_verdict(const std::string& text) {
  int label = 0;
  bool found = false;
  for (const auto& raw_line : detail::split_lines(text)) {
    const std::string line = detail::to_lower(raw_line);
    std::size_t pos = 0;
    while ((pos = line.find("answer", pos)) != std::string::npos) {
      for (std::size_t at = pos + 6; at < line.size(); ++at) {
        if (detail::word_starts_at(line, at, "anomaly")) {
          label = 1;
          found = true;
          break;
        }
        if (detail::word_starts_at(line, at, "normal")) {
          label = 0;
          found = true;
          break;
        }
      }
      ++pos;
    }
  }
  return {label, found};
}

/// Best-effort extraction of "rule number N under <section>" citations from
/// reasoning text. Never required for correctness.
inline std::vector<RuleCitation> extract_rule_citations(const std::string& text) {
  std::vector<RuleCitation> citations;
  const std::string lowered = detail::to_lower(text);
  std::size_t pos = 0;
  constexpr std::string_view kMarker = "rule number ";
  while ((pos = lowered.find(kMarker, pos)) != std::string::npos) {
    std::size_t at = pos + kMarker.size();
    int ordinal = 0;
    bool has_digit = false;
    while (at < lowered.size() && std::isdigit(static_cast<unsigned char>(lowered[at]))) {
      ordinal = ordinal * 10 + (lowered[at] - '0');
      has_digit = true;
      ++at;
    }
    if (has_digit) {
      std::string_view tail = std::string_view(lowered).substr(at, 64);
      bool anomaly = tail.find("anomaly") != std::string_view::npos;
      bool normal = tail.find("normal") != std::string_view::npos;
      bool env = tail.find("environment") != std::string_view::npos;
      if (anomaly || normal) {
        RuleSection section = anomaly
                                  ? (env ? RuleSection::anomaly_env : RuleSection::anomaly_human)
                                  : (env ? RuleSection::normal_env : RuleSection::normal_human);
        citations.push_back({section, ordinal});
      }
    }
    pos += kMarker.size();
  }
  return citations;
}

inline std::string dummy_answer(int y_hat) { return y_hat == 1 ? "Anomaly" : "Normal"; }

/// Rechecks one frame's dummy answer against the rules. Backend failures
/// propagate; an unparseable reply is not an error - the verdict falls back
/// to the dummy answer with parse_ok=false.
inline Verdict recheck(const FrameDescription& description, int y_hat, const RuleSet& rules,
                       ChatBackend& backend, const std::string& model_id,
                       double temperature = 0.0) {
  const std::string rules_text =
      rules.raw_text.empty() ? render_rules(rules) : rules.raw_text;
  ChatExchange exchange;
  exchange.model_id = model_id;
  exchange.temperature = temperature;
  exchange.messages.push_back(
      {Role::user, prompts::recheck().render({{"rules", rules_text},
                                              {"dummy", dummy_answer(y_hat)},
                                              {"description", description.text}})});
  Verdict verdict;
  verdict.raw_text = backend.chat(exchange);
  auto [label, ok] = parse_verdict(verdict.raw_text);
  verdict.parse_ok = ok;
  verdict.label = ok ? label : y_hat;
  verdict.matched_rules = extract_rule_citations(verdict.raw_text);
  return verdict;
}

/// Anomaly scores over the final labels; same contract as anomaly_scores,
/// reusing the per-video tau from the base stage.
inline std::vector<double> final_scores(std::span<const int> y_star, double tau) {
  return anomaly_scores(y_star, tau);
}

}  // namespace vadrules
