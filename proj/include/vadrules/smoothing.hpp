#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "backend.hpp"
#include "induction.hpp"
#include "prompts.hpp"
#include "types.hpp"

namespace vadrules {

// ---------------------------------------------------------------------------
// Keyword extraction and matching

/// Parses a bracketed keyword list ("["a", 'b', ...]") out of a model reply,
/// ignoring any surrounding prose. Keywords are lowercased and deduplicated,
/// order preserved.
inline KeywordSet parse_keyword_list(const std::string& response) {
  std::size_t open = response.find('[');
  std::size_t close = response.rfind(']');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    throw ParseError("keyword reply contains no bracketed list");
  }
  std::string_view inner(response.data() + open + 1, close - open - 1);
  std::vector<std::string> words;
  std::string current;
  for (char c : inner) {
    if (c == ',') {
      words.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  words.push_back(std::move(current));
  std::vector<std::string> cleaned;
  for (auto& word : words) {
    std::string_view v = detail::trim(word);
    while (!v.empty() && (v.front() == '"' || v.front() == '\'')) v.remove_prefix(1);
    while (!v.empty() && (v.back() == '"' || v.back() == '\'')) v.remove_suffix(1);
    v = detail::trim(v);
    if (!v.empty()) cleaned.emplace_back(v);
  }
  return KeywordSet::from_words(cleaned);
}

/// Asks the backend for anomaly trigger keywords over the rule listing.
inline KeywordSet extract_keywords(const RuleSet& rules, ChatBackend& backend,
                                   const std::string& model_id, double temperature = 0.0) {
  if (!rules.has_anomaly_rules()) {
    throw ConfigError("keyword extraction needs nonempty anomaly rule lists");
  }
  const std::string rules_text =
      rules.raw_text.empty() ? render_rules(rules) : rules.raw_text;
  ChatExchange exchange;
  exchange.model_id = model_id;
  exchange.temperature = temperature;
  exchange.messages.push_back(
      {Role::user, prompts::keyword_extraction().render({{"rules", rules_text}})});
  return parse_keyword_list(backend.chat(exchange));
}

/// 1 iff any keyword occurs in the lowercased text on word boundaries;
/// multiword keywords match as contiguous phrases.
inline int match_keywords(std::string_view text, const KeywordSet& keywords) {
  if (text.empty() || keywords.empty()) return 0;
  const std::string lowered = detail::to_lower(text);
  for (const auto& keyword : keywords.keywords) {
    if (detail::contains_phrase(lowered, keyword)) return 1;
  }
  return 0;
}

inline int match_keywords(const FrameDescription& description, const KeywordSet& keywords) {
  return match_keywords(description.text, keywords);
}

// ---------------------------------------------------------------------------
// Exponential Majority Smoothing

/// Exponentially weighted average with normalized truncated weights:
///   s_t = sum_{i<=t} (1-a)^(t-i) y_i / sum_{i<=t} (1-a)^i
/// computed by the recurrence N_t = (1-a) N_{t-1} + y_t, D_t = 1 + (1-a) D_{t-1}.
inline std::vector<double> ema(std::span<const int> y, double alpha) {
  if (!(alpha > 0.0) || alpha > 1.0) throw std::invalid_argument("alpha must be in (0, 1]");
  if (y.empty()) throw std::invalid_argument("ema input must be nonempty");
  std::vector<double> s;
  s.reserve(y.size());
  double numerator = 0.0;
  double denominator = 0.0;
  const double decay = 1.0 - alpha;
  for (int value : y) {
    numerator = decay * numerator + static_cast<double>(value);
    denominator = 1.0 + decay * denominator;
    s.push_back(numerator / denominator);
  }
  return s;
}

struct MajorityResult {
  std::vector<int> y_smoothed;
  double tau = 0.0;
};

/// Windowed majority vote against tau = mean of the EMA values. A window at i
/// spans indices max(0, i-p)..min(i+p, t); the vote fires when strictly more
/// than half the window lies above tau. A constant input bypasses the vote
/// (the strict inequality would invert a unanimous signal) and rounds instead.
inline MajorityResult majority_smooth(std::span<const double> s, std::size_t padding) {
  if (s.empty()) throw std::invalid_argument("majority_smooth input must be nonempty");
  MajorityResult result;
  double sum = 0.0;
  for (double v : s) sum += v;
  result.tau = sum / static_cast<double>(s.size());

  bool constant = std::all_of(s.begin(), s.end(), [&](double v) { return v == s.front(); });
  result.y_smoothed.reserve(s.size());
  if (constant) {
    for (double v : s) result.y_smoothed.push_back(v >= 0.5 ? 1 : 0);
    return result;
  }

  const std::size_t last = s.size() - 1;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::size_t lo = i > padding ? i - padding : 0;
    const std::size_t hi = std::min(i + padding, last);
    std::size_t above = 0;
    for (std::size_t j = lo; j <= hi; ++j) {
      if (s[j] > result.tau) ++above;
    }
    const std::size_t window = hi - lo + 1;
    result.y_smoothed.push_back(2 * above > window ? 1 : 0);
  }
  return result;
}

/// Secondary EMA over smoothed labels with decay 1-tau:
///   a_t = sum_{i<=t} (1-tau)^(t-i) yhat_i / sum_{i<=t} (1-tau)^i.
/// tau=1 reproduces yhat, tau=0 the running mean.
inline std::vector<double> anomaly_scores(std::span<const int> y_hat, double tau) {
  if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("tau must be in [0, 1]");
  if (y_hat.empty()) throw std::invalid_argument("anomaly_scores input must be nonempty");
  std::vector<double> scores;
  scores.reserve(y_hat.size());
  double numerator = 0.0;
  double denominator = 0.0;
  const double decay = 1.0 - tau;
  for (int value : y_hat) {
    numerator = decay * numerator + static_cast<double>(value);
    denominator = 1.0 + decay * denominator;
    scores.push_back(numerator / denominator);
  }
  return scores;
}

/// Full per-video trace of the deterministic smoothing chain.
struct SmoothedSequence {
  std::vector<int> y_initial;
  std::vector<double> s;
  double tau = 0.0;
  std::vector<int> y_smoothed;
  std::vector<double> scores;
};

inline SmoothedSequence smooth_sequence(std::vector<int> y, const SmoothingParams& params) {
  params.validate();
  SmoothedSequence out;
  out.s = ema(y, params.alpha);
  auto vote = majority_smooth(out.s, params.padding);
  out.tau = vote.tau;
  out.y_smoothed = std::move(vote.y_smoothed);
  out.scores = anomaly_scores(out.y_smoothed, out.tau);
  out.y_initial = std::move(y);
  return out;
}

// ---------------------------------------------------------------------------
// Description modification

struct ModifiedDescriptions {
  std::vector<std::string> text;          // per frame; equals the original when unchanged
  std::vector<bool> changed;              // true where the text differs
  std::vector<std::size_t> unresolved;    // false negatives with no keyword anywhere in the video
};

namespace detail {

inline std::string most_frequent_keyword(const std::vector<FrameDescription>& frames,
                                         std::size_t lo, std::size_t hi,
                                         const KeywordSet& keywords) {
  std::string best;
  std::size_t best_count = 0;
  for (const auto& keyword : keywords.keywords) {
    std::size_t count = 0;
    for (std::size_t j = lo; j <= hi; ++j) {
      if (contains_phrase(to_lower(frames[j].text), keyword)) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best = keyword;
    }
  }
  return best;  // empty when no keyword occurs in the range
}

}  // namespace detail

/// Reconciles descriptions with the smoothed labels. A false negative
/// (y=0, yhat=1) gains "There is a person {k}." with k the most frequent
/// keyword in the width-w window centered at the frame (whole video as
/// fallback). A false positive (y=1, yhat=0) loses every sentence containing
/// a keyword. Agreeing frames pass through untouched.
inline ModifiedDescriptions modify_descriptions(const std::vector<FrameDescription>& frames,
                                                std::span<const int> y_initial,
                                                std::span<const int> y_smoothed,
                                                const KeywordSet& keywords,
                                                std::size_t mod_window) {
  if (frames.size() != y_initial.size() || frames.size() != y_smoothed.size()) {
    throw std::invalid_argument("modify_descriptions: sequence lengths differ");
  }
  if (mod_window == 0) throw std::invalid_argument("mod_window must be positive");

  ModifiedDescriptions out;
  out.text.reserve(frames.size());
  out.changed.assign(frames.size(), false);
  const std::size_t half = mod_window / 2;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string& original = frames[i].text;
    if (y_initial[i] == 0 && y_smoothed[i] == 1) {
      const std::size_t lo = i > half ? i - half : 0;
      const std::size_t hi = std::min(i + half, frames.size() - 1);
      std::string keyword = detail::most_frequent_keyword(frames, lo, hi, keywords);
      if (keyword.empty() && !frames.empty()) {
        keyword = detail::most_frequent_keyword(frames, 0, frames.size() - 1, keywords);
      }
      if (keyword.empty()) {
        out.text.push_back(original);
        out.unresolved.push_back(i);
        continue;
      }
      std::string text = original;
      if (!text.empty() && text.back() != ' ') text += ' ';
      text += "There is a person " + keyword + ".";
      out.text.push_back(std::move(text));
      out.changed[i] = true;
    } else if (y_initial[i] == 1 && y_smoothed[i] == 0) {
      std::string text;
      for (const auto& sentence : detail::split_sentences(original)) {
        if (match_keywords(sentence, keywords) == 0) text += sentence;
      }
      out.changed[i] = text != original;
      out.text.push_back(std::move(text));
    } else {
      out.text.push_back(original);
    }
  }
  return out;
}

}  // namespace vadrules
