#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "types.hpp"

namespace vadrules {

// ---------------------------------------------------------------------------
// Frame-level ROC AUC

/// AUC by trapezoidal integration over the ROC points swept at each unique
/// score threshold (descending). Grouping tied scores per threshold gives the
/// Mann-Whitney half-credit convention.
inline double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("roc_auc: length mismatch");
  if (scores.empty()) throw std::invalid_argument("roc_auc: empty input");
  std::size_t positives = 0;
  for (int label : labels) {
    if (label != 0 && label != 1) throw std::invalid_argument("roc_auc: labels must be 0/1");
    positives += static_cast<std::size_t>(label);
  }
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw std::invalid_argument("roc_auc: needs both classes present");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double auc = 0.0;
  double tpr_prev = 0.0, fpr_prev = 0.0;
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      if (labels[order[i]] == 1) ++tp; else ++fp;
      ++i;
    }
    const double tpr = static_cast<double>(tp) / static_cast<double>(positives);
    const double fpr = static_cast<double>(fp) / static_cast<double>(negatives);
    auc += (fpr - fpr_prev) * (tpr + tpr_prev) / 2.0;
    tpr_prev = tpr;
    fpr_prev = fpr;
  }
  return auc;
}

// ---------------------------------------------------------------------------
// Accuracy / precision / recall

struct ClassificationMetrics {
  double accuracy = 0.0;
  std::optional<double> precision;  // absent when tp+fp == 0
  std::optional<double> recall;     // absent when tp+fn == 0
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

inline ClassificationMetrics classification_metrics(std::span<const int> preds,
                                                    std::span<const int> labels) {
  if (preds.size() != labels.size()) {
    throw std::invalid_argument("classification_metrics: length mismatch");
  }
  if (preds.empty()) throw std::invalid_argument("classification_metrics: empty input");
  ClassificationMetrics m;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == 1 && labels[i] == 1) ++m.tp;
    else if (preds[i] == 1 && labels[i] == 0) ++m.fp;
    else if (preds[i] == 0 && labels[i] == 1) ++m.fn;
    else ++m.tn;
  }
  m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(preds.size());
  if (m.tp + m.fp > 0) {
    m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  }
  if (m.tp + m.fn > 0) {
    m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Doubly-Right reasoning evaluation

enum class DrCategory { RR, RW, WR, WW };

inline std::string to_string(DrCategory c) {
  switch (c) {
    case DrCategory::RR: return "RR";
    case DrCategory::RW: return "RW";
    case DrCategory::WR: return "WR";
    case DrCategory::WW: return "WW";
  }
  throw std::logic_error("unreachable category");
}

inline DrCategory dr_category_from_string(const std::string& name) {
  if (name == "RR") return DrCategory::RR;
  if (name == "RW") return DrCategory::RW;
  if (name == "WR") return DrCategory::WR;
  if (name == "WW") return DrCategory::WW;
  throw ParseError("unknown doubly-right category: " + name);
}

struct Choice {
  char letter = 'A';
  std::string text;
  DrCategory category = DrCategory::WW;

  friend bool operator==(const Choice&, const Choice&) = default;
};

struct ChoiceItem {
  std::string video_id;
  std::int64_t frame_index = 0;
  std::string description;
  std::vector<Choice> choices;
  char gold_letter = 'A';

  void validate() const {
    std::size_t rr = 0;
    bool gold_found = false;
    for (const auto& choice : choices) {
      if (choice.category == DrCategory::RR) ++rr;
      if (choice.letter == gold_letter) gold_found = true;
    }
    if (rr != 1) throw ParseError("choice item must have exactly one RR option");
    if (!gold_found) throw ParseError("gold_letter not among the choices");
  }

  friend bool operator==(const ChoiceItem&, const ChoiceItem&) = default;
};

/// Category of the chosen option.
inline DrCategory doubly_right(char chosen, const ChoiceItem& item) {
  for (const auto& choice : item.choices) {
    if (choice.letter == chosen) return choice.category;
  }
  throw std::invalid_argument(std::string("unknown choice letter '") + chosen + "'");
}

/// First standalone letter A-D on the final nonempty line of a model reply.
inline std::optional<char> extract_choice_letter(const std::string& text) {
  std::string last_line;
  for (const auto& line : detail::split_lines(text)) {
    if (!detail::trim(line).empty()) last_line = std::string(detail::trim(line));
  }
  for (std::size_t i = 0; i < last_line.size(); ++i) {
    char c = last_line[i];
    if (c >= 'A' && c <= 'D') {
      bool left_ok = i == 0 || !detail::is_word_char(last_line[i - 1]);
      bool right_ok = i + 1 == last_line.size() || !detail::is_word_char(last_line[i + 1]);
      if (left_ok && right_ok) return c;
    }
  }
  return std::nullopt;
}

struct DoublyRightReport {
  std::size_t rr = 0, rw = 0, wr = 0, ww = 0;
  std::size_t flagged_unparseable = 0;

  std::size_t total() const { return rr + rw + wr + ww; }

  void add(DrCategory category) {
    switch (category) {
      case DrCategory::RR: ++rr; break;
      case DrCategory::RW: ++rw; break;
      case DrCategory::WR: ++wr; break;
      case DrCategory::WW: ++ww; break;
    }
  }

  double percent(std::size_t count) const {
    return total() == 0 ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(total());
  }
};

inline void to_json(json& j, const ClassificationMetrics& m) {
  j = json{{"accuracy", m.accuracy},
           {"precision", m.precision ? json(*m.precision) : json(nullptr)},
           {"recall", m.recall ? json(*m.recall) : json(nullptr)},
           {"tp", m.tp},
           {"fp", m.fp},
           {"fn", m.fn},
           {"tn", m.tn}};
}

inline void to_json(json& j, const DoublyRightReport& r) {
  j = json{{"counts", {{"RR", r.rr}, {"RW", r.rw}, {"WR", r.wr}, {"WW", r.ww}}},
           {"percent",
            {{"RR", r.percent(r.rr)},
             {"RW", r.percent(r.rw)},
             {"WR", r.percent(r.wr)},
             {"WW", r.percent(r.ww)}}},
           {"flagged_unparseable", r.flagged_unparseable},
           {"total", r.total()}};
}

inline void to_json(json& j, const Choice& c) {
  j = json{{"letter", std::string(1, c.letter)},
           {"text", c.text},
           {"category", to_string(c.category)}};
}

inline void from_json(const json& j, Choice& c) {
  const std::string letter = j.at("letter").get<std::string>();
  if (letter.size() != 1) throw ParseError("choice letter must be a single character");
  c.letter = letter[0];
  c.text = j.at("text").get<std::string>();
  c.category = dr_category_from_string(j.at("category").get<std::string>());
}

inline void to_json(json& j, const ChoiceItem& item) {
  j = json{{"video_id", item.video_id},
           {"frame_index", item.frame_index},
           {"description", item.description},
           {"choices", item.choices},
           {"gold_letter", std::string(1, item.gold_letter)}};
}

inline void from_json(const json& j, ChoiceItem& item) {
  item.video_id = j.at("video_id").get<std::string>();
  item.frame_index = j.at("frame_index").get<std::int64_t>();
  item.description = j.at("description").get<std::string>();
  item.choices = j.at("choices").get<std::vector<Choice>>();
  const std::string gold = j.at("gold_letter").get<std::string>();
  if (gold.size() != 1) throw ParseError("gold_letter must be a single character");
  item.gold_letter = gold[0];
  item.validate();
}

}  // namespace vadrules
