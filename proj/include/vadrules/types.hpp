#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "detail/strings.hpp"

namespace vadrules {

using json = nlohmann::json;

/// Error categories surfaced by the library; the CLI maps them to exit codes.
enum class ErrorCategory { config, parse, backend, io };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, std::string message)
      : std::runtime_error(std::move(message)), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::string message) : Error(ErrorCategory::config, std::move(message)) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(std::string message) : Error(ErrorCategory::parse, std::move(message)) {}
};

class IoError : public Error {
 public:
  explicit IoError(std::string message) : Error(ErrorCategory::io, std::move(message)) {}
};

// ---------------------------------------------------------------------------
// Chat plumbing types

enum class Role { system, user, assistant };

inline std::string to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  throw std::logic_error("unreachable role");
}

inline Role role_from_string(const std::string& name) {
  if (name == "system") return Role::system;
  if (name == "user") return Role::user;
  if (name == "assistant") return Role::assistant;
  throw ParseError("unknown chat role: " + name);
}

struct Message {
  Role role = Role::user;
  std::string content;

  friend bool operator==(const Message&, const Message&) = default;
};

/// One model call: request fields plus the response once it arrives.
/// Image payloads travel as data-URL strings inside message content; the
/// gateway never decodes them.
struct ChatExchange {
  std::string model_id;
  std::vector<Message> messages;
  double temperature = 0.0;
  std::optional<std::string> response_text;

  /// At most one system message, and only in first position.
  void validate() const {
    for (std::size_t i = 0; i < messages.size(); ++i) {
      if (messages[i].role == Role::system && i != 0) {
        throw ConfigError("system message must come first in a chat exchange");
      }
    }
    if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
  }

  friend bool operator==(const ChatExchange&, const ChatExchange&) = default;
};

// ---------------------------------------------------------------------------
// Frame descriptions

struct FrameDescription {
  std::string video_id;
  std::int64_t frame_index = 0;
  std::string text;
  std::optional<int> label;  // 1 = anomaly, 0 = normal; absent when unknown
  bool perception_failure = false;

  bool is_normal() const { return !label.has_value() || *label == 0; }

  friend bool operator==(const FrameDescription&, const FrameDescription&) = default;
};

// ---------------------------------------------------------------------------
// Rules

struct RuleItem {
  int ordinal = 0;  // 1-based position within its list
  std::string text; // one rule, no leading numbering

  friend bool operator==(const RuleItem&, const RuleItem&) = default;
};

enum class RuleSection { anomaly_human, anomaly_env, normal_human, normal_env };

inline std::string to_string(RuleSection section) {
  switch (section) {
    case RuleSection::anomaly_human: return "anomaly_human";
    case RuleSection::anomaly_env: return "anomaly_env";
    case RuleSection::normal_human: return "normal_human";
    case RuleSection::normal_env: return "normal_env";
  }
  throw std::logic_error("unreachable rule section");
}

struct RuleSet {
  std::vector<RuleItem> anomaly_human;
  std::vector<RuleItem> anomaly_env;
  std::vector<RuleItem> normal_human;
  std::vector<RuleItem> normal_env;
  std::string raw_text;  // model output the lists were parsed from

  const std::vector<RuleItem>& section(RuleSection s) const {
    switch (s) {
      case RuleSection::anomaly_human: return anomaly_human;
      case RuleSection::anomaly_env: return anomaly_env;
      case RuleSection::normal_human: return normal_human;
      case RuleSection::normal_env: return normal_env;
    }
    throw std::logic_error("unreachable rule section");
  }

  std::vector<RuleItem>& section(RuleSection s) {
    return const_cast<std::vector<RuleItem>&>(std::as_const(*this).section(s));
  }

  std::size_t total_rules() const {
    return anomaly_human.size() + anomaly_env.size() + normal_human.size() + normal_env.size();
  }

  bool has_anomaly_rules() const { return !anomaly_human.empty() || !anomaly_env.empty(); }

  /// List equality, ignoring raw_text (renders of the same lists differ in raw form).
  bool same_items(const RuleSet& other) const {
    return anomaly_human == other.anomaly_human && anomaly_env == other.anomaly_env &&
           normal_human == other.normal_human && normal_env == other.normal_env;
  }

  friend bool operator==(const RuleSet&, const RuleSet&) = default;
};

// ---------------------------------------------------------------------------
// Keywords

struct KeywordSet {
  std::vector<std::string> keywords;  // lowercase, deduplicated, insertion order

  /// Lowercases, trims, drops empties, deduplicates keeping first occurrence.
  static KeywordSet from_words(const std::vector<std::string>& words) {
    KeywordSet out;
    for (const auto& word : words) {
      std::string lowered = detail::to_lower(detail::trim(word));
      if (lowered.empty()) continue;
      bool seen = false;
      for (const auto& existing : out.keywords) {
        if (existing == lowered) { seen = true; break; }
      }
      if (!seen) out.keywords.push_back(std::move(lowered));
    }
    return out;
  }

  bool empty() const { return keywords.empty(); }
  std::size_t size() const { return keywords.size(); }

  friend bool operator==(const KeywordSet&, const KeywordSet&) = default;
};

// ---------------------------------------------------------------------------
// Pipeline parameters

struct SmoothingParams {
  double alpha = 0.33;       // EMA weight, in (0, 1]
  std::size_t padding = 5;   // majority-vote window padding p
  std::size_t mod_window = 11;  // description-modification window width w (default 2p+1)

  void validate() const {
    if (!(alpha > 0.0) || alpha > 1.0) throw ConfigError("alpha must be in (0, 1]");
    if (mod_window == 0) throw ConfigError("mod_window must be positive");
  }

  friend bool operator==(const SmoothingParams&, const SmoothingParams&) = default;
};

struct StrategyToggles {
  bool human_and_environment = true;
  bool normal_and_anomaly = true;
  bool abstract_and_concrete = true;
  bool rule_aggregation = true;

  friend bool operator==(const StrategyToggles&, const StrategyToggles&) = default;
};

struct InductionConfig {
  std::size_t n_batches = 10;
  std::size_t frames_per_batch = 1;
  std::uint64_t seed = 0;
  StrategyToggles toggles;

  void validate() const {
    if (n_batches < 1) throw ConfigError("n_batches must be >= 1");
    if (frames_per_batch < 1) throw ConfigError("frames_per_batch must be >= 1");
  }

  friend bool operator==(const InductionConfig&, const InductionConfig&) = default;
};

// ---------------------------------------------------------------------------
// Per-frame prediction trace

struct PredictionRecord {
  std::string video_id;
  std::int64_t frame_index = 0;
  int y_initial = 0;
  double s_ema = 0.0;
  int y_smoothed = 0;
  double anomaly_score = 0.0;
  std::optional<int> y_final;
  std::optional<double> final_score;
  std::optional<std::string> reasoning_text;
  bool verdict_parse_ok = false;
  std::string text;                         // original description
  std::optional<std::string> modified_text; // present only when modification changed the text

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

// ---------------------------------------------------------------------------
// JSON serialization (labels and predictions always serialize as 0/1 integers)

inline void to_json(json& j, const Message& m) {
  j = json{{"role", to_string(m.role)}, {"content", m.content}};
}

inline void from_json(const json& j, Message& m) {
  m.role = role_from_string(j.at("role").get<std::string>());
  m.content = j.at("content").get<std::string>();
}

inline void to_json(json& j, const ChatExchange& e) {
  j = json{{"model_id", e.model_id},
           {"messages", e.messages},
           {"temperature", e.temperature}};
  if (e.response_text) j["response_text"] = *e.response_text;
}

inline void from_json(const json& j, ChatExchange& e) {
  e.model_id = j.at("model_id").get<std::string>();
  e.messages = j.at("messages").get<std::vector<Message>>();
  e.temperature = j.at("temperature").get<double>();
  e.response_text.reset();
  if (j.contains("response_text")) e.response_text = j.at("response_text").get<std::string>();
}

inline void to_json(json& j, const FrameDescription& d) {
  j = json{{"video_id", d.video_id}, {"frame_index", d.frame_index}, {"text", d.text}};
  if (d.label) j["label"] = *d.label;
  if (d.perception_failure) j["perception_failure"] = true;
}

inline void from_json(const json& j, FrameDescription& d) {
  d.video_id = j.at("video_id").get<std::string>();
  d.frame_index = j.at("frame_index").get<std::int64_t>();
  if (d.frame_index < 0) throw ParseError("frame_index must be non-negative");
  d.text = j.at("text").get<std::string>();
  d.label.reset();
  if (j.contains("label") && !j.at("label").is_null()) d.label = j.at("label").get<int>();
  d.perception_failure = j.value("perception_failure", false);
}

inline void to_json(json& j, const RuleSet& r) {
  auto texts = [](const std::vector<RuleItem>& items) {
    std::vector<std::string> out;
    out.reserve(items.size());
    for (const auto& item : items) out.push_back(item.text);
    return out;
  };
  j = json{{"anomaly_human", texts(r.anomaly_human)},
           {"anomaly_env", texts(r.anomaly_env)},
           {"normal_human", texts(r.normal_human)},
           {"normal_env", texts(r.normal_env)},
           {"raw_text", r.raw_text}};
}

inline void from_json(const json& j, RuleSet& r) {
  auto items = [](const json& arr) {
    std::vector<RuleItem> out;
    int ordinal = 1;
    for (const auto& text : arr) out.push_back({ordinal++, text.get<std::string>()});
    return out;
  };
  r.anomaly_human = items(j.at("anomaly_human"));
  r.anomaly_env = items(j.at("anomaly_env"));
  r.normal_human = items(j.at("normal_human"));
  r.normal_env = items(j.at("normal_env"));
  r.raw_text = j.value("raw_text", std::string{});
}

inline void to_json(json& j, const KeywordSet& k) { j = k.keywords; }

inline void from_json(const json& j, KeywordSet& k) {
  k = KeywordSet::from_words(j.get<std::vector<std::string>>());
}

inline void to_json(json& j, const PredictionRecord& r) {
  j = json{{"video_id", r.video_id},
           {"frame_index", r.frame_index},
           {"y_initial", r.y_initial},
           {"s_ema", r.s_ema},
           {"y_smoothed", r.y_smoothed},
           {"anomaly_score", r.anomaly_score},
           {"verdict_parse_ok", r.verdict_parse_ok},
           {"text", r.text}};
  if (r.y_final) j["y_final"] = *r.y_final;
  if (r.final_score) j["final_score"] = *r.final_score;
  if (r.reasoning_text) j["reasoning_text"] = *r.reasoning_text;
  if (r.modified_text) j["modified_text"] = *r.modified_text;
}

inline void from_json(const json& j, PredictionRecord& r) {
  r.video_id = j.at("video_id").get<std::string>();
  r.frame_index = j.at("frame_index").get<std::int64_t>();
  r.y_initial = j.at("y_initial").get<int>();
  r.s_ema = j.at("s_ema").get<double>();
  r.y_smoothed = j.at("y_smoothed").get<int>();
  r.anomaly_score = j.at("anomaly_score").get<double>();
  r.verdict_parse_ok = j.at("verdict_parse_ok").get<bool>();
  r.text = j.value("text", std::string{});
  r.y_final.reset();
  r.final_score.reset();
  r.reasoning_text.reset();
  r.modified_text.reset();
  if (j.contains("y_final")) r.y_final = j.at("y_final").get<int>();
  if (j.contains("final_score")) r.final_score = j.at("final_score").get<double>();
  if (j.contains("reasoning_text")) r.reasoning_text = j.at("reasoning_text").get<std::string>();
  if (j.contains("modified_text")) r.modified_text = j.at("modified_text").get<std::string>();
}

inline void to_json(json& j, const StrategyToggles& t) {
  j = json{{"human_and_environment", t.human_and_environment},
           {"normal_and_anomaly", t.normal_and_anomaly},
           {"abstract_and_concrete", t.abstract_and_concrete},
           {"rule_aggregation", t.rule_aggregation}};
}

inline void from_json(const json& j, StrategyToggles& t) {
  t.human_and_environment = j.value("human_and_environment", true);
  t.normal_and_anomaly = j.value("normal_and_anomaly", true);
  t.abstract_and_concrete = j.value("abstract_and_concrete", true);
  t.rule_aggregation = j.value("rule_aggregation", true);
}

inline void to_json(json& j, const InductionConfig& c) {
  j = json{{"n_batches", c.n_batches},
           {"frames_per_batch", c.frames_per_batch},
           {"seed", c.seed},
           {"strategy_toggles", c.toggles}};
}

inline void from_json(const json& j, InductionConfig& c) {
  c.n_batches = j.value("n_batches", std::size_t{10});
  c.frames_per_batch = j.value("frames_per_batch", std::size_t{1});
  c.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("strategy_toggles")) c.toggles = j.at("strategy_toggles").get<StrategyToggles>();
  c.validate();
}

inline void to_json(json& j, const SmoothingParams& p) {
  j = json{{"alpha", p.alpha}, {"padding", p.padding}, {"mod_window", p.mod_window}};
}

inline void from_json(const json& j, SmoothingParams& p) {
  p.alpha = j.value("alpha", 0.33);
  p.padding = j.value("padding", std::size_t{5});
  p.mod_window = j.value("mod_window", 2 * p.padding + 1);
  p.validate();
}

}  // namespace vadrules
