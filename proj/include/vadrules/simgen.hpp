#pragma once

#include <string>
#include <vector>

#include "detail/rng.hpp"
#include "detail/strings.hpp"
#include "smoothing.hpp"
#include "types.hpp"

namespace vadrules {

struct AnomalyTemplate {
  std::string sentence;  // contains exactly one trigger keyword, word-bounded
  std::string keyword;
};

struct SimConfig {
  std::size_t videos = 20;
  std::size_t frames_per_video = 300;
  std::size_t segment_min = 50;   // contiguous anomaly frames, inclusive range
  std::size_t segment_max = 80;
  std::size_t gap_min = 90;       // normal frames before each segment
  std::size_t gap_max = 180;
  std::vector<AnomalyTemplate> anomaly_vocabulary = default_anomaly_vocabulary();
  std::vector<std::string> normal_vocabulary = default_normal_vocabulary();
  double noise_rate = 0.0;  // per-frame flip probability
  std::uint64_t seed = 0;

  static std::vector<AnomalyTemplate> default_anomaly_vocabulary() {
    return {
        {"One person is riding a bicycle across the plaza.", "riding"},
        {"Someone is running through the crowd.", "running"},
        {"Two people are fighting near the entrance.", "fighting"},
        {"A person is jumping over the railing.", "jumping"},
        {"Someone is climbing on the fence.", "climbing"},
    };
  }

  static std::vector<std::string> default_normal_vocabulary() {
    return {
        "There are several people in the image. They are walking along the path.",
        "Two people are walking together on the sidewalk. There are trees and a trash bin.",
        "A person stands near the entrance holding a bag. The street is quiet.",
        "People are walking past the benches. A manhole cover sits on the ground.",
        "A person walks toward the building. There are plants along the fence.",
    };
  }

  void validate() const {
    if (videos == 0 || frames_per_video == 0) throw ConfigError("empty corpus dimensions");
    if (segment_min < 1) throw ConfigError("segment_min must be >= 1");
    if (segment_min > segment_max) throw ConfigError("segment range is empty");
    if (segment_max > frames_per_video) {
      throw ConfigError("segment_max " + std::to_string(segment_max) +
                        " exceeds video length " + std::to_string(frames_per_video));
    }
    if (gap_min < 1 || gap_min > gap_max) throw ConfigError("gap range is invalid");
    if (anomaly_vocabulary.empty() || normal_vocabulary.empty()) {
      throw ConfigError("vocabularies must be nonempty");
    }
    if (!(noise_rate >= 0.0) || noise_rate >= 1.0) {
      throw ConfigError("noise_rate must be in [0, 1)");
    }
  }

  KeywordSet keywords() const {
    std::vector<std::string> words;
    words.reserve(anomaly_vocabulary.size());
    for (const auto& tmpl : anomaly_vocabulary) words.push_back(tmpl.keyword);
    return KeywordSet::from_words(words);
  }
};

inline void to_json(json& j, const AnomalyTemplate& t) {
  j = json{{"sentence", t.sentence}, {"keyword", t.keyword}};
}

inline void from_json(const json& j, AnomalyTemplate& t) {
  t.sentence = j.at("sentence").get<std::string>();
  t.keyword = j.at("keyword").get<std::string>();
}

inline void to_json(json& j, const SimConfig& c) {
  j = json{{"videos", c.videos},
           {"frames_per_video", c.frames_per_video},
           {"segment_min", c.segment_min},
           {"segment_max", c.segment_max},
           {"gap_min", c.gap_min},
           {"gap_max", c.gap_max},
           {"anomaly_vocabulary", c.anomaly_vocabulary},
           {"normal_vocabulary", c.normal_vocabulary},
           {"noise_rate", c.noise_rate},
           {"seed", c.seed}};
}

namespace detail {

inline std::string sim_video_id(std::size_t index) {
  std::string digits = std::to_string(index);
  while (digits.size() < 3) digits.insert(digits.begin(), '0');
  return "sim" + digits;
}

}  // namespace detail

/// Labeled synthetic corpus: per video, anomaly segments with lengths drawn
/// from the configured range, separated by normal gaps so maximal runs never
/// merge. Anomaly frames carry a normal base sentence plus one keyword-bearing
/// sentence; normal frames carry keyword-free text. Deterministic per seed.
inline std::vector<FrameDescription> generate_corpus(const SimConfig& config) {
  config.validate();
  detail::Rng rng(config.seed);
  std::vector<FrameDescription> corpus;
  corpus.reserve(config.videos * config.frames_per_video);
  for (std::size_t v = 0; v < config.videos; ++v) {
    std::vector<int> truth(config.frames_per_video, 0);
    std::size_t cursor = 0;
    while (true) {
      const std::size_t gap = rng.next_in(config.gap_min, config.gap_max);
      const std::size_t length = rng.next_in(config.segment_min, config.segment_max);
      if (cursor + gap + length > config.frames_per_video) break;
      for (std::size_t i = cursor + gap; i < cursor + gap + length; ++i) truth[i] = 1;
      cursor += gap + length;
    }
    const std::string video_id = detail::sim_video_id(v);
    for (std::size_t i = 0; i < config.frames_per_video; ++i) {
      FrameDescription frame;
      frame.video_id = video_id;
      frame.frame_index = static_cast<std::int64_t>(i);
      frame.label = truth[i];
      const auto& base =
          config.normal_vocabulary[rng.next_below(config.normal_vocabulary.size())];
      frame.text = base;
      if (truth[i] == 1) {
        const auto& anomaly =
            config.anomaly_vocabulary[rng.next_below(config.anomaly_vocabulary.size())];
        frame.text += " " + anomaly.sentence;
      }
      corpus.push_back(std::move(frame));
    }
  }
  return corpus;
}

/// Text-level perception noise: each frame independently flips with
/// probability epsilon. A normal frame gains a keyword-bearing sentence; an
/// anomaly frame loses every sentence containing a trigger keyword. Labels
/// stay untouched (they remain the ground truth).
inline std::vector<FrameDescription> inject_noise(std::vector<FrameDescription> frames,
                                                  const SimConfig& config, double epsilon,
                                                  std::uint64_t seed) {
  if (!(epsilon >= 0.0) || epsilon >= 1.0) throw ConfigError("epsilon must be in [0, 1)");
  if (epsilon == 0.0) return frames;
  const KeywordSet keywords = config.keywords();
  detail::Rng rng(seed);
  for (auto& frame : frames) {
    const bool flip = rng.next_unit() < epsilon;
    const auto& extra =
        config.anomaly_vocabulary[rng.next_below(config.anomaly_vocabulary.size())];
    if (!flip) continue;
    if (match_keywords(frame.text, keywords) == 1) {
      std::string text;
      for (const auto& sentence : detail::split_sentences(frame.text)) {
        if (match_keywords(sentence, keywords) == 0) text += sentence;
      }
      frame.text = std::move(text);
    } else {
      if (!frame.text.empty() && frame.text.back() != ' ') frame.text += ' ';
      frame.text += extra.sentence;
    }
  }
  return frames;
}

}  // namespace vadrules
