#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "backend.hpp"
#include "eval.hpp"
#include "induction.hpp"
#include "perception.hpp"
#include "reasoning.hpp"
#include "simgen.hpp"
#include "smoothing.hpp"
#include "types.hpp"

namespace vadrules {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Application configuration (one structured file, sections per module)

struct AppConfig {
  std::string dataset = "ShanghaiTech";  // fills the {dataset} prompt slot
  std::string backend_type = "scripted";  // "scripted" or "http"
  BackendConfig backend;
  std::vector<ScriptedRule> scripted_rules;
  std::string scripted_fallback;
  InductionConfig induction;
  SmoothingParams smoothing;
  std::optional<double> induction_temperature;  // overrides backend.temperature per stage
  std::optional<double> deduction_temperature;
  std::size_t recheck_stride = 1;  // recheck every k-th frame; 1 = every frame
  bool perception_short_prompt = false;
  SimConfig simgen;

  double stage_temperature(bool induction_stage) const {
    const auto& override_temp = induction_stage ? induction_temperature : deduction_temperature;
    return override_temp ? *override_temp : backend.temperature;
  }
};

inline AppConfig parse_app_config(const json& j) {
  AppConfig cfg;
  cfg.dataset = j.value("dataset", cfg.dataset);

  if (j.contains("backend")) {
    const json& b = j.at("backend");
    cfg.backend_type = b.value("type", cfg.backend_type);
    if (cfg.backend_type != "scripted" && cfg.backend_type != "http") {
      throw ConfigError("backend.type must be 'scripted' or 'http'");
    }
    cfg.backend.base_url = b.value("base_url", std::string{});
    cfg.backend.model_id = b.value("model_id", std::string{});
    cfg.backend.api_key_env = b.value("api_key_env", std::string{});
    cfg.backend.temperature = b.value("temperature", 0.0);
    cfg.backend.max_retries = b.value("max_retries", 2);
    cfg.backend.request_timeout = std::chrono::milliseconds(
        b.value("request_timeout_ms", std::int64_t{30000}));
    cfg.backend.parallelism = b.value("parallelism", std::size_t{4});
    cfg.backend.backoff_initial =
        std::chrono::milliseconds(b.value("backoff_initial_ms", std::int64_t{500}));
    if (b.contains("cache_dir") && !b.at("cache_dir").is_null()) {
      cfg.backend.cache_dir = fs::path(b.at("cache_dir").get<std::string>());
    }
    if (b.contains("scripted")) {
      const json& s = b.at("scripted");
      for (const auto& rule : s.value("rules", json::array())) {
        cfg.scripted_rules.push_back(
            {rule.value("contains", std::string{}), rule.value("response", std::string{})});
      }
      cfg.scripted_fallback = s.value("fallback", std::string{});
    }
    cfg.backend.validate();
  }

  if (j.contains("induction")) {
    const json& section = j.at("induction");
    cfg.induction = section.get<InductionConfig>();
    if (section.contains("temperature")) {
      cfg.induction_temperature = section.at("temperature").get<double>();
    }
  }
  if (j.contains("smoothing")) cfg.smoothing = j.at("smoothing").get<SmoothingParams>();
  if (j.contains("deduction")) {
    const json& section = j.at("deduction");
    if (section.contains("temperature")) {
      cfg.deduction_temperature = section.at("temperature").get<double>();
    }
    cfg.recheck_stride = section.value("recheck_stride", std::size_t{1});
    if (cfg.recheck_stride == 0) throw ConfigError("recheck_stride must be >= 1");
  }
  if (j.contains("perception")) {
    cfg.perception_short_prompt = j.at("perception").value("short_prompt", false);
  }
  if (j.contains("simgen")) {
    const json& s = j.at("simgen");
    cfg.simgen.videos = s.value("videos", cfg.simgen.videos);
    cfg.simgen.frames_per_video = s.value("frames_per_video", cfg.simgen.frames_per_video);
    cfg.simgen.segment_min = s.value("segment_min", cfg.simgen.segment_min);
    cfg.simgen.segment_max = s.value("segment_max", cfg.simgen.segment_max);
    cfg.simgen.gap_min = s.value("gap_min", cfg.simgen.gap_min);
    cfg.simgen.gap_max = s.value("gap_max", cfg.simgen.gap_max);
    cfg.simgen.noise_rate = s.value("noise_rate", cfg.simgen.noise_rate);
    cfg.simgen.seed = s.value("seed", cfg.simgen.seed);
    if (s.contains("anomaly_vocabulary")) {
      cfg.simgen.anomaly_vocabulary =
          s.at("anomaly_vocabulary").get<std::vector<AnomalyTemplate>>();
    }
    if (s.contains("normal_vocabulary")) {
      cfg.simgen.normal_vocabulary =
          s.at("normal_vocabulary").get<std::vector<std::string>>();
    }
    cfg.simgen.validate();
  }
  return cfg;
}

inline AppConfig load_app_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json parsed = json::parse(in, nullptr, false);
  if (parsed.is_discarded()) throw ConfigError("config file is not valid JSON: " + path.string());
  return parse_app_config(parsed);
}

/// Owns the configured backend plus its caching/recording wrapper.
class Gateway {
 public:
  explicit Gateway(const AppConfig& config) {
    if (config.backend_type == "scripted") {
      inner_ = std::make_unique<ScriptedBackend>(config.scripted_rules, config.scripted_fallback);
    } else {
      inner_ = std::make_unique<HttpBackend>(config.backend);
    }
    cached_ = std::make_unique<CachedBackend>(*inner_, config.backend.cache_dir);
  }

  ChatBackend& backend() { return *cached_; }
  std::vector<std::string> digests_used() const { return cached_->digests_used(); }

 private:
  std::unique_ptr<ChatBackend> inner_;
  std::unique_ptr<CachedBackend> cached_;
};

// ---------------------------------------------------------------------------
// Manifests and file helpers

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

inline json make_manifest(const std::string& command, const AppConfig& config,
                          const Gateway& gateway,
                          const std::map<std::string, std::string>& artifacts) {
  json snapshot{{"dataset", config.dataset},
                {"backend_type", config.backend_type},
                {"model_id", config.backend.model_id},
                {"temperature", config.backend.temperature},
                {"induction_temperature", config.induction_temperature
                                              ? json(*config.induction_temperature)
                                              : json(nullptr)},
                {"deduction_temperature", config.deduction_temperature
                                              ? json(*config.deduction_temperature)
                                              : json(nullptr)},
                {"cache_dir", config.backend.cache_dir
                                  ? json(config.backend.cache_dir->string())
                                  : json(nullptr)},
                {"induction", config.induction},
                {"smoothing", config.smoothing},
                {"recheck_stride", config.recheck_stride},
                {"perception_short_prompt", config.perception_short_prompt}};
  return json{{"command", command},
              {"created_at", utc_timestamp()},
              {"config", snapshot},
              {"seeds", {{"induction", config.induction.seed}, {"simgen", config.simgen.seed}}},
              {"cache_digests", gateway.digests_used()},
              {"artifacts", artifacts}};
}

inline void ensure_writable(const fs::path& path, bool force) {
  if (fs::exists(path) && !force) {
    throw IoError("output " + path.string() + " exists; pass --force to overwrite");
  }
}

inline void write_json_file(const fs::path& path, const json& value) {
  write_file_atomic(path, value.dump(2) + "\n");
}

struct LabelRecord {
  std::string video_id;
  std::int64_t frame_index = 0;
  int label = 0;
};

inline void to_json(json& j, const LabelRecord& r) {
  j = json{{"video_id", r.video_id}, {"frame_index", r.frame_index}, {"label", r.label}};
}

inline void from_json(const json& j, LabelRecord& r) {
  r.video_id = j.at("video_id").get<std::string>();
  r.frame_index = j.at("frame_index").get<std::int64_t>();
  r.label = j.at("label").get<int>();
}

template <typename Record>
std::vector<Record> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Record> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    json parsed = json::parse(line, nullptr, false);
    if (parsed.is_discarded()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": invalid JSON record");
    }
    try {
      records.push_back(parsed.get<Record>());
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

template <typename Record>
void write_jsonl(const fs::path& path, const std::vector<Record>& records) {
  std::string out;
  for (const auto& record : records) {
    out += json(record).dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

// ---------------------------------------------------------------------------
// description sources (files, or frame payloads pushed through perception)

struct DescriptionsSource {
  std::vector<fs::path> description_files;  // one or more, merged
  std::optional<fs::path> frames_file;      // alternative: payload refs + backend

  void validate() const {
    if (frames_file && !description_files.empty()) {
      throw ConfigError("give either description files or a frames file, not both");
    }
    if (!frames_file && description_files.empty()) {
      throw ConfigError("no descriptions source given");
    }
    for (const auto& path : description_files) {
      if (!fs::exists(path)) {
        throw ConfigError("descriptions file does not exist: " + path.string());
      }
    }
    if (frames_file && !fs::exists(*frames_file)) {
      throw ConfigError("frames file does not exist: " + frames_file->string());
    }
  }
};

/// Loads the working corpus: merges description files, or runs the
/// perception prompt over a frames file. A perceived corpus is persisted to
/// `persist_to` so the run stays auditable.
inline DescriptionCorpus load_corpus(const AppConfig& config, const DescriptionsSource& source,
                                     Gateway& gateway, bool induction_stage,
                                     const std::optional<fs::path>& persist_to) {
  source.validate();
  if (source.frames_file) {
    const auto frames = read_frames_file(*source.frames_file);
    const PromptTemplate prompt =
        config.perception_short_prompt ? prompts::perception_short() : prompts::perception();
    DescriptionCorpus corpus =
        describe_frames(frames, prompt, gateway.backend(), config.backend.model_id,
                        config.stage_temperature(induction_stage), config.backend.parallelism);
    if (persist_to) write_descriptions(*persist_to, flatten(corpus));
    return corpus;
  }
  if (source.description_files.size() == 1) {
    return ingest_descriptions(source.description_files.front());
  }
  std::vector<FrameDescription> merged;
  for (const auto& path : source.description_files) {
    auto part = flatten(ingest_descriptions(path));
    merged.insert(merged.end(), part.begin(), part.end());
  }
  return corpus_from_records(std::move(merged));
}

// ---------------------------------------------------------------------------
// induce

struct InduceOutputs {
  fs::path rules;
  std::vector<fs::path> batch_rules;
  fs::path counts;
  fs::path manifest;
};

inline json rule_counts_json(const RuleSet& rules) {
  return json{{"anomaly_human", rules.anomaly_human.size()},
              {"anomaly_env", rules.anomaly_env.size()},
              {"normal_human", rules.normal_human.size()},
              {"normal_env", rules.normal_env.size()},
              {"total", rules.total_rules()}};
}

inline InduceOutputs run_induce(const AppConfig& config, const DescriptionsSource& source,
                                const fs::path& out_dir, bool force) {
  source.validate();
  config.induction.validate();

  InduceOutputs outputs;
  outputs.rules = out_dir / "rules.json";
  outputs.counts = out_dir / "rule_counts.json";
  outputs.manifest = out_dir / "manifest.json";
  ensure_writable(outputs.rules, force);
  ensure_writable(outputs.counts, force);
  ensure_writable(outputs.manifest, force);

  Gateway gateway(config);
  const double temperature = config.stage_temperature(true);

  std::optional<fs::path> persisted;
  if (source.frames_file) {
    fs::create_directories(out_dir);
    persisted = out_dir / "descriptions.jsonl";
    ensure_writable(*persisted, force);
  }
  const DescriptionCorpus corpus = load_corpus(config, source, gateway, true, persisted);
  const ReferenceBatchPlan plan = sample_references(corpus, config.induction);

  std::vector<std::vector<FrameDescription>> batches(plan.batches.size());
  for (std::size_t b = 0; b < plan.batches.size(); ++b) {
    for (const auto& ref : plan.batches[b]) {
      const FrameDescription* frame = corpus.find(ref.video_id, ref.frame_index);
      if (frame == nullptr) {
        throw ConfigError("sampled frame missing from corpus: " + ref.video_id + "#" +
                          std::to_string(ref.frame_index));
      }
      batches[b].push_back(*frame);
    }
  }

  std::vector<fs::path> batch_paths;
  for (std::size_t b = 0; b < plan.batches.size(); ++b) {
    std::string stem = std::to_string(b);
    while (stem.size() < 2) stem.insert(stem.begin(), '0');
    batch_paths.push_back(out_dir / "batch_rules" / ("batch_" + stem + ".json"));
    ensure_writable(batch_paths.back(), force);
  }

  std::vector<RuleSet> per_batch(batches.size());
  parallel_for(batches.size(), config.backend.parallelism, [&](std::size_t b) {
    try {
      per_batch[b] = generate_rules(batches[b], config.dataset, config.induction.toggles,
                                    gateway.backend(), config.backend.model_id, temperature);
    } catch (const BackendError& e) {
      throw Error(ErrorCategory::backend,
                  "rule generation for batch " + std::to_string(b) + ": " + e.what());
    }
  });

  const RuleSet robust =
      aggregate_rules(per_batch, config.dataset, config.induction.toggles.rule_aggregation,
                      gateway.backend(), config.backend.model_id, temperature);

  fs::create_directories(out_dir / "batch_rules");
  json per_batch_counts = json::array();
  for (std::size_t b = 0; b < per_batch.size(); ++b) {
    write_json_file(batch_paths[b], json(per_batch[b]));
    outputs.batch_rules.push_back(batch_paths[b]);
    per_batch_counts.push_back(rule_counts_json(per_batch[b]));
  }

  write_json_file(outputs.rules, json(robust));
  write_json_file(outputs.counts, json{{"per_batch", per_batch_counts},
                                       {"aggregate", rule_counts_json(robust)},
                                       {"toggles", config.induction.toggles},
                                       {"n_batches", config.induction.n_batches},
                                       {"frames_per_batch", config.induction.frames_per_batch}});

  std::map<std::string, std::string> artifacts{{"rules", outputs.rules.string()},
                                               {"rule_counts", outputs.counts.string()}};
  if (persisted) artifacts["descriptions"] = persisted->string();
  write_json_file(outputs.manifest, make_manifest("induce", config, gateway, artifacts));
  return outputs;
}

inline InduceOutputs run_induce(const AppConfig& config, const fs::path& descriptions_path,
                                const fs::path& out_dir, bool force) {
  DescriptionsSource source;
  source.description_files = {descriptions_path};
  return run_induce(config, source, out_dir, force);
}

// ---------------------------------------------------------------------------
// deduce

struct DeduceOptions {
  fs::path rules;
  DescriptionsSource source;
  std::optional<fs::path> keywords;  // auto-extracted when absent
  fs::path out;
  bool base_only = false;
  bool force = false;

  // convenience for the common single-file case
  void set_descriptions(fs::path path) { source.description_files = {std::move(path)}; }
};

inline RuleSet load_rules_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open rules file " + path.string());
  json parsed = json::parse(in, nullptr, false);
  if (parsed.is_discarded()) throw ParseError("rules file is not valid JSON: " + path.string());
  return parsed.get<RuleSet>();
}

inline KeywordSet load_keywords_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open keywords file " + path.string());
  json parsed = json::parse(in, nullptr, false);
  if (parsed.is_discarded()) {
    throw ParseError("keywords file is not valid JSON: " + path.string());
  }
  return parsed.get<KeywordSet>();
}

/// Full deduction pass: keyword matching, smoothing, scoring, and (unless
/// base_only) description modification plus per-frame recheck.
inline fs::path run_deduce(const AppConfig& config, const DeduceOptions& options) {
  options.source.validate();
  if (!fs::exists(options.rules)) {
    throw ConfigError("rules file does not exist: " + options.rules.string());
  }
  ensure_writable(options.out, options.force);
  config.smoothing.validate();

  const RuleSet rules = load_rules_file(options.rules);

  Gateway gateway(config);
  const double temperature = config.stage_temperature(false);

  std::optional<fs::path> persisted;
  if (options.source.frames_file) {
    persisted = options.out.string() + ".descriptions.jsonl";
    ensure_writable(*persisted, options.force);
  }
  const DescriptionCorpus corpus = load_corpus(config, options.source, gateway, false, persisted);
  if (corpus.videos.empty()) throw ConfigError("descriptions source holds no frames");

  KeywordSet keywords;
  std::optional<fs::path> extracted_keywords_path;
  if (options.keywords) {
    keywords = load_keywords_file(*options.keywords);
  } else {
    keywords = extract_keywords(rules, gateway.backend(), config.backend.model_id, temperature);
    extracted_keywords_path = options.out.string() + ".keywords.json";
    if (!fs::exists(*extracted_keywords_path) || options.force) {
      write_json_file(*extracted_keywords_path, json(keywords));
    }
  }

  std::vector<PredictionRecord> records;
  records.reserve(corpus.total_frames());
  for (const auto& [video_id, frames] : corpus.videos) {
    std::vector<int> y_initial;
    y_initial.reserve(frames.size());
    for (const auto& frame : frames) y_initial.push_back(match_keywords(frame, keywords));

    const SmoothedSequence smoothed = smooth_sequence(y_initial, config.smoothing);

    std::vector<PredictionRecord> video_records(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
      auto& record = video_records[i];
      record.video_id = video_id;
      record.frame_index = frames[i].frame_index;
      record.y_initial = smoothed.y_initial[i];
      record.s_ema = smoothed.s[i];
      record.y_smoothed = smoothed.y_smoothed[i];
      record.anomaly_score = smoothed.scores[i];
      record.text = frames[i].text;
    }

    if (!options.base_only) {
      const ModifiedDescriptions modified = modify_descriptions(
          frames, smoothed.y_initial, smoothed.y_smoothed, keywords, config.smoothing.mod_window);

      std::vector<FrameDescription> recheck_frames = frames;
      for (std::size_t i = 0; i < frames.size(); ++i) {
        recheck_frames[i].text = modified.text[i];
        if (modified.changed[i]) video_records[i].modified_text = modified.text[i];
      }

      const std::string current_video = video_id;
      parallel_for(frames.size(), config.backend.parallelism, [&](std::size_t i) {
        if (i % config.recheck_stride != 0) return;
        try {
          Verdict verdict =
              recheck(recheck_frames[i], smoothed.y_smoothed[i], rules, gateway.backend(),
                      config.backend.model_id, temperature);
          video_records[i].y_final = verdict.label;
          video_records[i].reasoning_text = verdict.raw_text;
          video_records[i].verdict_parse_ok = verdict.parse_ok;
        } catch (const BackendError& e) {
          throw Error(ErrorCategory::backend,
                      "recheck of " + current_video + "#" +
                          std::to_string(recheck_frames[i].frame_index) + ": " + e.what());
        }
      });

      std::vector<int> y_star(frames.size());
      for (std::size_t i = 0; i < frames.size(); ++i) {
        y_star[i] = video_records[i].y_final.value_or(smoothed.y_smoothed[i]);
      }
      const std::vector<double> final_seq = final_scores(y_star, smoothed.tau);
      for (std::size_t i = 0; i < frames.size(); ++i) {
        video_records[i].final_score = final_seq[i];
      }
    }

    records.insert(records.end(), video_records.begin(), video_records.end());
  }

  write_jsonl(options.out, records);

  std::map<std::string, std::string> artifacts{{"predictions", options.out.string()}};
  if (persisted) artifacts["descriptions"] = persisted->string();
  if (extracted_keywords_path) artifacts["keywords"] = extracted_keywords_path->string();
  const fs::path manifest_path = options.out.string() + ".manifest.json";
  if (!fs::exists(manifest_path) || options.force) {
    write_json_file(manifest_path, make_manifest("deduce", config, gateway, artifacts));
  }
  return options.out;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  fs::path predictions;
  fs::path labels;
  std::string score_field = "anomaly_score";  // anomaly_score | final | both
  bool per_video = false;
};

namespace detail {

inline json eval_stage_report(const std::vector<LabelRecord>& labels,
                              const std::map<std::pair<std::string, std::int64_t>,
                                             const PredictionRecord*>& by_key,
                              bool final_stage, bool per_video) {
  std::vector<double> scores;
  std::vector<int> preds;
  std::vector<int> truth;
  std::map<std::string, std::pair<std::vector<double>, std::vector<int>>> per_video_data;
  scores.reserve(labels.size());
  for (const auto& label : labels) {
    const PredictionRecord* record = by_key.at({label.video_id, label.frame_index});
    double score;
    int pred;
    if (final_stage) {
      if (!record->final_score) {
        throw ConfigError("predictions lack final scores (deduce ran with --base-only?)");
      }
      score = *record->final_score;
      pred = record->y_final.value_or(record->y_smoothed);
    } else {
      score = record->anomaly_score;
      pred = record->y_smoothed;
    }
    scores.push_back(score);
    preds.push_back(pred);
    truth.push_back(label.label);
    auto& bucket = per_video_data[label.video_id];
    bucket.first.push_back(score);
    bucket.second.push_back(label.label);
  }

  const ClassificationMetrics metrics = classification_metrics(preds, truth);
  json report{{"stage", final_stage ? "final" : "base"},
              {"frames", labels.size()},
              {"auc", roc_auc(scores, truth)},
              {"metrics", metrics}};
  if (per_video) {
    double sum = 0.0;
    std::size_t used = 0, skipped = 0;
    for (const auto& [video_id, data] : per_video_data) {
      bool has_pos = false, has_neg = false;
      for (int v : data.second) (v == 1 ? has_pos : has_neg) = true;
      if (!has_pos || !has_neg) {
        ++skipped;
        continue;
      }
      sum += roc_auc(data.first, data.second);
      ++used;
    }
    report["per_video_auc"] =
        used == 0 ? json(nullptr) : json(sum / static_cast<double>(used));
    report["per_video_auc_videos"] = used;
    report["per_video_auc_skipped_single_class"] = skipped;
  }
  return report;
}

}  // namespace detail

inline json run_eval(const EvalOptions& options) {
  const auto records = read_jsonl<PredictionRecord>(options.predictions);
  const auto labels = read_jsonl<LabelRecord>(options.labels);
  if (labels.empty()) throw ConfigError("labels file holds no records");

  std::map<std::pair<std::string, std::int64_t>, const PredictionRecord*> by_key;
  for (const auto& record : records) {
    by_key[{record.video_id, record.frame_index}] = &record;
  }
  std::vector<std::string> missing;
  for (const auto& label : labels) {
    if (by_key.find({label.video_id, label.frame_index}) == by_key.end()) {
      missing.push_back(label.video_id + "#" + std::to_string(label.frame_index));
    }
  }
  if (!missing.empty()) {
    std::string listed;
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i) {
      if (i > 0) listed += ", ";
      listed += missing[i];
    }
    throw ConfigError(std::to_string(missing.size()) +
                      " labeled frames have no prediction record: " + listed);
  }

  if (options.score_field == "both") {
    return json{{"base", detail::eval_stage_report(labels, by_key, false, options.per_video)},
                {"final", detail::eval_stage_report(labels, by_key, true, options.per_video)}};
  }
  if (options.score_field == "final") {
    return detail::eval_stage_report(labels, by_key, true, options.per_video);
  }
  if (options.score_field == "anomaly_score") {
    return detail::eval_stage_report(labels, by_key, false, options.per_video);
  }
  throw ConfigError("score_field must be anomaly_score, final, or both");
}

// ---------------------------------------------------------------------------
// eval-reasoning

struct ReasoningEvalResult {
  DoublyRightReport report;
  json items = json::array();  // per-item records
};

inline ReasoningEvalResult run_eval_reasoning(const AppConfig& config, const fs::path& choices,
                                              const fs::path& rules_path) {
  const RuleSet rules = load_rules_file(rules_path);
  const std::string rules_text =
      rules.raw_text.empty() ? render_rules(rules) : rules.raw_text;
  const auto items = read_jsonl<ChoiceItem>(choices);
  if (items.empty()) throw ConfigError("choices file holds no items");

  Gateway gateway(config);
  const double temperature = config.stage_temperature(false);

  ReasoningEvalResult result;
  std::vector<json> item_records(items.size());
  std::vector<std::pair<DrCategory, bool>> outcomes(items.size());
  parallel_for(items.size(), config.backend.parallelism, [&](std::size_t i) {
    const ChoiceItem& item = items[i];
    std::string choices_block;
    for (const auto& choice : item.choices) {
      choices_block += std::string(1, choice.letter) + ". " + choice.text + "\n";
    }
    ChatExchange exchange;
    exchange.model_id = config.backend.model_id;
    exchange.temperature = temperature;
    exchange.messages = prompts::choice_messages(rules_text, item.description, choices_block);
    const std::string reply = gateway.backend().chat(exchange);
    const auto chosen = extract_choice_letter(reply);

    DrCategory category = DrCategory::WW;  // conservative default on unparseable replies
    bool parse_ok = false;
    if (chosen) {
      bool known = false;
      for (const auto& choice : item.choices) known = known || choice.letter == *chosen;
      if (known) {
        category = doubly_right(*chosen, item);
        parse_ok = true;
      }
    }
    outcomes[i] = {category, parse_ok};
    item_records[i] = json{{"video_id", item.video_id},
                           {"frame_index", item.frame_index},
                           {"chosen", chosen ? json(std::string(1, *chosen)) : json(nullptr)},
                           {"category", to_string(category)},
                           {"parse_ok", parse_ok},
                           {"reply", reply}};
  });

  for (std::size_t i = 0; i < items.size(); ++i) {
    result.report.add(outcomes[i].first);
    if (!outcomes[i].second) ++result.report.flagged_unparseable;
    result.items.push_back(std::move(item_records[i]));
  }
  return result;
}

// ---------------------------------------------------------------------------
// simgen

struct SimgenOutputs {
  fs::path descriptions;
  fs::path labels;
  fs::path manifest;
};

inline SimgenOutputs run_simgen(const SimConfig& config, const fs::path& out_dir, bool force) {
  config.validate();
  SimgenOutputs outputs;
  outputs.descriptions = out_dir / "descriptions.jsonl";
  outputs.labels = out_dir / "labels.jsonl";
  outputs.manifest = out_dir / "manifest.json";
  ensure_writable(outputs.descriptions, force);
  ensure_writable(outputs.labels, force);
  ensure_writable(outputs.manifest, force);
  fs::create_directories(out_dir);

  std::vector<FrameDescription> corpus = generate_corpus(config);
  if (config.noise_rate > 0.0) {
    corpus = inject_noise(std::move(corpus), config, config.noise_rate, config.seed + 1);
  }

  std::vector<LabelRecord> labels;
  labels.reserve(corpus.size());
  for (const auto& frame : corpus) {
    labels.push_back({frame.video_id, frame.frame_index, frame.label.value_or(0)});
  }
  write_jsonl(outputs.descriptions, corpus);
  write_jsonl(outputs.labels, labels);
  write_json_file(outputs.manifest,
                  json{{"command", "simgen"},
                       {"created_at", utc_timestamp()},
                       {"config", config},
                       {"noise_seed", config.seed + 1},
                       {"artifacts",
                        {{"descriptions", outputs.descriptions.string()},
                         {"labels", outputs.labels.string()}}}});
  return outputs;
}

}  // namespace vadrules
