#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vadrules/run.hpp"
#include "vadrules/smoothing.hpp"

namespace {

using vadrules::AppConfig;
using vadrules::json;

int exit_code_for(vadrules::ErrorCategory category) {
  switch (category) {
    case vadrules::ErrorCategory::config: return 2;
    case vadrules::ErrorCategory::parse: return 3;
    case vadrules::ErrorCategory::backend: return 4;
    case vadrules::ErrorCategory::io: return 5;
  }
  return 1;
}

const char* category_name(vadrules::ErrorCategory category) {
  switch (category) {
    case vadrules::ErrorCategory::config: return "config";
    case vadrules::ErrorCategory::parse: return "parse";
    case vadrules::ErrorCategory::backend: return "backend";
    case vadrules::ErrorCategory::io: return "io";
  }
  return "unknown";
}

AppConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return AppConfig{};
  return vadrules::load_app_config(path);
}

int cmd_smooth(double alpha, std::size_t padding) {
  vadrules::SmoothingParams params;
  params.alpha = alpha;
  params.padding = padding;
  params.mod_window = 2 * padding + 1;
  params.validate();

  std::vector<int> y;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(std::cin, line)) {
    ++line_no;
    auto trimmed = vadrules::detail::trim(line);
    if (trimmed.empty()) continue;
    if (trimmed == "0") {
      y.push_back(0);
    } else if (trimmed == "1") {
      y.push_back(1);
    } else {
      throw vadrules::ParseError("stdin line " + std::to_string(line_no) +
                                 ": expected 0 or 1, got '" + std::string(trimmed) + "'");
    }
  }
  if (y.empty()) throw vadrules::ConfigError("no input labels on stdin");

  const vadrules::SmoothedSequence smoothed = vadrules::smooth_sequence(y, params);
  for (std::size_t i = 0; i < y.size(); ++i) {
    json record{{"frame_index", i},
                {"y_initial", smoothed.y_initial[i]},
                {"s_ema", smoothed.s[i]},
                {"tau", smoothed.tau},
                {"y_smoothed", smoothed.y_smoothed[i]},
                {"anomaly_score", smoothed.scores[i]}};
    std::cout << record.dump() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rule-based video anomaly detection pipeline (induction + deduction)"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON configuration file")->envname("VADRULES_CONFIG");

  // induce
  auto* induce = app.add_subcommand("induce", "Derive robust rules from normal descriptions");
  std::vector<std::string> induce_descriptions;
  std::string induce_frames, induce_out = "induction_out";
  bool induce_force = false;
  induce->add_option("--descriptions", induce_descriptions,
                     "descriptions JSONL file(s); repeat to merge corpora");
  induce->add_option("--frames", induce_frames,
                     "frame payload JSONL file (described through the backend)");
  induce->add_option("--out-dir", induce_out, "output directory");
  induce->add_flag("--force", induce_force, "overwrite existing outputs");

  // deduce
  auto* deduce = app.add_subcommand("deduce", "Apply rules to test descriptions");
  std::vector<std::string> deduce_descriptions;
  std::string deduce_rules, deduce_frames, deduce_keywords, deduce_out = "predictions.jsonl";
  bool deduce_base_only = false, deduce_force = false;
  deduce->add_option("--rules", deduce_rules, "rules JSON file")->required();
  deduce->add_option("--descriptions", deduce_descriptions,
                     "descriptions JSONL file(s); repeat to merge corpora");
  deduce->add_option("--frames", deduce_frames,
                     "frame payload JSONL file (described through the backend)");
  deduce->add_option("--keywords", deduce_keywords,
                     "keywords JSON file (extracted via the backend when omitted)");
  deduce->add_option("--out", deduce_out, "predictions output file");
  deduce->add_flag("--base-only", deduce_base_only, "stop after smoothing; skip the recheck");
  deduce->add_flag("--force", deduce_force, "overwrite existing outputs");

  // smooth
  auto* smooth = app.add_subcommand("smooth", "Smooth a 0/1 sequence from stdin");
  double smooth_alpha = 0.33;
  std::size_t smooth_padding = 5;
  smooth->add_option("--alpha", smooth_alpha, "EMA weight in (0,1]");
  smooth->add_option("--padding", smooth_padding, "majority-vote window padding");

  // eval
  auto* eval = app.add_subcommand("eval", "Frame-level metrics over predictions");
  std::string eval_predictions, eval_labels, eval_score_field = "anomaly_score", eval_out;
  bool eval_per_video = false, eval_force = false;
  eval->add_option("--predictions", eval_predictions, "predictions JSONL file")->required();
  eval->add_option("--labels", eval_labels, "labels JSONL file")->required();
  eval->add_option("--score-field", eval_score_field, "anomaly_score | final | both");
  eval->add_flag("--per-video", eval_per_video, "also report the per-video averaged AUC");
  eval->add_option("--out", eval_out, "write the report JSON here as well");
  eval->add_flag("--force", eval_force, "overwrite an existing report");

  // eval-reasoning
  auto* evalr = app.add_subcommand("eval-reasoning", "Doubly-right reasoning evaluation");
  std::string evalr_choices, evalr_rules, evalr_out;
  bool evalr_force = false;
  evalr->add_option("--choices", evalr_choices, "choice items JSONL file")->required();
  evalr->add_option("--rules", evalr_rules, "rules JSON file")->required();
  evalr->add_option("--out", evalr_out, "write the report JSON here as well");
  evalr->add_flag("--force", evalr_force, "overwrite an existing report");

  // simgen
  auto* simgen = app.add_subcommand("simgen", "Generate a labeled synthetic corpus");
  std::string simgen_out = "sim_out";
  bool simgen_force = false;
  std::optional<std::uint64_t> simgen_seed;
  std::optional<double> simgen_noise;
  std::optional<std::size_t> simgen_videos, simgen_frames;
  simgen->add_option("--out-dir", simgen_out, "output directory");
  simgen->add_option("--seed", simgen_seed, "overrides simgen.seed from the config");
  simgen->add_option("--noise-rate", simgen_noise, "overrides simgen.noise_rate");
  simgen->add_option("--videos", simgen_videos, "overrides simgen.videos");
  simgen->add_option("--frames-per-video", simgen_frames, "overrides simgen.frames_per_video");
  simgen->add_flag("--force", simgen_force, "overwrite existing outputs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*induce) {
      AppConfig config = load_config_or_default(config_path);
      vadrules::DescriptionsSource source;
      for (const auto& path : induce_descriptions) source.description_files.push_back(path);
      if (!induce_frames.empty()) source.frames_file = induce_frames;
      auto outputs = vadrules::run_induce(config, source, induce_out, induce_force);
      std::cout << "rules: " << outputs.rules.string() << "\n"
                << "rule counts: " << outputs.counts.string() << "\n"
                << "manifest: " << outputs.manifest.string() << "\n";
      return 0;
    }
    if (*deduce) {
      AppConfig config = load_config_or_default(config_path);
      vadrules::DeduceOptions options;
      options.rules = deduce_rules;
      for (const auto& path : deduce_descriptions) {
        options.source.description_files.push_back(path);
      }
      if (!deduce_frames.empty()) options.source.frames_file = deduce_frames;
      if (!deduce_keywords.empty()) options.keywords = deduce_keywords;
      options.out = deduce_out;
      options.base_only = deduce_base_only;
      options.force = deduce_force;
      auto out = vadrules::run_deduce(config, options);
      std::cout << "predictions: " << out.string() << "\n";
      return 0;
    }
    if (*smooth) {
      return cmd_smooth(smooth_alpha, smooth_padding);
    }
    if (*eval) {
      vadrules::EvalOptions options;
      options.predictions = eval_predictions;
      options.labels = eval_labels;
      options.score_field = eval_score_field;
      options.per_video = eval_per_video;
      if (!eval_out.empty()) vadrules::ensure_writable(eval_out, eval_force);
      json report = vadrules::run_eval(options);
      std::cout << report.dump(2) << "\n";
      if (!eval_out.empty()) vadrules::write_json_file(eval_out, report);
      return 0;
    }
    if (*evalr) {
      AppConfig config = load_config_or_default(config_path);
      if (!evalr_out.empty()) vadrules::ensure_writable(evalr_out, evalr_force);
      auto result = vadrules::run_eval_reasoning(config, evalr_choices, evalr_rules);
      json report(result.report);
      report["items"] = result.items;
      std::cout << json(result.report).dump(2) << "\n";
      if (!evalr_out.empty()) vadrules::write_json_file(evalr_out, report);
      return 0;
    }
    if (*simgen) {
      AppConfig config = load_config_or_default(config_path);
      vadrules::SimConfig sim = config.simgen;
      if (simgen_seed) sim.seed = *simgen_seed;
      if (simgen_noise) sim.noise_rate = *simgen_noise;
      if (simgen_videos) sim.videos = *simgen_videos;
      if (simgen_frames) sim.frames_per_video = *simgen_frames;
      auto outputs = vadrules::run_simgen(sim, simgen_out, simgen_force);
      std::cout << "descriptions: " << outputs.descriptions.string() << "\n"
                << "labels: " << outputs.labels.string() << "\n";
      return 0;
    }
  } catch (const vadrules::Error& e) {
    std::cerr << "error[" << category_name(e.category()) << "]: " << e.what() << "\n";
    return exit_code_for(e.category());
  } catch (const std::invalid_argument& e) {
    std::cerr << "error[config]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
