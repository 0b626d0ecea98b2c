#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "backend.hpp"
#include "prompts.hpp"
#include "types.hpp"

namespace vadrules {

struct FramePayloadRef {
  std::string video_id;
  std::int64_t frame_index = 0;
  std::string payload;  // opaque reference, typically an image data URL
};

/// Descriptions grouped per video, sorted by frame index.
struct DescriptionCorpus {
  std::map<std::string, std::vector<FrameDescription>> videos;
  std::vector<std::string> gap_warnings;

  std::size_t total_frames() const {
    std::size_t n = 0;
    for (const auto& [id, frames] : videos) n += frames.size();
    return n;
  }

  std::vector<const FrameDescription*> normal_frames() const {
    std::vector<const FrameDescription*> out;
    for (const auto& [id, frames] : videos) {
      for (const auto& frame : frames) {
        if (frame.is_normal()) out.push_back(&frame);
      }
    }
    return out;
  }

  const FrameDescription* find(const std::string& video_id, std::int64_t frame_index) const {
    auto it = videos.find(video_id);
    if (it == videos.end()) return nullptr;
    for (const auto& frame : it->second) {
      if (frame.frame_index == frame_index) return &frame;
    }
    return nullptr;
  }
};

/// Groups records by video, sorts by frame index, rejects duplicate
/// (video_id, frame_index) pairs, and reports index gaps as warnings.
inline DescriptionCorpus corpus_from_records(std::vector<FrameDescription> records) {
  DescriptionCorpus corpus;
  for (auto& record : records) {
    if (record.frame_index < 0) {
      throw ParseError("negative frame_index in video " + record.video_id);
    }
    corpus.videos[record.video_id].push_back(std::move(record));
  }
  for (auto& [video_id, frames] : corpus.videos) {
    std::sort(frames.begin(), frames.end(),
              [](const FrameDescription& a, const FrameDescription& b) {
                return a.frame_index < b.frame_index;
              });
    for (std::size_t i = 1; i < frames.size(); ++i) {
      if (frames[i].frame_index == frames[i - 1].frame_index) {
        throw ParseError("duplicate frame " + std::to_string(frames[i].frame_index) +
                         " in video " + video_id);
      }
      for (std::int64_t missing = frames[i - 1].frame_index + 1;
           missing < frames[i].frame_index; ++missing) {
        corpus.gap_warnings.push_back("video " + video_id + ": missing frame " +
                                      std::to_string(missing));
      }
    }
  }
  return corpus;
}

/// Reads a line-delimited descriptions file. Malformed lines and duplicate
/// frames raise ParseError with the offending line number.
inline DescriptionCorpus ingest_descriptions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open descriptions file " + path.string());
  std::vector<FrameDescription> records;
  std::map<std::pair<std::string, std::int64_t>, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    json parsed = json::parse(line, nullptr, false);
    if (parsed.is_discarded()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": invalid JSON record");
    }
    FrameDescription record;
    try {
      record = parsed.get<FrameDescription>();
    } catch (const std::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (record.text.empty() && !record.perception_failure) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": empty text without a perception_failure flag");
    }
    auto key = std::make_pair(record.video_id, record.frame_index);
    auto [it, inserted] = seen.emplace(key, line_no);
    if (!inserted) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": duplicate frame " +
                       std::to_string(record.frame_index) + " of video " + record.video_id +
                       " (first seen on line " + std::to_string(it->second) + ")");
    }
    records.push_back(std::move(record));
  }
  return corpus_from_records(std::move(records));
}

inline void write_descriptions(const std::filesystem::path& path,
                               const std::vector<FrameDescription>& records) {
  std::string out;
  for (const auto& record : records) {
    out += json(record).dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

inline std::vector<FrameDescription> flatten(const DescriptionCorpus& corpus) {
  std::vector<FrameDescription> out;
  for (const auto& [id, frames] : corpus.videos) {
    out.insert(out.end(), frames.begin(), frames.end());
  }
  return out;
}

/// Asks the backend to describe one frame. An empty reply marks the frame as
/// a perception failure rather than dropping it.
inline FrameDescription describe_frame(const FramePayloadRef& frame,
                                       const PromptTemplate& perception_prompt,
                                       ChatBackend& backend, const std::string& model_id,
                                       double temperature = 0.0) {
  if (perception_prompt.name != "p_v") {
    throw ConfigError("describe_frame requires the perception prompt (p_v), got " +
                      perception_prompt.name);
  }
  ChatExchange exchange;
  exchange.model_id = model_id;
  exchange.temperature = temperature;
  exchange.messages.push_back(
      {Role::user, frame.payload + "\n" + perception_prompt.render({})});

  FrameDescription description;
  description.video_id = frame.video_id;
  description.frame_index = frame.frame_index;
  description.text = backend.chat(exchange);
  description.perception_failure = detail::trim(description.text).empty();
  if (description.perception_failure) description.text.clear();
  return description;
}

inline void to_json(json& j, const FramePayloadRef& f) {
  j = json{{"video_id", f.video_id}, {"frame_index", f.frame_index}, {"payload", f.payload}};
}

inline void from_json(const json& j, FramePayloadRef& f) {
  f.video_id = j.at("video_id").get<std::string>();
  f.frame_index = j.at("frame_index").get<std::int64_t>();
  if (f.frame_index < 0) throw ParseError("frame_index must be non-negative");
  f.payload = j.at("payload").get<std::string>();
}

/// Reads a line-delimited frames file of opaque payload references.
inline std::vector<FramePayloadRef> read_frames_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open frames file " + path.string());
  std::vector<FramePayloadRef> frames;
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
      frames.push_back(parsed.get<FramePayloadRef>());
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return frames;
}

/// Describes many frames through the backend with bounded concurrency.
/// Results land in corpus order (by video, then frame index) regardless of
/// completion order.
inline DescriptionCorpus describe_frames(const std::vector<FramePayloadRef>& frames,
                                         const PromptTemplate& perception_prompt,
                                         ChatBackend& backend, const std::string& model_id,
                                         double temperature, std::size_t parallelism) {
  std::vector<FrameDescription> records(frames.size());
  parallel_for(frames.size(), parallelism, [&](std::size_t i) {
    records[i] = describe_frame(frames[i], perception_prompt, backend, model_id, temperature);
  });
  return corpus_from_records(std::move(records));
}

}  // namespace vadrules
