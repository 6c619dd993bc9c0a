#pragma once

// JSONL records exchanged between pipeline stages. Writers emit keys in a
// fixed order; readers report the 1-based line number on schema errors.

#include <filesystem>
#include <string>
#include <vector>

#include "affect/refine.hpp"
#include "affect/targets.hpp"
#include "affect/vadspace.hpp"

namespace affect {

struct EmotionRecord {
  std::string parent_id;
  int index = 0;
  std::string category;
  SentimentPolarity polarity = SentimentPolarity::kNeutral;
  EmotionLabel emotion_llm = EmotionLabel::kNeutral;

  friend bool operator==(const EmotionRecord&, const EmotionRecord&) = default;
};

struct VadRecord {
  std::string parent_id;
  int index = 0;
  std::string category;
  SentimentPolarity polarity = SentimentPolarity::kNeutral;
  RawVad raw;
  Vad vad;
  EmotionLabel emotion_vad = EmotionLabel::kNeutral;

  friend bool operator==(const VadRecord&, const VadRecord&) = default;
};

struct PredictionRecord {
  std::string parent_id;
  std::string output_text;
};

std::string to_jsonl_line(const SubSentence& s);
std::string to_jsonl_line(const EmotionRecord& r);
std::string to_jsonl_line(const VadRecord& r);
// {parent_id, index, category, polarity, emotion_llm, emotion_vad, emotion_final, provenance}
std::string to_jsonl_line(const RefinedEmotion& r);
std::string to_jsonl_line(const TargetInstance& t);
std::string to_jsonl_line(const PredictionRecord& p);

std::vector<SubSentence> read_subsentences(const std::filesystem::path& path);
std::vector<EmotionRecord> read_emotions(const std::filesystem::path& path);
std::vector<VadRecord> read_vad_records(const std::filesystem::path& path);
// The sub-sentence text is not part of the refined record and comes back empty.
std::vector<RefinedEmotion> read_refined(const std::filesystem::path& path);
std::vector<TargetInstance> read_target_instances(const std::filesystem::path& path);
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

}  // namespace affect
