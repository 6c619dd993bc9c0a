#pragma once

// The seven-label emotion set (Ekman's six plus neutral) and LLM emotion
// generation for decomposed sub-sentences.

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "affect/decompose.hpp"
#include "affect/llm_client.hpp"

namespace affect {

enum class EmotionLabel { kAnger, kDisgust, kFear, kJoy, kSadness, kSurprise, kNeutral };

inline constexpr std::array<EmotionLabel, 7> kAllEmotions = {
    EmotionLabel::kAnger, EmotionLabel::kDisgust,  EmotionLabel::kFear,   EmotionLabel::kJoy,
    EmotionLabel::kSadness, EmotionLabel::kSurprise, EmotionLabel::kNeutral};

std::string_view to_string(EmotionLabel e);

// Case-insensitive; "happiness" is accepted as an alias of joy.
std::optional<EmotionLabel> parse_emotion_label(std::string_view word);

struct GeneratedEmotion {
  SubSentence sub;
  EmotionLabel label = EmotionLabel::kNeutral;
  // Always "llm"; kept so records state where the label came from.
  std::string source = "llm";
};

// Raised when no label could be parsed after every attempt. The pipeline skips
// the sub-sentence instead of guessing a label.
class AnnotationError : public Error {
public:
  AnnotationError(std::string parent_id, int index, const std::string& what)
      : Error(what), parent_id_(std::move(parent_id)), index_(index) {}
  const std::string& parent_id() const { return parent_id_; }
  int index() const { return index_; }

private:
  std::string parent_id_;
  int index_;
};

PromptRequest build_emotion_prompt(const SubSentence& sub, std::string_view model_id = kDefaultModelId,
                                   const std::optional<RetryNote>& retry = std::nullopt);

// Accepts a bare label or a label as the final word, after trimming,
// lowercasing and stripping punctuation. Throws ParseError when no label is
// recognised or when more than one distinct label appears.
EmotionLabel parse_emotion_response(std::string_view response);

struct EmotionOutcome {
  GeneratedEmotion emotion;
  int llm_calls = 0;
};

// Up to kParseAttempts rounds; throws AnnotationError on exhaustion.
EmotionOutcome generate_emotion(const SubSentence& sub, LlmClient& client,
                                std::string_view model_id = kDefaultModelId);

// Shared instruction listing the allowed labels.
std::string emotion_label_instruction();

}  // namespace affect
