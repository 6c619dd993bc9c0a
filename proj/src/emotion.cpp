#include "affect/emotion.hpp"

#include <cctype>
#include <set>
#include <sstream>
#include <vector>

#include "affect/text.hpp"

namespace affect {

std::string_view to_string(EmotionLabel e) {
  switch (e) {
    case EmotionLabel::kAnger: return "anger";
    case EmotionLabel::kDisgust: return "disgust";
    case EmotionLabel::kFear: return "fear";
    case EmotionLabel::kJoy: return "joy";
    case EmotionLabel::kSadness: return "sadness";
    case EmotionLabel::kSurprise: return "surprise";
    case EmotionLabel::kNeutral: return "neutral";
  }
  return "neutral";
}

std::optional<EmotionLabel> parse_emotion_label(std::string_view word) {
  const std::string w = text::to_lower(text::trim(word));
  if (w == "happiness") return EmotionLabel::kJoy;
  for (EmotionLabel e : kAllEmotions) {
    if (to_string(e) == w) return e;
  }
  return std::nullopt;
}

std::string emotion_label_instruction() {
  std::ostringstream out;
  out << "Choose exactly one emotion from: ";
  for (std::size_t i = 0; i < kAllEmotions.size(); ++i) {
    if (i) out << ", ";
    out << to_string(kAllEmotions[i]);
  }
  out << ".\nAnswer with the single emotion word only.";
  return out.str();
}

PromptRequest build_emotion_prompt(const SubSentence& sub, std::string_view model_id,
                                   const std::optional<RetryNote>& retry) {
  std::ostringstream user;
  user << "Identify the emotion the reviewer expresses toward the aspect category.\n\n"
       << "Sub-sentence: \"" << sub.text << "\"\n"
       << "Aspect category: " << sub.category << '\n'
       << "Sentiment polarity: " << to_string(sub.polarity) << "\n\n"
       << emotion_label_instruction();
  if (retry) user << render_retry_note(*retry);

  PromptRequest req;
  req.model_id = std::string(model_id);
  req.system_text = "You are an expert annotator of emotions in customer reviews.";
  req.user_text = user.str();
  req.temperature = 0.0;
  req.max_output_tokens = 8;
  return req;
}

EmotionLabel parse_emotion_response(std::string_view response) {
  std::vector<std::string> words;
  std::string current;
  for (char c : text::to_lower(text::trim(response))) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      current.push_back(c);
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  if (words.empty()) throw ParseError("empty emotion answer");

  std::set<EmotionLabel> found;
  for (const auto& w : words) {
    if (auto e = parse_emotion_label(w)) found.insert(*e);
  }
  if (found.size() > 1) throw ParseError("ambiguous emotion answer: '" + std::string(response) + "'");
  auto last = parse_emotion_label(words.back());
  if (!last) throw ParseError("no emotion label in answer: '" + std::string(response) + "'");
  return *last;
}

EmotionOutcome generate_emotion(const SubSentence& sub, LlmClient& client, std::string_view model_id) {
  EmotionOutcome out;
  std::optional<RetryNote> retry;
  std::string last_problem;
  for (int attempt = 0; attempt < kParseAttempts; ++attempt) {
    const LlmResponse response = client.ask(build_emotion_prompt(sub, model_id, retry));
    ++out.llm_calls;
    try {
      out.emotion = GeneratedEmotion{sub, parse_emotion_response(response.text), "llm"};
      return out;
    } catch (const ParseError& e) {
      last_problem = e.what();
      retry = RetryNote{response.text, last_problem};
    }
  }
  throw AnnotationError(sub.parent_id, sub.index,
                        "no emotion label for " + sub.parent_id + "#" + std::to_string(sub.index) +
                            " after " + std::to_string(kParseAttempts) + " attempts: " + last_problem);
}

}  // namespace affect
