#include "affect/refine.hpp"

#include <sstream>

namespace affect {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kAgreed: return "agreed";
    case Provenance::kRefined: return "refined";
    case Provenance::kFallback: return "fallback";
    case Provenance::kBypassed: return "bypassed";
  }
  return "agreed";
}

std::optional<Provenance> parse_provenance(std::string_view s) {
  for (Provenance p : {Provenance::kAgreed, Provenance::kRefined, Provenance::kFallback, Provenance::kBypassed}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

bool provenance_consistent(const RefinedEmotion& r) {
  switch (r.provenance) {
    case Provenance::kAgreed: return r.label == r.llm_label && r.label == r.vad_label;
    case Provenance::kRefined: return r.llm_label != r.vad_label;
    case Provenance::kFallback: return r.label == r.vad_label && r.llm_label != r.vad_label;
    case Provenance::kBypassed:
      return r.label == EmotionLabel::kNeutral && r.llm_label == EmotionLabel::kNeutral &&
             r.sub.polarity == SentimentPolarity::kNeutral;
  }
  return false;
}

bool check_consistency(EmotionLabel llm_label, EmotionLabel vad_label) { return llm_label == vad_label; }

PromptRequest build_refine_prompt(const SubSentence& sub, EmotionLabel llm_label, EmotionLabel vad_label,
                                  std::string_view model_id, const std::optional<RetryNote>& retry) {
  if (check_consistency(llm_label, vad_label)) {
    throw InvalidArgument("refinement prompt requested for agreeing labels");
  }
  std::ostringstream user;
  user << "Two annotations of the emotion toward an aspect category disagree. Decide the correct one.\n\n"
       << "Sub-sentence: \"" << sub.text << "\"\n"
       << "Aspect category: " << sub.category << '\n'
       << "Sentiment polarity: " << to_string(sub.polarity) << '\n'
       << "Emotion generated by a language model: " << to_string(llm_label) << '\n'
       << "Emotion mapped from valence-arousal-dominance scores: " << to_string(vad_label) << "\n\n"
       << "Consider the wording of the sub-sentence, its aspect category and its sentiment polarity. "
          "The answer may be either candidate or another emotion from the list.\n"
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

RefineOutcome refine(const SubSentence& sub, EmotionLabel llm_label, EmotionLabel vad_label, LlmClient& client,
                     const RefineOptions& options) {
  RefineOutcome out;
  out.result.sub = sub;
  out.result.llm_label = llm_label;
  out.result.vad_label = vad_label;

  if (check_consistency(llm_label, vad_label)) {
    out.result.label = llm_label;
    out.result.provenance = Provenance::kAgreed;
    return out;
  }
  if (options.neutral_bypass && llm_label == EmotionLabel::kNeutral &&
      sub.polarity == SentimentPolarity::kNeutral) {
    out.result.label = EmotionLabel::kNeutral;
    out.result.provenance = Provenance::kBypassed;
    return out;
  }

  out.conversations = 1;
  std::optional<RetryNote> retry;
  for (int attempt = 0; attempt < kParseAttempts; ++attempt) {
    const LlmResponse response = client.ask(build_refine_prompt(sub, llm_label, vad_label, options.model_id, retry));
    ++out.llm_calls;
    try {
      out.result.label = parse_emotion_response(response.text);
      out.result.provenance = Provenance::kRefined;
      return out;
    } catch (const ParseError& e) {
      retry = RetryNote{response.text, e.what()};
    }
  }
  out.result.label = vad_label;
  out.result.provenance = Provenance::kFallback;
  return out;
}

}  // namespace affect
