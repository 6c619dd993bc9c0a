#pragma once

// Consistency gate between the LLM emotion and the VAD-mapped emotion, with an
// LLM re-annotation round when the two disagree.

#include <optional>
#include <string_view>

#include "affect/emotion.hpp"

namespace affect {

enum class Provenance {
  kAgreed,    // llm == vad, kept without a call
  kRefined,   // re-annotated by the LLM
  kFallback,  // re-annotation unparseable; vad label used
  kBypassed,  // neutral/neutral kept under the neutral-bypass option
};

std::string_view to_string(Provenance p);
std::optional<Provenance> parse_provenance(std::string_view s);

struct RefinedEmotion {
  SubSentence sub;
  EmotionLabel label = EmotionLabel::kNeutral;
  EmotionLabel vad_label = EmotionLabel::kNeutral;
  EmotionLabel llm_label = EmotionLabel::kNeutral;
  Provenance provenance = Provenance::kAgreed;
};

// agreed => label == llm == vad; fallback => label == vad;
// bypassed => llm == label == neutral and polarity neutral.
bool provenance_consistent(const RefinedEmotion& r);

// True iff the labels are equal. vad_label must be one of the six centroid
// labels, so an LLM neutral never passes.
bool check_consistency(EmotionLabel llm_label, EmotionLabel vad_label);

// Precondition: labels disagree (InvalidArgument otherwise).
PromptRequest build_refine_prompt(const SubSentence& sub, EmotionLabel llm_label, EmotionLabel vad_label,
                                  std::string_view model_id = kDefaultModelId,
                                  const std::optional<RetryNote>& retry = std::nullopt);

struct RefineOptions {
  std::string model_id = kDefaultModelId;
  // Keep an LLM neutral without refinement when the polarity is also neutral.
  bool neutral_bypass = false;
};

struct RefineOutcome {
  RefinedEmotion result;
  int conversations = 0;  // 1 for a disagreeing pair, 0 otherwise
  int llm_calls = 0;      // attempts inside that conversation
};

RefineOutcome refine(const SubSentence& sub, EmotionLabel llm_label, EmotionLabel vad_label, LlmClient& client,
                     const RefineOptions& options = {});

}  // namespace affect
