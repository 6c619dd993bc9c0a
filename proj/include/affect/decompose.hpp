#pragma once

// Splits multi-opinion sentences into one sub-sentence per (category, polarity)
// pair so later prompts see a single aspect context.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "affect/corpus.hpp"
#include "affect/llm_client.hpp"

namespace affect {

inline constexpr int kParseAttempts = 3;

struct SubSentence {
  std::string parent_id;
  int index = 0;
  std::string text;
  std::string category;
  SentimentPolarity polarity = SentimentPolarity::kNeutral;
  bool degraded = false;  // decomposition failed; text is the full sentence

  friend bool operator==(const SubSentence&, const SubSentence&) = default;
};

// Feedback appended to a prompt when the previous answer could not be parsed.
struct RetryNote {
  std::string previous_answer;
  std::string problem;
};

std::string render_retry_note(const RetryNote& note);

// Precondition: example has at least two opinions (InvalidArgument otherwise).
PromptRequest build_decompose_prompt(const GoldExample& example,
                                     std::string_view model_id = kDefaultModelId,
                                     const std::optional<RetryNote>& retry = std::nullopt);

// Expects one `i. <category> | <sub-sentence>` line per expected opinion, in
// order. Throws ParseError on count mismatch, category mismatch, or empty text.
std::vector<SubSentence> parse_decompose_response(std::string_view response, std::string_view parent_id,
                                                  const std::vector<AspectOpinion>& expected);

struct DecomposeOutcome {
  std::vector<SubSentence> subs;
  bool degraded = false;
  int llm_calls = 0;
};

// Single-opinion sentences skip the LLM. Otherwise up to kParseAttempts
// prompt/parse rounds, then falls back to the full sentence for every pair.
DecomposeOutcome decompose(const GoldExample& example, LlmClient& client,
                           std::string_view model_id = kDefaultModelId);

}  // namespace affect
