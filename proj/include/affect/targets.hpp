#pragma once

// Generation targets for the two training tasks: "CATEGORY:label; ..." pair
// strings, their parser, and instruction-prefixed input/target instances.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "affect/corpus.hpp"
#include "affect/refine.hpp"

namespace affect {

enum class PairKind { kSentiment, kEmotion };

std::string_view to_string(PairKind k);
std::optional<PairKind> parse_pair_kind(std::string_view s);

struct CategoryLabel {
  std::string category;
  std::string label;

  friend bool operator==(const CategoryLabel&, const CategoryLabel&) = default;
  friend auto operator<=>(const CategoryLabel&, const CategoryLabel&) = default;
};

struct PairList {
  PairKind kind = PairKind::kSentiment;
  std::vector<CategoryLabel> pairs;

  friend bool operator==(const PairList&, const PairList&) = default;
};

bool valid_label(PairKind kind, std::string_view label);

inline constexpr std::string_view kPairSeparator = "; ";
inline constexpr std::string_view kSentimentInstruction =
    "Identify the aspect categories and their sentiment polarities: ";
inline constexpr std::string_view kEmotionInstruction = "Identify the aspect categories and their emotions: ";

std::string_view instruction_for(PairKind kind);

// Throws InvalidArgument on an empty list, an invalid label for the kind, or a
// category that is empty or contains ';'.
std::string serialize_pairs(const PairList& list);

struct ParsedPairs {
  PairList list;
  int malformed = 0;

  friend bool operator==(const ParsedPairs&, const ParsedPairs&) = default;
};

// Total: splits on ';', splits each segment on its last ':', uppercases the
// category and lowercases the label. Unparseable segments and invalid labels
// are counted in `malformed`; blank segments are ignored; repeated pairs keep
// the first occurrence.
ParsedPairs parse_pairs(std::string_view text, PairKind kind);

PairList sentiment_pairs(const GoldExample& example);

struct TargetInstance {
  std::string parent_id;
  PairKind kind = PairKind::kSentiment;
  std::string input_text;
  std::string target_text;

  friend bool operator==(const TargetInstance&, const TargetInstance&) = default;
};

struct TaskMode {
  bool no_emotion = false;  // sentiment task only
  bool no_revise = false;   // emotion targets from the VAD-mapped labels
};

// Sentiment instance first, then (unless no_emotion) the emotion instance.
// `refined` must align 1:1 with example.opinions (InvalidArgument otherwise).
std::vector<TargetInstance> build_task_instances(const GoldExample& example,
                                                 std::span<const RefinedEmotion> refined, TaskMode mode);

}  // namespace affect
