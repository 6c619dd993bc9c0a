#include "affect/targets.hpp"

#include <algorithm>

#include "affect/text.hpp"

namespace affect {

std::string_view to_string(PairKind k) { return k == PairKind::kSentiment ? "sentiment" : "emotion"; }

std::optional<PairKind> parse_pair_kind(std::string_view s) {
  if (s == "sentiment") return PairKind::kSentiment;
  if (s == "emotion") return PairKind::kEmotion;
  return std::nullopt;
}

bool valid_label(PairKind kind, std::string_view label) {
  if (kind == PairKind::kSentiment) return parse_polarity(label).has_value();
  return std::any_of(kAllEmotions.begin(), kAllEmotions.end(),
                     [label](EmotionLabel e) { return to_string(e) == label; });
}

std::string_view instruction_for(PairKind kind) {
  return kind == PairKind::kSentiment ? kSentimentInstruction : kEmotionInstruction;
}

std::string serialize_pairs(const PairList& list) {
  if (list.pairs.empty()) throw InvalidArgument("cannot serialise an empty pair list");
  std::string out;
  for (std::size_t i = 0; i < list.pairs.size(); ++i) {
    const auto& [category, label] = list.pairs[i];
    if (category.empty() || category.find(';') != std::string::npos) {
      throw InvalidArgument("category '" + category + "' cannot be serialised");
    }
    if (!valid_label(list.kind, label)) {
      throw InvalidArgument("'" + label + "' is not a " + std::string(to_string(list.kind)) + " label");
    }
    if (i) out += kPairSeparator;
    out += category;
    out += ':';
    out += label;
  }
  return out;
}

ParsedPairs parse_pairs(std::string_view text, PairKind kind) {
  ParsedPairs out;
  out.list.kind = kind;
  for (const auto& raw : text::split(text, ';')) {
    const std::string segment = text::trim(raw);
    if (segment.empty()) continue;
    const auto colon = segment.rfind(':');
    if (colon == std::string::npos) {
      ++out.malformed;
      continue;
    }
    CategoryLabel pair{text::to_upper(text::trim(segment.substr(0, colon))),
                       text::to_lower(text::trim(segment.substr(colon + 1)))};
    if (pair.category.empty() || !valid_label(kind, pair.label)) {
      ++out.malformed;
      continue;
    }
    if (std::find(out.list.pairs.begin(), out.list.pairs.end(), pair) == out.list.pairs.end()) {
      out.list.pairs.push_back(std::move(pair));
    }
  }
  return out;
}

PairList sentiment_pairs(const GoldExample& example) {
  PairList list{PairKind::kSentiment, {}};
  for (const auto& op : example.opinions) {
    list.pairs.push_back({op.category, std::string(to_string(op.polarity))});
  }
  return list;
}

std::vector<TargetInstance> build_task_instances(const GoldExample& example,
                                                 std::span<const RefinedEmotion> refined, TaskMode mode) {
  std::vector<TargetInstance> out;
  out.push_back(TargetInstance{example.id, PairKind::kSentiment,
                               std::string(kSentimentInstruction) + example.text,
                               serialize_pairs(sentiment_pairs(example))});
  if (mode.no_emotion) return out;

  if (refined.size() != example.opinions.size()) {
    throw InvalidArgument("sentence " + example.id + ": " + std::to_string(refined.size()) +
                          " emotion annotations for " + std::to_string(example.opinions.size()) + " opinions");
  }
  PairList emotions{PairKind::kEmotion, {}};
  for (std::size_t i = 0; i < refined.size(); ++i) {
    const auto& r = refined[i];
    const auto& op = example.opinions[i];
    if (r.sub.category != op.category || r.sub.polarity != op.polarity) {
      throw InvalidArgument("sentence " + example.id + ": annotation " + std::to_string(i) +
                            " is bound to " + r.sub.category + " but the opinion is " + op.category);
    }
    const EmotionLabel label = mode.no_revise ? r.vad_label : r.label;
    emotions.pairs.push_back({op.category, std::string(to_string(label))});
  }
  out.push_back(TargetInstance{example.id, PairKind::kEmotion, std::string(kEmotionInstruction) + example.text,
                               serialize_pairs(emotions)});
  return out;
}

}  // namespace affect
