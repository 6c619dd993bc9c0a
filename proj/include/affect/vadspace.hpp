#pragma once

// Valence-arousal-dominance scoring, normalisation to [-1, 1], and
// nearest-centroid mapping onto the six basic emotions.

#include <array>
#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>

#include "affect/emotion.hpp"

namespace affect {

// Five-point scale ratings, each in [1, 5].
struct RawVad {
  double valence = 3.0;
  double arousal = 3.0;
  double dominance = 3.0;

  friend bool operator==(const RawVad&, const RawVad&) = default;
};

// Normalised coordinates, each in [-1, 1].
struct Vad {
  double v = 0.0;
  double a = 0.0;
  double d = 0.0;

  friend bool operator==(const Vad&, const Vad&) = default;
};

struct EmotionCentroid {
  EmotionLabel label;
  Vad center;
};

// Table order doubles as the tie-break order.
inline constexpr std::array<EmotionCentroid, 6> kEmotionCentroids = {{
    {EmotionLabel::kAnger, {-0.43, 0.67, 0.34}},
    {EmotionLabel::kDisgust, {-0.60, 0.35, 0.11}},
    {EmotionLabel::kFear, {-0.64, 0.60, -0.43}},
    {EmotionLabel::kJoy, {0.76, 0.48, 0.35}},
    {EmotionLabel::kSurprise, {0.40, 0.67, -0.13}},
    {EmotionLabel::kSadness, {-0.63, 0.27, -0.33}},
}};

// (x - 3) / 2 per component. Throws InvalidArgument outside [1, 5].
Vad normalize(const RawVad& raw);

double squared_distance(const Vad& p, const Vad& q);

// Label of the centroid at minimum squared Euclidean distance; exact ties go
// to the earlier table row. Never returns neutral.
EmotionLabel nearest_emotion(const Vad& p);

class VadScorer {
public:
  virtual ~VadScorer() = default;
  virtual RawVad score(std::string_view text) const = 0;
};

// word -> (v, a, d) with values in [0, 1].
class VadLexicon {
public:
  struct Entry {
    double v, a, d;
  };

  // Tab-separated `word<TAB>v<TAB>a<TAB>d` lines. A header line whose numeric
  // columns do not parse is skipped only when it is the first line.
  static VadLexicon parse(std::istream& in);
  static VadLexicon load(const std::filesystem::path& path);

  void add(std::string word, Entry entry);
  const Entry* find(std::string_view word) const;
  std::size_t size() const { return entries_.size(); }

private:
  std::unordered_map<std::string, Entry> entries_;
};

// Averages lexicon hits per dimension and rescales [0,1] -> [1,5] via x*4+1.
// No hits gives the midpoint (3, 3, 3).
RawVad lexicon_score(std::string_view text, const VadLexicon& lexicon);

class LexiconScorer : public VadScorer {
public:
  explicit LexiconScorer(VadLexicon lexicon) : lexicon_(std::move(lexicon)) {}
  RawVad score(std::string_view text) const override { return lexicon_score(text, lexicon_); }

private:
  VadLexicon lexicon_;
};

// Body for the remote scorer: {"text": ...}.
std::string build_remote_score_body(std::string_view text);
// Parses {"valence", "arousal", "dominance"} and checks each lies in [1, 5].
// Throws ParseError otherwise.
RawVad parse_remote_score_response(std::string_view body);

// Client of an external VAD regressor service.
class RemoteScorer : public VadScorer {
public:
  explicit RemoteScorer(std::string endpoint_url,
                        std::chrono::seconds timeout = std::chrono::seconds(30));
  RawVad score(std::string_view text) const override;

private:
  std::string scheme_host_port_;
  std::string path_;
  std::chrono::seconds timeout_;
};

RawVad remote_score(std::string_view text, const std::string& endpoint_url);

}  // namespace affect
