#pragma once

// SemEval-2015 Task 12 / SemEval-2016 Task 5 aspect-category corpora.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace affect {

enum class SentimentPolarity { kPositive, kNeutral, kNegative };

std::string_view to_string(SentimentPolarity p);
// Exact, lowercase match against the three labels.
std::optional<SentimentPolarity> parse_polarity(std::string_view s);

enum class Dataset { kRest15, kRest16, kLap15, kLap16 };

std::string_view to_string(Dataset d);
std::optional<Dataset> parse_dataset(std::string_view s);

enum class Split { kTrain, kValidation, kTest };

std::string_view to_string(Split s);
std::optional<Split> parse_split(std::string_view s);

struct AspectOpinion {
  std::string category;  // DOMAIN#ATTRIBUTE, uppercase
  SentimentPolarity polarity = SentimentPolarity::kNeutral;

  friend bool operator==(const AspectOpinion&, const AspectOpinion&) = default;
};

// Uppercases and validates a DOMAIN#ATTRIBUTE category.
// Throws ParseError when the result is empty or does not hold exactly one '#'.
std::string normalize_category(std::string_view raw);

struct GoldExample {
  std::string id;
  std::string text;
  std::vector<AspectOpinion> opinions;
  Dataset dataset = Dataset::kRest16;
  Split split = Split::kTrain;

  friend bool operator==(const GoldExample&, const GoldExample&) = default;
};

struct ParseStats {
  std::size_t sentences = 0;
  std::size_t skipped_without_opinions = 0;
  std::size_t duplicate_opinions = 0;
};

struct ParsedCorpus {
  std::vector<GoldExample> examples;
  ParseStats stats;
};

// Parses one SemEval ABSA review file. Sentences are found at any depth, so
// both the 2015 and 2016 layouts are accepted. Sentences without opinions are
// dropped and counted; duplicate (category, polarity) pairs in one sentence
// are collapsed and counted. Throws ParseError on malformed XML, a missing
// category/polarity attribute, or a polarity outside the three-label set.
ParsedCorpus parse_semeval_xml(std::string_view xml_bytes, Dataset dataset, Split split);

void write_jsonl(const std::vector<GoldExample>& examples, std::ostream& out);
void write_jsonl(const std::vector<GoldExample>& examples, const std::filesystem::path& path);

// Throws SchemaError naming the 1-based line number on any schema violation.
std::vector<GoldExample> read_jsonl(std::istream& in);
std::vector<GoldExample> read_jsonl(const std::filesystem::path& path);

struct ValidationPartition {
  std::vector<GoldExample> train;
  std::vector<GoldExample> validation;
};

// Seeded shuffle over example ids; round(fraction * n) examples move to the
// validation split. Both halves keep the input order. Platform independent:
// uses std::mt19937_64 with a hand-rolled bounded draw.
ValidationPartition split_validation(std::vector<GoldExample> train, double fraction,
                                     std::uint64_t seed);

}  // namespace affect
