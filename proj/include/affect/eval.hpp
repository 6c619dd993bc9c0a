#pragma once

// Micro precision/recall/F1 over exact (category, label) pair matches, and
// averaging across seeded runs.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "affect/corpus.hpp"
#include "affect/targets.hpp"

namespace affect {

struct EvalReport {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long malformed = 0;
  Dataset dataset = Dataset::kRest16;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// P = tp/(tp+fp), R = tp/(tp+fn), F1 = 2PR/(P+R); each 0 when its denominator is 0.
EvalReport make_report(long tp, long fp, long fn, long malformed, Dataset dataset);

struct SentencePrediction {
  std::string id;
  ParsedPairs predicted;
};

struct SentenceGold {
  std::string id;
  PairList gold;
};

// Pairs compared as sets per sentence, counts pooled over the corpus. Every
// malformed segment adds one false positive. Throws InvalidArgument when the
// two lists differ in length or in the id at any position.
EvalReport score(std::span<const SentencePrediction> predictions, std::span<const SentenceGold> gold,
                 Dataset dataset);

struct RunAggregate {
  Dataset dataset = Dataset::kRest16;
  std::vector<EvalReport> runs;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_f1 = 0.0;  // mean of per-run F1, not the harmonic mean of the means

  friend bool operator==(const RunAggregate&, const RunAggregate&) = default;
};

// Throws InvalidArgument on an empty list or mixed datasets.
RunAggregate aggregate_runs(std::span<const EvalReport> reports);

enum class ReportFormat { kPlain, kTsv, kJson };

std::optional<ReportFormat> parse_report_format(std::string_view s);

// Throws InvalidArgument when `aggregates` is empty.
std::string render_report(std::span<const RunAggregate> aggregates, ReportFormat format);

// Inverse of render_report(..., kJson). Throws SchemaError.
std::vector<RunAggregate> aggregates_from_json(std::string_view json_text);

}  // namespace affect
