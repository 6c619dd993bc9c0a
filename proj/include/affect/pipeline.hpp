#pragma once

// Stage orchestration: each stage reads the previous stage's JSONL under
// <work_dir>/<dataset>/ and writes its own, recording content hashes and
// counts in manifest.json. A stage whose inputs, options and outputs are
// unchanged since its last run is skipped.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "affect/corpus.hpp"
#include "affect/eval.hpp"
#include "affect/llm_client.hpp"
#include "affect/targets.hpp"
#include "affect/vadspace.hpp"

namespace affect {

enum class TransportKind { kHttp, kScript };
enum class ScorerKind { kLexicon, kRemote };

struct PipelineConfig {
  std::filesystem::path work_dir = "work";
  std::string model_id = kDefaultModelId;
  std::string api_base_url = "https://api.openai.com/v1";
  std::optional<std::string> api_key;
  std::filesystem::path cache_dir = "cache";
  TransportKind transport = TransportKind::kHttp;
  std::filesystem::path script_path;
  ScorerKind scorer = ScorerKind::kLexicon;
  std::filesystem::path lexicon_path;
  std::string scorer_endpoint;
  double alpha = 0.6;
  bool no_revise = false;
  bool no_emotion = false;
  bool neutral_bypass = false;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::uint64_t split_seed = 42;
  double validation_fraction = 0.1;
  int max_attempts = 5;
  std::size_t concurrency = 4;
  std::map<Dataset, std::map<Split, std::filesystem::path>> data;

  std::vector<Dataset> configured_datasets() const;
};

// `key = value` lines; '#' starts a comment. Relative paths resolve against
// `base_dir`. Data files use keys like `data.rest16.train`. Throws ConfigError.
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);
// Loads the file, then applies AFFECT_FORGE_API_KEY from the environment.
PipelineConfig load_config(const std::filesystem::path& path);
// Checks cross-field invariants (alpha range, exactly one scorer, ...).
void validate_config(const PipelineConfig& config);

struct StagePaths {
  std::filesystem::path dir;
  std::filesystem::path corpus;
  std::filesystem::path subsentences;
  std::filesystem::path emotions;
  std::filesystem::path vad;
  std::filesystem::path refined;
  std::filesystem::path targets_dir;  // depends on the ablation mode
  std::filesystem::path manifest;

  std::filesystem::path targets(Split split) const;
};

StagePaths stage_paths(const PipelineConfig& config, Dataset dataset);

struct StageResult {
  std::string stage;
  bool up_to_date = false;  // skipped: nothing changed since the last run
  std::map<std::string, long> counts;
};

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body);

std::shared_ptr<LlmClient> make_client(const PipelineConfig& config);
std::shared_ptr<VadScorer> make_scorer(const PipelineConfig& config);

class Pipeline {
public:
  // Client and scorer are built from the config on first use unless given.
  explicit Pipeline(PipelineConfig config, std::shared_ptr<LlmClient> client = nullptr,
                    std::shared_ptr<VadScorer> scorer = nullptr, std::ostream* log = nullptr);

  StageResult ingest(Dataset dataset);
  StageResult decompose(Dataset dataset);
  StageResult emogen(Dataset dataset);
  StageResult vadmap(Dataset dataset);
  StageResult refine(Dataset dataset);
  StageResult emit_targets(Dataset dataset);

  // Scores each prediction file (one run each) against the gold sentiment
  // pairs of `split` and averages the runs.
  RunAggregate evaluate(Dataset dataset, const std::vector<std::filesystem::path>& prediction_files,
                        Split split = Split::kTest) const;

  // Counts recorded in the manifest, rendered as text. `consistent` is set to
  // whether agreements + refinements + fallbacks + bypassed equals the number
  // of refined sub-sentences.
  std::string stats(Dataset dataset, bool& consistent) const;

  const PipelineConfig& config() const { return config_; }

private:
  LlmClient& client();
  VadScorer& scorer();
  std::ostream& log() const;

  PipelineConfig config_;
  std::shared_ptr<LlmClient> client_;
  std::shared_ptr<VadScorer> scorer_;
  std::ostream* log_;
};

}  // namespace affect
