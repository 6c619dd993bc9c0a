#include "affect/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "affect/decompose.hpp"
#include "affect/emotion.hpp"
#include "affect/hash.hpp"
#include "affect/io.hpp"
#include "affect/records.hpp"
#include "affect/refine.hpp"
#include "affect/text.hpp"

namespace affect {

using json = nlohmann::json;
namespace fs = std::filesystem;

// --- config -----------------------------------------------------------------

std::vector<Dataset> PipelineConfig::configured_datasets() const {
  std::vector<Dataset> out;
  for (const auto& [ds, files] : data) out.push_back(ds);
  return out;
}

namespace {

bool parse_bool(const std::string& key, const std::string& value) {
  const std::string v = text::to_lower(value);
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + value + "'");
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty()) throw ConfigError(key + ": expected a number, got '" + value + "'");
  return x;
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
  }
  try {
    return std::stoull(value);
  } catch (const std::exception&) {
    throw ConfigError(key + ": integer out of range");
  }
}

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  return p.is_absolute() ? p : base / p;
}

}  // namespace

PipelineConfig parse_config(std::string_view text_in, const fs::path& base_dir) {
  PipelineConfig cfg;
  cfg.work_dir = base_dir / "work";
  cfg.cache_dir = base_dir / "cache";
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (const auto& raw_line : text::split(text_in, '\n')) {
    ++line_no;
    std::string line = raw_line;
    if (auto hash = line.find('#'); hash != std::string::npos && (hash == 0 || std::isspace(static_cast<unsigned char>(line[hash - 1])))) {
      line = line.substr(0, hash);
    }
    line = text::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = text::trim(line.substr(0, eq));
    const std::string value = text::trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(where + ": duplicate key '" + key + "'");

    if (key == "work_dir") {
      cfg.work_dir = resolve(base_dir, value);
    } else if (key == "model_id") {
      cfg.model_id = value;
    } else if (key == "api_base_url") {
      cfg.api_base_url = value;
    } else if (key == "api_key") {
      cfg.api_key = value;
    } else if (key == "cache_dir") {
      cfg.cache_dir = resolve(base_dir, value);
    } else if (key == "transport") {
      if (value == "http") cfg.transport = TransportKind::kHttp;
      else if (value == "script") cfg.transport = TransportKind::kScript;
      else throw ConfigError(where + ": transport must be http or script");
    } else if (key == "script_path") {
      cfg.script_path = resolve(base_dir, value);
    } else if (key == "scorer") {
      if (value == "lexicon") cfg.scorer = ScorerKind::kLexicon;
      else if (value == "remote") cfg.scorer = ScorerKind::kRemote;
      else throw ConfigError(where + ": scorer must be lexicon or remote");
    } else if (key == "lexicon_path") {
      cfg.lexicon_path = resolve(base_dir, value);
    } else if (key == "scorer_endpoint") {
      cfg.scorer_endpoint = value;
    } else if (key == "alpha") {
      cfg.alpha = parse_double(key, value);
    } else if (key == "no_revise") {
      cfg.no_revise = parse_bool(key, value);
    } else if (key == "no_emotion") {
      cfg.no_emotion = parse_bool(key, value);
    } else if (key == "neutral_bypass") {
      cfg.neutral_bypass = parse_bool(key, value);
    } else if (key == "seeds") {
      cfg.seeds.clear();
      for (const auto& s : text::split(value, ',')) cfg.seeds.push_back(parse_uint(key, text::trim(s)));
    } else if (key == "split_seed") {
      cfg.split_seed = parse_uint(key, value);
    } else if (key == "validation_fraction") {
      cfg.validation_fraction = parse_double(key, value);
    } else if (key == "max_attempts") {
      cfg.max_attempts = static_cast<int>(parse_uint(key, value));
    } else if (key == "concurrency") {
      cfg.concurrency = static_cast<std::size_t>(parse_uint(key, value));
    } else if (text::starts_with(key, "data.")) {
      const auto parts = text::split(key, '.');
      if (parts.size() != 3) throw ConfigError(where + ": data keys look like data.<dataset>.<train|test>");
      auto ds = parse_dataset(parts[1]);
      if (!ds) throw ConfigError(where + ": unknown dataset '" + parts[1] + "'");
      auto sp = parse_split(parts[2]);
      if (!sp || *sp == Split::kValidation) {
        throw ConfigError(where + ": data split must be train or test (validation is carved from train)");
      }
      cfg.data[*ds][*sp] = resolve(base_dir, value);
    } else {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

void validate_config(const PipelineConfig& cfg) {
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (!(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0)) {
    throw ConfigError("validation_fraction must lie strictly between 0 and 1");
  }
  if (cfg.max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
  if (cfg.concurrency < 1) throw ConfigError("concurrency must be at least 1");
  if (cfg.seeds.empty()) throw ConfigError("seeds must list at least one seed");
  if (cfg.scorer == ScorerKind::kLexicon) {
    if (cfg.lexicon_path.empty()) throw ConfigError("scorer = lexicon needs lexicon_path");
    if (!cfg.scorer_endpoint.empty()) throw ConfigError("scorer = lexicon conflicts with scorer_endpoint");
  } else {
    if (cfg.scorer_endpoint.empty()) throw ConfigError("scorer = remote needs scorer_endpoint");
    if (!cfg.lexicon_path.empty()) throw ConfigError("scorer = remote conflicts with lexicon_path");
  }
  if (cfg.transport == TransportKind::kScript && cfg.script_path.empty()) {
    throw ConfigError("transport = script needs script_path");
  }
}

PipelineConfig load_config(const fs::path& path) {
  PipelineConfig cfg = parse_config(read_file(path), fs::absolute(path).parent_path());
  if (const char* key = std::getenv(kApiKeyEnvVar); key && *key) cfg.api_key = key;
  validate_config(cfg);
  return cfg;
}

StagePaths stage_paths(const PipelineConfig& config, Dataset dataset) {
  StagePaths p;
  p.dir = config.work_dir / std::string(to_string(dataset));
  p.corpus = p.dir / "corpus.jsonl";
  p.subsentences = p.dir / "subsentences.jsonl";
  p.emotions = p.dir / "emotions.jsonl";
  p.vad = p.dir / "vad.jsonl";
  p.refined = p.dir / "refined.jsonl";
  std::string targets = "targets";
  if (config.no_emotion) targets += "-no-emotion";
  else if (config.no_revise) targets += "-no-revise";
  p.targets_dir = p.dir / targets;
  p.manifest = p.dir / "manifest.json";
  return p;
}

fs::path StagePaths::targets(Split split) const { return targets_dir / (std::string(to_string(split)) + ".jsonl"); }

// --- helpers ----------------------------------------------------------------

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  workers = std::max<std::size_t>(1, std::min(workers, n));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::jthread> threads;
  for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(worker);
  worker();
  threads.clear();
  if (error) std::rethrow_exception(error);
}

std::shared_ptr<LlmClient> make_client(const PipelineConfig& config) {
  std::shared_ptr<Transport> transport;
  if (config.transport == TransportKind::kScript) {
    auto scripted = std::make_shared<ScriptedTransport>();
    scripted->load_rules(config.script_path);
    transport = scripted;
  } else {
    transport = std::make_shared<HttpTransport>(config.api_base_url);
  }
  LlmClient::Options options;
  options.api_key = config.api_key;
  options.retry.max_attempts = config.max_attempts;
  options.max_in_flight = config.concurrency;
  return std::make_shared<LlmClient>(std::move(transport), std::move(options),
                                     std::make_shared<ResponseCache>(config.cache_dir));
}

std::shared_ptr<VadScorer> make_scorer(const PipelineConfig& config) {
  if (config.scorer == ScorerKind::kRemote) return std::make_shared<RemoteScorer>(config.scorer_endpoint);
  return std::make_shared<LexiconScorer>(VadLexicon::load(config.lexicon_path));
}

namespace {

// Per-dataset record of what each stage consumed and produced.
class Manifest {
public:
  explicit Manifest(fs::path path) : path_(std::move(path)) {
    std::error_code ec;
    if (fs::exists(path_, ec)) {
      doc_ = json::parse(read_file(path_), nullptr, false);
      if (doc_.is_discarded() || !doc_.is_object()) {
        std::cerr << "warning: ignoring unreadable manifest " << path_.string() << '\n';
        doc_ = json::object();
      }
    }
    if (!doc_.contains("stages")) doc_["stages"] = json::object();
  }

  using Files = std::map<std::string, fs::path>;

  static json hashes(const Files& files) {
    json out = json::object();
    for (const auto& [label, path] : files) out[label] = sha256_file(path);
    return out;
  }

  bool up_to_date(const std::string& stage, const std::string& options, const Files& inputs,
                  const Files& outputs) const {
    const auto& stages = doc_["stages"];
    auto it = stages.find(stage);
    if (it == stages.end()) return false;
    if (it->value("options", "") != options) return false;
    if ((*it)["inputs"] != hashes(inputs)) return false;
    std::error_code ec;
    for (const auto& [label, path] : outputs) {
      if (!fs::exists(path, ec)) return false;
    }
    return (*it)["outputs"] == hashes(outputs);
  }

  std::map<std::string, long> counts(const std::string& stage) const {
    std::map<std::string, long> out;
    const auto& stages = doc_["stages"];
    auto it = stages.find(stage);
    if (it == stages.end() || !it->contains("counts")) return out;
    for (const auto& [k, v] : (*it)["counts"].items()) out[k] = v.get<long>();
    return out;
  }

  bool has(const std::string& stage) const { return doc_["stages"].contains(stage); }

  void record(const std::string& stage, const std::string& options, const Files& inputs, const Files& outputs,
              const std::map<std::string, long>& counts) {
    json entry;
    entry["options"] = options;
    entry["inputs"] = hashes(inputs);
    entry["outputs"] = hashes(outputs);
    entry["counts"] = counts;
    doc_["stages"][stage] = std::move(entry);
    write_file_atomic(path_, doc_.dump(2) + "\n");
  }

private:
  fs::path path_;
  json doc_ = json::object();
};

void require_input(const fs::path& path, const char* stage) {
  std::error_code ec;
  if (!fs::exists(path, ec)) {
    throw IoError("missing " + path.string() + "; run `" + stage + "` first");
  }
}

template <typename Record>
std::string join_lines(const std::vector<Record>& records) {
  std::string out;
  for (const auto& r : records) {
    out += to_jsonl_line(r);
    out += '\n';
  }
  return out;
}

bool annotated_split(Split s) { return s == Split::kTrain || s == Split::kValidation; }

using SubKey = std::pair<std::string, int>;

}  // namespace

// --- Pipeline ---------------------------------------------------------------

Pipeline::Pipeline(PipelineConfig config, std::shared_ptr<LlmClient> client, std::shared_ptr<VadScorer> scorer,
                   std::ostream* log)
    : config_(std::move(config)), client_(std::move(client)), scorer_(std::move(scorer)), log_(log) {}

LlmClient& Pipeline::client() {
  if (!client_) client_ = make_client(config_);
  return *client_;
}

VadScorer& Pipeline::scorer() {
  if (!scorer_) scorer_ = make_scorer(config_);
  return *scorer_;
}

std::ostream& Pipeline::log() const { return log_ ? *log_ : std::cerr; }

StageResult Pipeline::ingest(Dataset dataset) {
  const auto paths = stage_paths(config_, dataset);
  auto files = config_.data.find(dataset);
  if (files == config_.data.end() || !files->second.count(Split::kTrain)) {
    throw ConfigError("no data." + std::string(to_string(dataset)) + ".train configured");
  }
  Manifest::Files inputs{{"train_xml", files->second.at(Split::kTrain)}};
  if (files->second.count(Split::kTest)) inputs["test_xml"] = files->second.at(Split::kTest);

  std::ostringstream opts;
  opts << "split_seed=" << config_.split_seed << ";validation_fraction=" << config_.validation_fraction;
  Manifest manifest(paths.manifest);
  StageResult result{"ingest", false, {}};
  if (manifest.up_to_date("ingest", opts.str(), inputs, {{"corpus", paths.corpus}})) {
    result.up_to_date = true;
    result.counts = manifest.counts("ingest");
    return result;
  }

  auto train = parse_semeval_xml(read_file(inputs.at("train_xml")), dataset, Split::kTrain);
  ParsedCorpus test;
  if (inputs.count("test_xml")) test = parse_semeval_xml(read_file(inputs.at("test_xml")), dataset, Split::kTest);

  auto partition = split_validation(std::move(train.examples), config_.validation_fraction, config_.split_seed);
  std::vector<GoldExample> all;
  for (auto* part : {&partition.train, &partition.validation, &test.examples}) {
    std::move(part->begin(), part->end(), std::back_inserter(all));
  }
  write_jsonl(all, paths.corpus);

  long opinions = 0;
  for (const auto& ex : all) opinions += static_cast<long>(ex.opinions.size());
  result.counts = {{"examples", static_cast<long>(all.size())},
                   {"train", static_cast<long>(partition.train.size())},
                   {"validation", static_cast<long>(partition.validation.size())},
                   {"test", static_cast<long>(test.examples.size())},
                   {"opinions", opinions},
                   {"skipped_sentences",
                    static_cast<long>(train.stats.skipped_without_opinions + test.stats.skipped_without_opinions)},
                   {"duplicate_opinions",
                    static_cast<long>(train.stats.duplicate_opinions + test.stats.duplicate_opinions)}};
  manifest.record("ingest", opts.str(), inputs, {{"corpus", paths.corpus}}, result.counts);
  return result;
}

StageResult Pipeline::decompose(Dataset dataset) {
  const auto paths = stage_paths(config_, dataset);
  require_input(paths.corpus, "ingest");
  const Manifest::Files inputs{{"corpus", paths.corpus}};
  const Manifest::Files outputs{{"subsentences", paths.subsentences}};
  const std::string opts = "model_id=" + config_.model_id;
  Manifest manifest(paths.manifest);
  StageResult result{"decompose", false, {}};
  if (manifest.up_to_date("decompose", opts, inputs, outputs)) {
    result.up_to_date = true;
    result.counts = manifest.counts("decompose");
    return result;
  }

  std::vector<GoldExample> examples;
  for (auto& ex : read_jsonl(paths.corpus)) {
    if (annotated_split(ex.split)) examples.push_back(std::move(ex));
  }
  std::vector<DecomposeOutcome> outcomes(examples.size());
  LlmClient& llm = client();
  parallel_for(examples.size(), config_.concurrency,
               [&](std::size_t i) { outcomes[i] = affect::decompose(examples[i], llm, config_.model_id); });

  std::vector<SubSentence> subs;
  long degraded = 0, calls = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].degraded) {
      ++degraded;
      log() << "warning: decomposition of " << examples[i].id << " fell back to the full sentence\n";
    }
    calls += outcomes[i].llm_calls;
    std::move(outcomes[i].subs.begin(), outcomes[i].subs.end(), std::back_inserter(subs));
  }
  std::sort(subs.begin(), subs.end(), [](const SubSentence& a, const SubSentence& b) {
    return std::tie(a.parent_id, a.index) < std::tie(b.parent_id, b.index);
  });
  write_file_atomic(paths.subsentences, join_lines(subs));
  log() << "decompose: " << calls << " LLM requests\n";

  result.counts = {{"examples", static_cast<long>(examples.size())},
                   {"sub_sentences", static_cast<long>(subs.size())},
                   {"degraded_decompositions", degraded}};
  manifest.record("decompose", opts, inputs, outputs, result.counts);
  return result;
}

StageResult Pipeline::emogen(Dataset dataset) {
  const auto paths = stage_paths(config_, dataset);
  require_input(paths.subsentences, "decompose");
  const Manifest::Files inputs{{"subsentences", paths.subsentences}};
  const Manifest::Files outputs{{"emotions", paths.emotions}};
  const std::string opts = "model_id=" + config_.model_id;
  Manifest manifest(paths.manifest);
  StageResult result{"emogen", false, {}};
  if (manifest.up_to_date("emogen", opts, inputs, outputs)) {
    result.up_to_date = true;
    result.counts = manifest.counts("emogen");
    return result;
  }

  const auto subs = read_subsentences(paths.subsentences);
  std::vector<std::optional<EmotionRecord>> records(subs.size());
  std::vector<std::string> failures(subs.size());
  LlmClient& llm = client();
  parallel_for(subs.size(), config_.concurrency, [&](std::size_t i) {
    try {
      const auto out = generate_emotion(subs[i], llm, config_.model_id);
      records[i] = EmotionRecord{subs[i].parent_id, subs[i].index, subs[i].category, subs[i].polarity,
                                 out.emotion.label};
    } catch (const AnnotationError& e) {
      failures[i] = e.what();
    }
  });

  std::vector<EmotionRecord> kept;
  long failed = 0;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (records[i]) {
      kept.push_back(*records[i]);
    } else {
      ++failed;
      log() << "warning: skipped " << failures[i] << '\n';
    }
  }
  write_file_atomic(paths.emotions, join_lines(kept));
  result.counts = {{"sub_sentences", static_cast<long>(subs.size())},
                   {"emotions", static_cast<long>(kept.size())},
                   {"annotation_failures", failed}};
  manifest.record("emogen", opts, inputs, outputs, result.counts);
  return result;
}

StageResult Pipeline::vadmap(Dataset dataset) {
  const auto paths = stage_paths(config_, dataset);
  require_input(paths.subsentences, "decompose");
  Manifest::Files inputs{{"subsentences", paths.subsentences}};
  std::string opts;
  if (config_.scorer == ScorerKind::kLexicon) {
    inputs["lexicon"] = config_.lexicon_path;
    opts = "scorer=lexicon";
  } else {
    opts = "scorer=remote;endpoint=" + config_.scorer_endpoint;
  }
  const Manifest::Files outputs{{"vad", paths.vad}};
  Manifest manifest(paths.manifest);
  StageResult result{"vadmap", false, {}};
  if (manifest.up_to_date("vadmap", opts, inputs, outputs)) {
    result.up_to_date = true;
    result.counts = manifest.counts("vadmap");
    return result;
  }

  const auto subs = read_subsentences(paths.subsentences);
  std::vector<VadRecord> records(subs.size());
  const VadScorer& vad_scorer = scorer();
  parallel_for(subs.size(), config_.concurrency, [&](std::size_t i) {
    const RawVad raw = vad_scorer.score(subs[i].text);
    const Vad vad = normalize(raw);
    records[i] = VadRecord{subs[i].parent_id, subs[i].index, subs[i].category, subs[i].polarity, raw, vad,
                           nearest_emotion(vad)};
  });
  write_file_atomic(paths.vad, join_lines(records));

  result.counts = {{"sub_sentences", static_cast<long>(records.size())}};
  for (const auto& c : kEmotionCentroids) {
    result.counts["vad_" + std::string(to_string(c.label))] = static_cast<long>(std::count_if(
        records.begin(), records.end(), [&c](const VadRecord& r) { return r.emotion_vad == c.label; }));
  }
  manifest.record("vadmap", opts, inputs, outputs, result.counts);
  return result;
}

StageResult Pipeline::refine(Dataset dataset) {
  const auto paths = stage_paths(config_, dataset);
  require_input(paths.subsentences, "decompose");
  require_input(paths.emotions, "emogen");
  require_input(paths.vad, "vadmap");
  const Manifest::Files inputs{{"subsentences", paths.subsentences}, {"emotions", paths.emotions}, {"vad", paths.vad}};
  const Manifest::Files outputs{{"refined", paths.refined}};
  const std::string opts =
      "model_id=" + config_.model_id + ";neutral_bypass=" + (config_.neutral_bypass ? "true" : "false");
  Manifest manifest(paths.manifest);
  StageResult result{"refine", false, {}};
  if (manifest.up_to_date("refine", opts, inputs, outputs)) {
    result.up_to_date = true;
    result.counts = manifest.counts("refine");
    return result;
  }

  std::map<SubKey, SubSentence> subs;
  for (auto& s : read_subsentences(paths.subsentences)) {
    SubKey key{s.parent_id, s.index};
    subs.emplace(std::move(key), std::move(s));
  }
  std::map<SubKey, EmotionLabel> vad_labels;
  for (const auto& r : read_vad_records(paths.vad)) vad_labels[{r.parent_id, r.index}] = r.emotion_vad;

  struct Job {
    const SubSentence* sub;
    EmotionLabel llm;
    EmotionLabel vad;
  };
  std::vector<Job> jobs;
  for (const auto& e : read_emotions(paths.emotions)) {
    const SubKey key{e.parent_id, e.index};
    auto sub = subs.find(key);
    auto vad = vad_labels.find(key);
    if (sub == subs.end() || vad == vad_labels.end()) {
      throw SchemaError("emotion record " + e.parent_id + "#" + std::to_string(e.index) +
                        " has no matching sub-sentence or VAD record");
    }
    jobs.push_back(Job{&sub->second, e.emotion_llm, vad->second});
  }

  RefineOptions options{config_.model_id, config_.neutral_bypass};
  std::vector<RefineOutcome> outcomes(jobs.size());
  LlmClient& llm = client();
  parallel_for(jobs.size(), config_.concurrency, [&](std::size_t i) {
    outcomes[i] = affect::refine(*jobs[i].sub, jobs[i].llm, jobs[i].vad, llm, options);
  });

  std::vector<RefinedEmotion> refined;
  long agreed = 0, refined_count = 0, fallback = 0, bypassed = 0, conversations = 0, calls = 0;
  for (const auto& o : outcomes) {
    refined.push_back(o.result);
    conversations += o.conversations;
    calls += o.llm_calls;
    switch (o.result.provenance) {
      case Provenance::kAgreed: ++agreed; break;
      case Provenance::kRefined: ++refined_count; break;
      case Provenance::kFallback: ++fallback; break;
      case Provenance::kBypassed: ++bypassed; break;
    }
  }
  write_file_atomic(paths.refined, join_lines(refined));
  result.counts = {{"refined_total", static_cast<long>(refined.size())},
                   {"agreements", agreed},
                   {"refinements", refined_count},
                   {"fallbacks", fallback},
                   {"bypassed", bypassed},
                   {"refinement_conversations", conversations},
                   {"refinement_requests", calls}};
  manifest.record("refine", opts, inputs, outputs, result.counts);
  return result;
}

StageResult Pipeline::emit_targets(Dataset dataset) {
  const auto paths = stage_paths(config_, dataset);
  require_input(paths.corpus, "ingest");
  Manifest::Files inputs{{"corpus", paths.corpus}};
  if (!config_.no_emotion) {
    require_input(paths.refined, "refine");
    inputs["refined"] = paths.refined;
  }
  const Manifest::Files outputs{{"train", paths.targets(Split::kTrain)},
                                {"validation", paths.targets(Split::kValidation)},
                                {"test", paths.targets(Split::kTest)}};
  const TaskMode mode{config_.no_emotion, config_.no_revise};
  const std::string stage = "emit-targets:" + paths.targets_dir.filename().string();
  const std::string opts = std::string("no_emotion=") + (mode.no_emotion ? "true" : "false") +
                           ";no_revise=" + (mode.no_revise ? "true" : "false");
  Manifest manifest(paths.manifest);
  StageResult result{"emit-targets", false, {}};
  if (manifest.up_to_date(stage, opts, inputs, outputs)) {
    result.up_to_date = true;
    result.counts = manifest.counts(stage);
    return result;
  }

  std::map<std::string, std::vector<RefinedEmotion>> by_parent;
  if (!mode.no_emotion) {
    for (auto& r : read_refined(paths.refined)) by_parent[r.sub.parent_id].push_back(std::move(r));
    for (auto& [id, list] : by_parent) {
      std::sort(list.begin(), list.end(),
                [](const RefinedEmotion& a, const RefinedEmotion& b) { return a.sub.index < b.sub.index; });
    }
  }

  std::map<Split, std::string> files{{Split::kTrain, {}}, {Split::kValidation, {}}, {Split::kTest, {}}};
  long sentiment = 0, emotion = 0, excluded = 0;
  for (const auto& ex : read_jsonl(paths.corpus)) {
    std::vector<TargetInstance> instances;
    if (!annotated_split(ex.split) || mode.no_emotion) {
      instances = build_task_instances(ex, {}, TaskMode{true, false});
    } else {
      auto it = by_parent.find(ex.id);
      if (it == by_parent.end() || it->second.size() != ex.opinions.size()) {
        ++excluded;
        log() << "warning: " << ex.id << " lacks emotion annotations for some opinions; excluded\n";
        continue;
      }
      instances = build_task_instances(ex, it->second, mode);
    }
    for (const auto& inst : instances) {
      (inst.kind == PairKind::kSentiment ? sentiment : emotion) += 1;
      files[ex.split] += to_jsonl_line(inst);
      files[ex.split] += '\n';
    }
  }
  for (const auto& [split, content] : files) write_file_atomic(paths.targets(split), content);

  result.counts = {{"sentiment_instances", sentiment}, {"emotion_instances", emotion}, {"excluded_examples", excluded}};
  manifest.record(stage, opts, inputs, outputs, result.counts);
  return result;
}

RunAggregate Pipeline::evaluate(Dataset dataset, const std::vector<fs::path>& prediction_files, Split split) const {
  if (prediction_files.empty()) throw InvalidArgument("no prediction files given");
  const auto paths = stage_paths(config_, dataset);
  require_input(paths.corpus, "ingest");

  std::vector<SentenceGold> gold;
  for (const auto& ex : read_jsonl(paths.corpus)) {
    if (ex.split == split) gold.push_back(SentenceGold{ex.id, sentiment_pairs(ex)});
  }

  std::vector<EvalReport> reports;
  for (const auto& file : prediction_files) {
    std::map<std::string, std::string> outputs;
    for (auto& p : read_predictions(file)) {
      if (!outputs.emplace(p.parent_id, std::move(p.output_text)).second) {
        throw SchemaError(file.string() + ": duplicate prediction for " + p.parent_id);
      }
    }
    std::vector<SentencePrediction> predictions;
    for (const auto& g : gold) {
      auto it = outputs.find(g.id);
      if (it == outputs.end()) throw SchemaError(file.string() + ": no prediction for sentence " + g.id);
      predictions.push_back(SentencePrediction{g.id, parse_pairs(it->second, PairKind::kSentiment)});
      outputs.erase(it);
    }
    if (!outputs.empty()) {
      throw SchemaError(file.string() + ": prediction for unknown sentence " + outputs.begin()->first);
    }
    reports.push_back(score(predictions, gold, dataset));
  }
  return aggregate_runs(reports);
}

std::string Pipeline::stats(Dataset dataset, bool& consistent) const {
  const auto paths = stage_paths(config_, dataset);
  require_input(paths.manifest, "ingest");
  Manifest manifest(paths.manifest);
  std::ostringstream out;
  out << "dataset " << to_string(dataset) << '\n';
  consistent = true;
  for (const std::string stage : {"ingest", "decompose", "emogen", "vadmap", "refine"}) {
    if (!manifest.has(stage)) continue;
    out << stage << '\n';
    for (const auto& [k, v] : manifest.counts(stage)) out << "  " << k << ' ' << v << '\n';
  }
  for (const std::string dir : {"targets", "targets-no-revise", "targets-no-emotion"}) {
    const std::string stage = "emit-targets:" + dir;
    if (!manifest.has(stage)) continue;
    out << stage << '\n';
    for (const auto& [k, v] : manifest.counts(stage)) out << "  " << k << ' ' << v << '\n';
  }
  if (manifest.has("refine")) {
    auto c = manifest.counts("refine");
    const long sum = c["agreements"] + c["refinements"] + c["fallbacks"] + c["bypassed"];
    consistent = sum == c["refined_total"];
    if (c["refined_total"] > 0) {
      char rate[32];
      std::snprintf(rate, sizeof rate, "%.4f",
                    static_cast<double>(c["agreements"]) / static_cast<double>(c["refined_total"]));
      out << "agreement_rate " << rate << '\n';
    }
    out << "refine totals " << (consistent ? "consistent" : "INCONSISTENT") << " (" << sum << " of "
        << c["refined_total"] << ")\n";
  }
  return out.str();
}

}  // namespace affect
