#include "affect/cli.hpp"

#include <fstream>
#include <optional>

#include <CLI11.hpp>

#include "affect/io.hpp"
#include "affect/pipeline.hpp"

namespace affect {

namespace {

struct CommonOptions {
  std::string config;
  std::string dataset;
  bool no_revise = false;
  bool no_emotion = false;
  bool neutral_bypass = false;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config, "Pipeline config file")->required();
  cmd->add_option("--dataset", opts.dataset, "rest15 | rest16 | lap15 | lap16 (default: every configured dataset)")
      ->check(CLI::IsMember({"rest15", "rest16", "lap15", "lap16"}));
  cmd->add_flag("--no-revise", opts.no_revise, "Emotion targets from VAD-mapped labels");
  cmd->add_flag("--no-emotion", opts.no_emotion, "Sentiment task only");
  cmd->add_flag("--neutral-bypass", opts.neutral_bypass, "Keep LLM neutral labels on neutral opinions");
  cmd->add_option("--seed", opts.seed, "Seed for the validation split");
}

PipelineConfig resolve_config(const CommonOptions& opts) {
  PipelineConfig cfg = load_config(opts.config);
  cfg.no_revise = cfg.no_revise || opts.no_revise;
  cfg.no_emotion = cfg.no_emotion || opts.no_emotion;
  cfg.neutral_bypass = cfg.neutral_bypass || opts.neutral_bypass;
  if (opts.seed) cfg.split_seed = *opts.seed;
  return cfg;
}

std::vector<Dataset> selected_datasets(const CommonOptions& opts, const PipelineConfig& cfg) {
  if (!opts.dataset.empty()) return {*parse_dataset(opts.dataset)};
  auto all = cfg.configured_datasets();
  if (all.empty()) throw ConfigError("no datasets configured; pass --dataset or add data.<dataset>.train");
  return all;
}

void print_result(std::ostream& out, Dataset ds, const StageResult& r) {
  out << r.stage << ' ' << to_string(ds) << (r.up_to_date ? ": up to date" : ": done");
  for (const auto& [k, v] : r.counts) out << ' ' << k << '=' << v;
  out << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"affect-forge: emotion-annotated aspect-category sentiment corpora"};
  app.name("affect-forge");
  app.require_subcommand(1);

  using StageFn = StageResult (Pipeline::*)(Dataset);
  struct StageCommand {
    const char* name;
    const char* help;
    StageFn fn;
  };
  const std::vector<StageCommand> stages = {
      {"ingest", "Parse SemEval XML into corpus JSONL with a validation split", &Pipeline::ingest},
      {"decompose", "Split multi-opinion sentences into per-category sub-sentences", &Pipeline::decompose},
      {"emogen", "Ask the LLM for one emotion per sub-sentence", &Pipeline::emogen},
      {"vadmap", "Score sub-sentences in VAD space and map to the nearest emotion", &Pipeline::vadmap},
      {"refine", "Re-annotate emotions where the LLM and VAD labels disagree", &Pipeline::refine},
      {"emit-targets", "Write sentiment and emotion training instances", &Pipeline::emit_targets},
  };

  std::vector<CommonOptions> stage_opts(stages.size());
  std::vector<CLI::App*> stage_cmds;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    auto* cmd = app.add_subcommand(stages[i].name, stages[i].help);
    add_common(cmd, stage_opts[i]);
    stage_cmds.push_back(cmd);
  }

  CommonOptions eval_opts;
  std::vector<std::string> prediction_files;
  std::string format = "plain";
  std::string split = "test";
  std::string output;
  auto* evaluate = app.add_subcommand("evaluate", "Score prediction files with micro P/R/F1");
  add_common(evaluate, eval_opts);
  evaluate->add_option("--predictions", prediction_files, "Prediction JSONL, one file per run")->required();
  evaluate->add_option("--format", format, "plain | tsv | json")->check(CLI::IsMember({"plain", "tsv", "json"}));
  evaluate->add_option("--split", split, "Gold split to score against")
      ->check(CLI::IsMember({"train", "validation", "test"}));
  evaluate->add_option("--output", output, "Write the report here instead of stdout");

  CommonOptions stats_opts;
  auto* stats = app.add_subcommand("stats", "Print run statistics from the manifest");
  add_common(stats, stats_opts);

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  if (!argv_rev.empty()) argv_rev.pop_back();  // program name
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    for (std::size_t i = 0; i < stages.size(); ++i) {
      if (!stage_cmds[i]->parsed()) continue;
      const PipelineConfig cfg = resolve_config(stage_opts[i]);
      Pipeline pipeline(cfg, nullptr, nullptr, &err);
      for (Dataset ds : selected_datasets(stage_opts[i], cfg)) print_result(out, ds, (pipeline.*stages[i].fn)(ds));
      return 0;
    }
    if (evaluate->parsed()) {
      if (eval_opts.dataset.empty()) throw ConfigError("evaluate needs --dataset");
      const PipelineConfig cfg = resolve_config(eval_opts);
      Pipeline pipeline(cfg, nullptr, nullptr, &err);
      std::vector<std::filesystem::path> files(prediction_files.begin(), prediction_files.end());
      std::vector<RunAggregate> aggregates;
      for (Dataset ds : selected_datasets(eval_opts, cfg)) {
        aggregates.push_back(pipeline.evaluate(ds, files, *parse_split(split)));
      }
      const std::string rendered = render_report(aggregates, *parse_report_format(format));
      if (output.empty()) out << rendered;
      else write_file_atomic(output, rendered);
      return 0;
    }
    if (stats->parsed()) {
      const PipelineConfig cfg = resolve_config(stats_opts);
      Pipeline pipeline(cfg, nullptr, nullptr, &err);
      bool all_consistent = true;
      for (Dataset ds : selected_datasets(stats_opts, cfg)) {
        bool consistent = true;
        out << pipeline.stats(ds, consistent);
        all_consistent = all_consistent && consistent;
      }
      return all_consistent ? 0 : 3;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace affect
