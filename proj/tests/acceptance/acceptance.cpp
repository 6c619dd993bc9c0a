// Acceptance suite: one PASS/FAIL line per criterion, each under a time limit.
// Exit status is non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "affect/corpus.hpp"
#include "affect/eval.hpp"
#include "affect/io.hpp"
#include "affect/pipeline.hpp"
#include "affect/refine.hpp"
#include "affect/targets.hpp"
#include "affect/vadspace.hpp"
#include "test_support.hpp"

using namespace affect;
using affect::testing::data_path;
using affect::testing::FunctionTransport;
using affect::testing::no_sleep_options;
using affect::testing::TempDir;
namespace fs = std::filesystem;

namespace {

// Collects the first few failure descriptions of a criterion.
struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 5) failures.push_back(what);
  }
  bool ok() const { return failures.empty(); }
};

struct Criterion {
  std::string name;
  std::chrono::milliseconds limit;
  std::function<void(Check&)> body;
};

// ---------------------------------------------------------------------------

void normalization_exactness(Check& c) {
  c.expect(normalize({3, 3, 3}) == Vad{0, 0, 0}, "(3,3,3) -> (0,0,0)");
  c.expect(normalize({5, 1, 3}) == Vad{1, -1, 0}, "(5,1,3) -> (1,-1,0)");
  c.expect(normalize({4, 2.5, 3.5}) == Vad{0.5, -0.25, 0.25}, "(4,2.5,3.5) -> (0.5,-0.25,0.25)");
}

void centroid_fixed_points(Check& c) {
  for (const auto& centroid : kEmotionCentroids) {
    c.expect(nearest_emotion(centroid.center) == centroid.label,
             "centroid of " + std::string(to_string(centroid.label)));
  }
}

struct OracleCentroid {
  const char* label;
  double v, a, d;
};

// Restated independently of the library table.
constexpr OracleCentroid kOracleCentroids[] = {
    {"anger", -0.43, 0.67, 0.34},   {"disgust", -0.60, 0.35, 0.11}, {"fear", -0.64, 0.60, -0.43},
    {"joy", 0.76, 0.48, 0.35},      {"surprise", 0.40, 0.67, -0.13}, {"sadness", -0.63, 0.27, -0.33},
};

std::string brute_force_nearest(double v, double a, double d) {
  const char* best = nullptr;
  double best_dist = INFINITY;
  for (const auto& row : kOracleCentroids) {
    const double dist = std::hypot(v - row.v, a - row.a, d - row.d);
    if (dist < best_dist) {
      best_dist = dist;
      best = row.label;
    }
  }
  return best;
}

void nearest_centroid_oracle(Check& c) {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> cube(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const Vad p{cube(rng), cube(rng), cube(rng)};
    const std::string got(to_string(nearest_emotion(p)));
    c.expect(got == brute_force_nearest(p.v, p.a, p.d), "random point " + std::to_string(i));
  }
  c.expect(nearest_emotion({0, 0, 0}) == EmotionLabel::kDisgust, "(0,0,0) -> disgust");
  c.expect(brute_force_nearest(0, 0, 0) == "disgust", "oracle (0,0,0) -> disgust");
  c.expect(nearest_emotion({0.5, 0.5, 0}) == EmotionLabel::kSurprise, "(0.5,0.5,0) -> surprise");
  c.expect(brute_force_nearest(0.5, 0.5, 0) == "surprise", "oracle (0.5,0.5,0) -> surprise");
}

void evaluation_oracle(Check& c) {
  const std::vector<std::string> categories = {"FOOD#QUALITY", "SERVICE#GENERAL", "AMBIENCE#GENERAL"};
  const std::vector<std::string> labels = {"positive", "neutral", "negative"};
  std::mt19937 rng(77);

  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 10;
    std::vector<SentencePrediction> predictions;
    std::vector<SentenceGold> gold;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string id = "s" + std::to_string(i);
      auto draw = [&](std::size_t lo) {
        std::vector<CategoryLabel> pairs;
        const std::size_t k = lo + rng() % (5 - lo);
        while (pairs.size() < k) {
          CategoryLabel p{categories[rng() % categories.size()], labels[rng() % labels.size()]};
          if (std::find(pairs.begin(), pairs.end(), p) == pairs.end()) pairs.push_back(p);
        }
        return pairs;
      };
      gold.push_back({id, {PairKind::kSentiment, draw(1)}});
      predictions.push_back({id, {{PairKind::kSentiment, draw(0)}, static_cast<int>(rng() % 4 == 0)}});
    }

    // Hand enumeration: walk every (category, label) in the universe per sentence.
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& cat : categories) {
        for (const auto& lab : labels) {
          const CategoryLabel u{cat, lab};
          const auto& pp = predictions[i].predicted.list.pairs;
          const auto& gp = gold[i].gold.pairs;
          const bool in_p = std::find(pp.begin(), pp.end(), u) != pp.end();
          const bool in_g = std::find(gp.begin(), gp.end(), u) != gp.end();
          tp += in_p && in_g;
          fp += in_p && !in_g;
          fn += !in_p && in_g;
        }
      }
      fp += predictions[i].predicted.malformed;
    }
    const double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
    const double r = tp + fn ? double(tp) / double(tp + fn) : 0.0;
    const double f = p + r ? 2 * p * r / (p + r) : 0.0;

    const EvalReport rep = score(predictions, gold, Dataset::kRest16);
    const std::string where = "micro-corpus " + std::to_string(trial);
    c.expect(std::abs(rep.precision - p) < 1e-12, where + " precision");
    c.expect(std::abs(rep.recall - r) < 1e-12, where + " recall");
    c.expect(std::abs(rep.f1 - f) < 1e-12, where + " f1");
  }

  const std::vector<SentencePrediction> pred = {
      {"1", {{PairKind::kSentiment, {{"A#B", "positive"}, {"C#D", "positive"}}}, 0}}};
  const std::vector<SentenceGold> truth = {{"1", {PairKind::kSentiment, {{"A#B", "positive"}, {"C#D", "negative"}}}}};
  const EvalReport two = score(pred, truth, Dataset::kRest16);
  c.expect(two.precision == 0.5 && two.recall == 0.5 && two.f1 == 0.5, "two-pair example gives (0.5, 0.5, 0.5)");
}

void seed_aggregation(Check& c) {
  // Run 1: P=1, R=0.5. Run 2: P=0.5, R=1.
  const std::vector<EvalReport> runs = {make_report(2, 0, 2, 0, Dataset::kRest16),
                                        make_report(2, 2, 0, 0, Dataset::kRest16)};
  c.expect(runs[0].precision == 1.0 && runs[0].recall == 0.5, "run 1 is (1, 0.5)");
  c.expect(runs[1].precision == 0.5 && runs[1].recall == 1.0, "run 2 is (0.5, 1)");
  const RunAggregate agg = aggregate_runs(runs);
  const double hm = 2 * agg.mean_precision * agg.mean_recall / (agg.mean_precision + agg.mean_recall);
  c.expect(std::abs(agg.mean_f1 - 2.0 / 3.0) < 1e-12, "mean F1 is 0.6667");
  c.expect(std::abs(hm - 0.75) < 1e-12, "HM of mean P and mean R is 0.75");
  c.expect(std::abs(agg.mean_f1 - hm) > 0.05, "mean F1 differs from HM(mean P, mean R)");

  // Published Rest16 row: P 85.06, R 86.14, F1 85.01.
  const double rest16_hm = 2 * 85.06 * 86.14 / (85.06 + 86.14);
  c.expect(std::abs(rest16_hm - 85.6) < 0.05, "Rest16 HM is about 85.6");
  c.expect(std::abs(rest16_hm - 85.01) > 0.5, "Rest16 printed F1 is not the HM of printed P and R");
}

void serialization_round_trip(Check& c) {
  const std::string letters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ_";
  const std::vector<std::string> sentiments = {"positive", "neutral", "negative"};
  const std::vector<std::string> emotions = {"anger", "disgust", "fear", "joy", "sadness", "surprise", "neutral"};
  std::mt19937 rng(4242);
  for (int trial = 0; trial < 2000; ++trial) {
    const PairKind kind = trial % 2 ? PairKind::kEmotion : PairKind::kSentiment;
    const auto& labels = kind == PairKind::kSentiment ? sentiments : emotions;
    PairList list{kind, {}};
    const std::size_t n = 1 + rng() % 6;
    while (list.pairs.size() < n) {
      std::string cat;
      for (std::size_t i = 0, len = 1 + rng() % 8; i < len; ++i) cat += letters[rng() % letters.size()];
      cat += '#';
      for (std::size_t i = 0, len = 1 + rng() % 8; i < len; ++i) cat += letters[rng() % letters.size()];
      CategoryLabel pair{cat, labels[rng() % labels.size()]};
      if (std::find(list.pairs.begin(), list.pairs.end(), pair) == list.pairs.end()) list.pairs.push_back(pair);
    }
    const ParsedPairs back = parse_pairs(serialize_pairs(list), kind);
    c.expect(back.list == list && back.malformed == 0, "generated case " + std::to_string(trial));
  }

  const PairList sentiment{PairKind::kSentiment, {{"LAPTOP#QUALITY", "negative"}, {"LAPTOP#GENERAL", "positive"}}};
  const PairList emotion{PairKind::kEmotion, {{"LAPTOP#QUALITY", "disgust"}, {"LAPTOP#GENERAL", "joy"}}};
  c.expect(serialize_pairs(sentiment) == "LAPTOP#QUALITY:negative; LAPTOP#GENERAL:positive", "sentiment example");
  c.expect(serialize_pairs(emotion) == "LAPTOP#QUALITY:disgust; LAPTOP#GENERAL:joy", "emotion example");
}

void refinement_gate(Check& c) {
  const SubSentence sub{"1:0", 0, "the bill was steep", "RESTAURANT#PRICES", SentimentPolarity::kNegative, false};
  long agreements = 0, refinements = 0, fallbacks = 0, total = 0;

  for (EmotionLabel llm : kAllEmotions) {
    for (const auto& centroid : kEmotionCentroids) {
      const EmotionLabel vad = centroid.label;
      const std::string pair = std::string(to_string(llm)) + "/" + std::string(to_string(vad));
      for (bool parseable : {true, false}) {
        auto stub = std::make_shared<FunctionTransport>([parseable](const PromptRequest&) {
          return TransportReply::ok(parseable ? "sadness" : "not sure");
        });
        LlmClient client(stub, no_sleep_options());
        const RefineOutcome out = refine(sub, llm, vad, client);
        ++total;
        switch (out.result.provenance) {
          case Provenance::kAgreed: ++agreements; break;
          case Provenance::kRefined: ++refinements; break;
          case Provenance::kFallback: ++fallbacks; break;
          case Provenance::kBypassed: break;
        }
        if (llm == vad) {
          c.expect(stub->calls() == 0, pair + ": agreement makes no LLM call");
          c.expect(out.result.provenance == Provenance::kAgreed && out.result.label == llm, pair + ": agreed");
        } else {
          c.expect(out.conversations == 1, pair + ": exactly one refinement conversation");
          if (parseable) {
            c.expect(stub->calls() == 1, pair + ": one request when the answer parses");
            c.expect(out.result.provenance == Provenance::kRefined, pair + ": refined");
          } else {
            c.expect(stub->calls() == kParseAttempts, pair + ": three attempts before falling back");
            c.expect(out.result.provenance == Provenance::kFallback && out.result.label == vad,
                     pair + ": fallback takes the VAD label");
          }
        }
      }
    }
  }
  c.expect(agreements + refinements + fallbacks == total, "agreements + refinements + fallbacks == total");
  c.expect(agreements == 12, "12 agreeing pairs (6 labels x 2 stubs)");
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path());
  }
  return files;
}

std::map<std::string, std::string> run_fixture_pipeline(const TempDir& dir) {
  write_file_atomic(dir / "affect.conf", "transport = script\n"
                                         "script_path = " + data_path("rest16_script.jsonl").string() + "\n"
                                         "lexicon_path = " + data_path("lexicon.tsv").string() + "\n"
                                         "data.rest16.train = " + data_path("e2e_three.xml").string() + "\n");
  std::ostringstream log;
  Pipeline p(load_config(dir / "affect.conf"), nullptr, nullptr, &log);
  p.ingest(Dataset::kRest16);
  p.decompose(Dataset::kRest16);
  p.emogen(Dataset::kRest16);
  p.vadmap(Dataset::kRest16);
  p.refine(Dataset::kRest16);
  p.emit_targets(Dataset::kRest16);
  return snapshot(dir / "work");
}

void end_to_end_determinism(Check& c) {
  TempDir first, second;
  const auto a = run_fixture_pipeline(first);
  const auto b = run_fixture_pipeline(second);
  for (const char* name : {"corpus.jsonl", "subsentences.jsonl", "emotions.jsonl", "vad.jsonl", "refined.jsonl",
                           "manifest.json", "targets/train.jsonl"}) {
    const std::string key = std::string("rest16/") + name;
    c.expect(a.count(key) && !a.at(key).empty(), key + " produced");
  }
  c.expect(a.size() == b.size(), "same set of files");
  for (const auto& [name, bytes] : a) {
    auto it = b.find(name);
    c.expect(it != b.end() && it->second == bytes, name + " byte-identical");
  }
}

void corpus_integrity(Check& c) {
  static const std::regex opinion_tag(R"(<Opinion[\s/>])");
  for (const char* name : {"rest16_train.xml", "rest16_test.xml", "lap15_train.xml", "e2e_three.xml"}) {
    const std::string xml = read_file(data_path(name));
    const auto raw = static_cast<std::size_t>(
        std::distance(std::sregex_iterator(xml.begin(), xml.end(), opinion_tag), std::sregex_iterator()));
    const ParsedCorpus parsed = parse_semeval_xml(xml, Dataset::kRest16, Split::kTrain);
    std::size_t kept = 0;
    for (const auto& ex : parsed.examples) kept += ex.opinions.size();
    c.expect(kept + parsed.stats.duplicate_opinions == raw, std::string(name) + ": opinion count preserved");

    std::stringstream buf;
    write_jsonl(parsed.examples, buf);
    const std::string first = buf.str();
    const auto back = read_jsonl(buf);
    c.expect(back == parsed.examples, std::string(name) + ": JSONL round trip");
    std::stringstream again;
    write_jsonl(back, again);
    c.expect(again.str() == first, std::string(name) + ": JSONL re-serialisation is byte-identical");
  }
}

}  // namespace

int main() {
  using std::chrono::milliseconds;
  const std::vector<Criterion> criteria = {
      {"normalization exactness", milliseconds(1000), normalization_exactness},
      {"centroid fixed points", milliseconds(1000), centroid_fixed_points},
      {"nearest-centroid oracle", milliseconds(1000), nearest_centroid_oracle},
      {"evaluation oracle", milliseconds(5000), evaluation_oracle},
      {"seed aggregation", milliseconds(1000), seed_aggregation},
      {"serialization round trip", milliseconds(5000), serialization_round_trip},
      {"refinement gate contract", milliseconds(5000), refinement_gate},
      {"end-to-end determinism", milliseconds(10000), end_to_end_determinism},
      {"corpus integrity", milliseconds(5000), corpus_integrity},
  };

  int failed = 0;
  for (const auto& criterion : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      criterion.body(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("exception: ") + e.what());
    }
    const auto elapsed = std::chrono::duration_cast<milliseconds>(std::chrono::steady_clock::now() - start);
    if (elapsed > criterion.limit) {
      check.failures.push_back("took " + std::to_string(elapsed.count()) + " ms, limit " +
                               std::to_string(criterion.limit.count()) + " ms");
    }
    std::printf("%s  %-26s %6lld ms (limit %lld ms)\n", check.ok() ? "PASS" : "FAIL", criterion.name.c_str(),
                static_cast<long long>(elapsed.count()), static_cast<long long>(criterion.limit.count()));
    for (const auto& f : check.failures) std::printf("      - %s\n", f.c_str());
    failed += !check.ok();
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
