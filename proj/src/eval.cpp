#include "affect/eval.hpp"

#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

namespace affect {

using ojson = nlohmann::ordered_json;

EvalReport make_report(long tp, long fp, long fn, long malformed, Dataset dataset) {
  EvalReport r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.malformed = malformed;
  r.dataset = dataset;
  r.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  r.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  r.f1 = r.precision + r.recall > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

EvalReport score(std::span<const SentencePrediction> predictions, std::span<const SentenceGold> gold,
                 Dataset dataset) {
  if (predictions.size() != gold.size()) {
    throw InvalidArgument("predictions cover " + std::to_string(predictions.size()) + " sentences, gold " +
                          std::to_string(gold.size()));
  }
  long tp = 0, fp = 0, fn = 0, malformed = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predictions[i].id != gold[i].id) {
      throw InvalidArgument("sentence " + std::to_string(i) + ": prediction id '" + predictions[i].id +
                            "' does not match gold id '" + gold[i].id + "'");
    }
    const std::set<CategoryLabel> pred(predictions[i].predicted.list.pairs.begin(),
                                       predictions[i].predicted.list.pairs.end());
    const std::set<CategoryLabel> truth(gold[i].gold.pairs.begin(), gold[i].gold.pairs.end());
    long hits = 0;
    for (const auto& p : pred) hits += static_cast<long>(truth.count(p));
    tp += hits;
    fp += static_cast<long>(pred.size()) - hits;
    fn += static_cast<long>(truth.size()) - hits;
    malformed += predictions[i].predicted.malformed;
  }
  return make_report(tp, fp + malformed, fn, malformed, dataset);
}

RunAggregate aggregate_runs(std::span<const EvalReport> reports) {
  if (reports.empty()) throw InvalidArgument("no runs to aggregate");
  RunAggregate agg;
  agg.dataset = reports.front().dataset;
  for (const auto& r : reports) {
    if (r.dataset != agg.dataset) throw InvalidArgument("runs from different datasets cannot be aggregated");
    agg.runs.push_back(r);
    agg.mean_precision += r.precision;
    agg.mean_recall += r.recall;
    agg.mean_f1 += r.f1;
  }
  const double n = static_cast<double>(reports.size());
  agg.mean_precision /= n;
  agg.mean_recall /= n;
  agg.mean_f1 /= n;
  return agg;
}

std::optional<ReportFormat> parse_report_format(std::string_view s) {
  if (s == "plain") return ReportFormat::kPlain;
  if (s == "tsv") return ReportFormat::kTsv;
  if (s == "json") return ReportFormat::kJson;
  return std::nullopt;
}

namespace {

std::string pct(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * x);
  return buf;
}

ojson report_json(const EvalReport& r) {
  return ojson{{"dataset", to_string(r.dataset)}, {"tp", r.tp},
               {"fp", r.fp},                      {"fn", r.fn},
               {"malformed", r.malformed},        {"precision", r.precision},
               {"recall", r.recall},              {"f1", r.f1}};
}

std::string render_plain(std::span<const RunAggregate> aggregates) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %-6s %8s %8s %8s %6s %6s %6s\n", "dataset", "run", "P", "R", "F1", "tp",
                "fp", "fn");
  out << line;
  for (const auto& agg : aggregates) {
    const std::string ds(to_string(agg.dataset));
    for (std::size_t i = 0; i < agg.runs.size(); ++i) {
      const auto& r = agg.runs[i];
      std::snprintf(line, sizeof line, "%-8s %-6zu %8s %8s %8s %6ld %6ld %6ld\n", ds.c_str(), i + 1,
                    pct(r.precision).c_str(), pct(r.recall).c_str(), pct(r.f1).c_str(), r.tp, r.fp, r.fn);
      out << line;
    }
    std::snprintf(line, sizeof line, "%-8s %-6s %8s %8s %8s\n", ds.c_str(), "mean", pct(agg.mean_precision).c_str(),
                  pct(agg.mean_recall).c_str(), pct(agg.mean_f1).c_str());
    out << line;
  }
  return out.str();
}

std::string render_tsv(std::span<const RunAggregate> aggregates) {
  std::ostringstream out;
  out << "dataset\trun\tprecision\trecall\tf1\ttp\tfp\tfn\tmalformed\n";
  for (const auto& agg : aggregates) {
    const std::string ds(to_string(agg.dataset));
    for (std::size_t i = 0; i < agg.runs.size(); ++i) {
      const auto& r = agg.runs[i];
      out << ds << '\t' << (i + 1) << '\t' << pct(r.precision) << '\t' << pct(r.recall) << '\t' << pct(r.f1) << '\t'
          << r.tp << '\t' << r.fp << '\t' << r.fn << '\t' << r.malformed << '\n';
    }
    out << ds << "\tmean\t" << pct(agg.mean_precision) << '\t' << pct(agg.mean_recall) << '\t' << pct(agg.mean_f1)
        << "\t\t\t\t\n";
  }
  return out.str();
}

std::string render_json(std::span<const RunAggregate> aggregates) {
  ojson out = ojson::array();
  for (const auto& agg : aggregates) {
    ojson runs = ojson::array();
    for (const auto& r : agg.runs) runs.push_back(report_json(r));
    out.push_back(ojson{{"dataset", to_string(agg.dataset)},
                        {"mean_precision", agg.mean_precision},
                        {"mean_recall", agg.mean_recall},
                        {"mean_f1", agg.mean_f1},
                        {"runs", std::move(runs)}});
  }
  return out.dump(2) + "\n";
}

template <typename T>
T field(const ojson& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const ojson::exception&) {
    throw SchemaError(std::string("field '") + key + "' has the wrong type");
  }
}

Dataset dataset_field(const ojson& obj) {
  const auto name = field<std::string>(obj, "dataset");
  auto ds = parse_dataset(name);
  if (!ds) throw SchemaError("unknown dataset '" + name + "'");
  return *ds;
}

}  // namespace

std::string render_report(std::span<const RunAggregate> aggregates, ReportFormat format) {
  if (aggregates.empty()) throw InvalidArgument("nothing to report");
  switch (format) {
    case ReportFormat::kPlain: return render_plain(aggregates);
    case ReportFormat::kTsv: return render_tsv(aggregates);
    case ReportFormat::kJson: return render_json(aggregates);
  }
  return {};
}

std::vector<RunAggregate> aggregates_from_json(std::string_view json_text) {
  ojson doc = ojson::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) throw SchemaError("report JSON must be an array");
  std::vector<RunAggregate> out;
  for (const auto& a : doc) {
    if (!a.is_object()) throw SchemaError("aggregate is not an object");
    RunAggregate agg;
    agg.dataset = dataset_field(a);
    agg.mean_precision = field<double>(a, "mean_precision");
    agg.mean_recall = field<double>(a, "mean_recall");
    agg.mean_f1 = field<double>(a, "mean_f1");
    const auto runs = a.find("runs");
    if (runs == a.end() || !runs->is_array()) throw SchemaError("field 'runs' must be an array");
    for (const auto& r : *runs) {
      if (!r.is_object()) throw SchemaError("run is not an object");
      EvalReport rep;
      rep.dataset = dataset_field(r);
      rep.tp = field<long>(r, "tp");
      rep.fp = field<long>(r, "fp");
      rep.fn = field<long>(r, "fn");
      rep.malformed = field<long>(r, "malformed");
      rep.precision = field<double>(r, "precision");
      rep.recall = field<double>(r, "recall");
      rep.f1 = field<double>(r, "f1");
      agg.runs.push_back(rep);
    }
    out.push_back(std::move(agg));
  }
  return out;
}

}  // namespace affect
