#include "affect/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>

#include "affect/error.hpp"
#include "affect/io.hpp"
#include "affect/text.hpp"

namespace affect {

namespace pt = boost::property_tree;
using ojson = nlohmann::ordered_json;

std::string_view to_string(SentimentPolarity p) {
  switch (p) {
    case SentimentPolarity::kPositive: return "positive";
    case SentimentPolarity::kNeutral: return "neutral";
    case SentimentPolarity::kNegative: return "negative";
  }
  return "neutral";
}

std::optional<SentimentPolarity> parse_polarity(std::string_view s) {
  if (s == "positive") return SentimentPolarity::kPositive;
  if (s == "neutral") return SentimentPolarity::kNeutral;
  if (s == "negative") return SentimentPolarity::kNegative;
  return std::nullopt;
}

std::string_view to_string(Dataset d) {
  switch (d) {
    case Dataset::kRest15: return "rest15";
    case Dataset::kRest16: return "rest16";
    case Dataset::kLap15: return "lap15";
    case Dataset::kLap16: return "lap16";
  }
  return "rest16";
}

std::optional<Dataset> parse_dataset(std::string_view s) {
  for (Dataset d : {Dataset::kRest15, Dataset::kRest16, Dataset::kLap15, Dataset::kLap16}) {
    if (to_string(d) == s) return d;
  }
  return std::nullopt;
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "train";
}

std::optional<Split> parse_split(std::string_view s) {
  for (Split sp : {Split::kTrain, Split::kValidation, Split::kTest}) {
    if (to_string(sp) == s) return sp;
  }
  return std::nullopt;
}

std::string normalize_category(std::string_view raw) {
  std::string cat = text::to_upper(text::trim(raw));
  if (cat.empty()) throw ParseError("empty aspect category");
  if (std::count(cat.begin(), cat.end(), '#') != 1) {
    throw ParseError("aspect category '" + cat + "' must contain exactly one '#'");
  }
  return cat;
}

namespace {

void collect_sentences(const pt::ptree& node, std::vector<const pt::ptree*>& out) {
  for (const auto& [name, child] : node) {
    if (name == "sentence") {
      out.push_back(&child);
    } else if (name != "<xmlattr>" && name != "<xmlcomment>") {
      collect_sentences(child, out);
    }
  }
}

}  // namespace

ParsedCorpus parse_semeval_xml(std::string_view xml_bytes, Dataset dataset, Split split) {
  pt::ptree tree;
  std::istringstream in{std::string(xml_bytes)};
  try {
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError(std::string("malformed XML: ") + e.what());
  }

  std::vector<const pt::ptree*> sentences;
  collect_sentences(tree, sentences);

  ParsedCorpus result;
  std::set<std::string> seen_ids;
  for (const pt::ptree* sentence : sentences) {
    ++result.stats.sentences;
    const std::string id = sentence->get<std::string>("<xmlattr>.id", "");
    if (id.empty()) throw ParseError("sentence without id attribute");
    const std::string where = "sentence " + id;

    GoldExample ex;
    ex.id = id;
    ex.text = text::trim(sentence->get<std::string>("text", ""));
    ex.dataset = dataset;
    ex.split = split;

    std::size_t raw_opinions = 0;
    if (auto opinions = sentence->get_child_optional("Opinions")) {
      for (const auto& [name, op] : *opinions) {
        if (name != "Opinion") continue;
        ++raw_opinions;
        auto category = op.get_optional<std::string>("<xmlattr>.category");
        auto polarity = op.get_optional<std::string>("<xmlattr>.polarity");
        if (!category) throw ParseError(where + ": Opinion without category attribute");
        if (!polarity) throw ParseError(where + ": Opinion without polarity attribute");
        auto pol = parse_polarity(*polarity);
        if (!pol) {
          throw ParseError(where + ": polarity '" + *polarity + "' is not positive/neutral/negative");
        }
        AspectOpinion opinion;
        try {
          opinion = AspectOpinion{normalize_category(*category), *pol};
        } catch (const ParseError& e) {
          throw ParseError(where + ": " + e.what());
        }
        if (std::find(ex.opinions.begin(), ex.opinions.end(), opinion) != ex.opinions.end()) {
          ++result.stats.duplicate_opinions;
          std::cerr << "warning: " << where << ": duplicate opinion " << opinion.category << ':'
                    << to_string(opinion.polarity) << " collapsed\n";
          continue;
        }
        ex.opinions.push_back(std::move(opinion));
      }
    }

    if (raw_opinions == 0) {
      ++result.stats.skipped_without_opinions;
      continue;
    }
    if (ex.text.empty()) throw ParseError(where + ": empty sentence text");
    if (!seen_ids.insert(id).second) throw ParseError(where + ": duplicate sentence id");
    result.examples.push_back(std::move(ex));
  }
  return result;
}

namespace {

ojson to_json(const GoldExample& ex) {
  ojson opinions = ojson::array();
  for (const auto& op : ex.opinions) {
    opinions.push_back(ojson{{"category", op.category}, {"polarity", to_string(op.polarity)}});
  }
  return ojson{{"id", ex.id},
               {"text", ex.text},
               {"opinions", std::move(opinions)},
               {"dataset", to_string(ex.dataset)},
               {"split", to_string(ex.split)}};
}

std::string require_string(const ojson& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(std::string("missing field '") + key + "'");
  if (!it->is_string()) throw SchemaError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

GoldExample from_json(const ojson& obj) {
  if (!obj.is_object()) throw SchemaError("record is not an object");
  GoldExample ex;
  ex.id = require_string(obj, "id");
  ex.text = require_string(obj, "text");
  if (ex.text.empty()) throw SchemaError("empty text");

  const std::string dataset = require_string(obj, "dataset");
  auto ds = parse_dataset(dataset);
  if (!ds) throw SchemaError("unknown dataset '" + dataset + "'");
  ex.dataset = *ds;

  const std::string split = require_string(obj, "split");
  auto sp = parse_split(split);
  if (!sp) throw SchemaError("unknown split '" + split + "'");
  ex.split = *sp;

  auto ops = obj.find("opinions");
  if (ops == obj.end() || !ops->is_array()) throw SchemaError("field 'opinions' must be an array");
  for (const auto& op : *ops) {
    if (!op.is_object()) throw SchemaError("opinion is not an object");
    const std::string polarity = require_string(op, "polarity");
    auto pol = parse_polarity(polarity);
    if (!pol) throw SchemaError("unknown polarity '" + polarity + "'");
    std::string category;
    try {
      category = normalize_category(require_string(op, "category"));
    } catch (const ParseError& e) {
      throw SchemaError(e.what());
    }
    ex.opinions.push_back(AspectOpinion{std::move(category), *pol});
  }
  return ex;
}

}  // namespace

void write_jsonl(const std::vector<GoldExample>& examples, std::ostream& out) {
  for (const auto& ex : examples) out << to_json(ex).dump() << '\n';
  if (!out) throw IoError("corpus write failed");
}

void write_jsonl(const std::vector<GoldExample>& examples, const std::filesystem::path& path) {
  std::ostringstream buf;
  write_jsonl(examples, buf);
  write_file_atomic(path, buf.str());
}

std::vector<GoldExample> read_jsonl(std::istream& in) {
  std::vector<GoldExample> examples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      examples.push_back(from_json(ojson::parse(line)));
    } catch (const ojson::parse_error& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    } catch (const SchemaError& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (in.bad()) throw IoError("corpus read failed");
  return examples;
}

std::vector<GoldExample> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return read_jsonl(in);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

namespace {

// Unbiased draw from [0, bound) by rejection; std::uniform_int_distribution is
// implementation-defined and would make splits differ across standard libraries.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

ValidationPartition split_validation(std::vector<GoldExample> train, double fraction,
                                     std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw InvalidArgument("validation fraction must lie strictly between 0 and 1");
  }
  if (train.empty()) throw InvalidArgument("cannot split an empty training set");

  std::vector<std::string> ids;
  ids.reserve(train.size());
  for (const auto& ex : train) ids.push_back(ex.id);
  std::sort(ids.begin(), ids.end());

  std::mt19937_64 rng(seed);
  for (std::size_t i = ids.size() - 1; i > 0; --i) {
    std::swap(ids[i], ids[bounded(rng, i + 1)]);
  }
  const auto n_validation =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(train.size())));
  const std::set<std::string> validation_ids(ids.begin(), ids.begin() + n_validation);

  ValidationPartition out;
  for (auto& ex : train) {
    if (validation_ids.count(ex.id)) {
      ex.split = Split::kValidation;
      out.validation.push_back(std::move(ex));
    } else {
      out.train.push_back(std::move(ex));
    }
  }
  return out;
}

}  // namespace affect
