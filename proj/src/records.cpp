#include "affect/records.hpp"

#include <fstream>
#include <functional>

#include <json.hpp>

#include "affect/text.hpp"

namespace affect {

using ojson = nlohmann::ordered_json;

namespace {

std::string get_string(const ojson& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) throw SchemaError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

int get_int(const ojson& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number_integer()) {
    throw SchemaError(std::string("field '") + key + "' must be an integer");
  }
  return it->get<int>();
}

double get_double(const ojson& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) throw SchemaError(std::string("field '") + key + "' must be a number");
  return it->get<double>();
}

bool get_bool(const ojson& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_boolean()) throw SchemaError(std::string("field '") + key + "' must be a boolean");
  return it->get<bool>();
}

SentimentPolarity get_polarity(const ojson& obj) {
  const auto s = get_string(obj, "polarity");
  auto p = parse_polarity(s);
  if (!p) throw SchemaError("unknown polarity '" + s + "'");
  return *p;
}

EmotionLabel get_emotion(const ojson& obj, const char* key) {
  const auto s = get_string(obj, key);
  auto e = parse_emotion_label(s);
  if (!e || to_string(*e) != s) throw SchemaError("unknown emotion '" + s + "' in '" + key + "'");
  return *e;
}

template <typename T>
std::vector<T> read_records(const std::filesystem::path& path, const std::function<T(const ojson&)>& decode) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<T> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    ojson obj = ojson::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) throw SchemaError(where + ": invalid JSON object");
    try {
      out.push_back(decode(obj));
    } catch (const SchemaError& e) {
      throw SchemaError(where + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::string to_jsonl_line(const SubSentence& s) {
  return ojson{{"parent_id", s.parent_id}, {"index", s.index},
               {"text", s.text},           {"category", s.category},
               {"polarity", to_string(s.polarity)}, {"degraded", s.degraded}}
      .dump();
}

std::string to_jsonl_line(const EmotionRecord& r) {
  return ojson{{"parent_id", r.parent_id},
               {"index", r.index},
               {"category", r.category},
               {"polarity", to_string(r.polarity)},
               {"emotion_llm", to_string(r.emotion_llm)}}
      .dump();
}

std::string to_jsonl_line(const VadRecord& r) {
  return ojson{{"parent_id", r.parent_id},
               {"index", r.index},
               {"category", r.category},
               {"polarity", to_string(r.polarity)},
               {"valence", r.raw.valence},
               {"arousal", r.raw.arousal},
               {"dominance", r.raw.dominance},
               {"v", r.vad.v},
               {"a", r.vad.a},
               {"d", r.vad.d},
               {"emotion_vad", to_string(r.emotion_vad)}}
      .dump();
}

std::string to_jsonl_line(const RefinedEmotion& r) {
  return ojson{{"parent_id", r.sub.parent_id},
               {"index", r.sub.index},
               {"category", r.sub.category},
               {"polarity", to_string(r.sub.polarity)},
               {"emotion_llm", to_string(r.llm_label)},
               {"emotion_vad", to_string(r.vad_label)},
               {"emotion_final", to_string(r.label)},
               {"provenance", to_string(r.provenance)}}
      .dump();
}

std::string to_jsonl_line(const TargetInstance& t) {
  return ojson{{"parent_id", t.parent_id}, {"kind", to_string(t.kind)}, {"input", t.input_text}, {"target", t.target_text}}
      .dump();
}

std::string to_jsonl_line(const PredictionRecord& p) {
  return ojson{{"parent_id", p.parent_id}, {"output_text", p.output_text}}.dump();
}

std::vector<SubSentence> read_subsentences(const std::filesystem::path& path) {
  return read_records<SubSentence>(path, [](const ojson& o) {
    SubSentence s;
    s.parent_id = get_string(o, "parent_id");
    s.index = get_int(o, "index");
    s.text = get_string(o, "text");
    s.category = get_string(o, "category");
    s.polarity = get_polarity(o);
    s.degraded = get_bool(o, "degraded");
    if (s.text.empty()) throw SchemaError("empty sub-sentence text");
    return s;
  });
}

std::vector<EmotionRecord> read_emotions(const std::filesystem::path& path) {
  return read_records<EmotionRecord>(path, [](const ojson& o) {
    return EmotionRecord{get_string(o, "parent_id"), get_int(o, "index"), get_string(o, "category"), get_polarity(o),
                         get_emotion(o, "emotion_llm")};
  });
}

std::vector<VadRecord> read_vad_records(const std::filesystem::path& path) {
  return read_records<VadRecord>(path, [](const ojson& o) {
    VadRecord r;
    r.parent_id = get_string(o, "parent_id");
    r.index = get_int(o, "index");
    r.category = get_string(o, "category");
    r.polarity = get_polarity(o);
    r.raw = RawVad{get_double(o, "valence"), get_double(o, "arousal"), get_double(o, "dominance")};
    r.vad = Vad{get_double(o, "v"), get_double(o, "a"), get_double(o, "d")};
    r.emotion_vad = get_emotion(o, "emotion_vad");
    return r;
  });
}

std::vector<RefinedEmotion> read_refined(const std::filesystem::path& path) {
  return read_records<RefinedEmotion>(path, [](const ojson& o) {
    RefinedEmotion r;
    r.sub.parent_id = get_string(o, "parent_id");
    r.sub.index = get_int(o, "index");
    r.sub.category = get_string(o, "category");
    r.sub.polarity = get_polarity(o);
    r.llm_label = get_emotion(o, "emotion_llm");
    r.vad_label = get_emotion(o, "emotion_vad");
    r.label = get_emotion(o, "emotion_final");
    const auto prov = get_string(o, "provenance");
    auto p = parse_provenance(prov);
    if (!p) throw SchemaError("unknown provenance '" + prov + "'");
    r.provenance = *p;
    return r;
  });
}

std::vector<TargetInstance> read_target_instances(const std::filesystem::path& path) {
  return read_records<TargetInstance>(path, [](const ojson& o) {
    const auto kind = get_string(o, "kind");
    auto k = parse_pair_kind(kind);
    if (!k) throw SchemaError("unknown kind '" + kind + "'");
    return TargetInstance{get_string(o, "parent_id"), *k, get_string(o, "input"), get_string(o, "target")};
  });
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  return read_records<PredictionRecord>(path, [](const ojson& o) {
    return PredictionRecord{get_string(o, "parent_id"), get_string(o, "output_text")};
  });
}

}  // namespace affect
