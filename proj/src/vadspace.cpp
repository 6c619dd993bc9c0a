#include "affect/vadspace.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "affect/text.hpp"

namespace affect {

namespace {

double normalize_component(double x, const char* name) {
  if (!(x >= 1.0 && x <= 5.0)) {
    throw InvalidArgument(std::string(name) + " rating " + std::to_string(x) + " outside [1, 5]");
  }
  return (x - 3.0) / 2.0;
}

}  // namespace

Vad normalize(const RawVad& raw) {
  return Vad{normalize_component(raw.valence, "valence"), normalize_component(raw.arousal, "arousal"),
             normalize_component(raw.dominance, "dominance")};
}

double squared_distance(const Vad& p, const Vad& q) {
  const double dv = p.v - q.v;
  const double da = p.a - q.a;
  const double dd = p.d - q.d;
  return dv * dv + da * da + dd * dd;
}

EmotionLabel nearest_emotion(const Vad& p) {
  EmotionLabel best = kEmotionCentroids.front().label;
  double best_distance = squared_distance(p, kEmotionCentroids.front().center);
  for (std::size_t i = 1; i < kEmotionCentroids.size(); ++i) {
    const double d = squared_distance(p, kEmotionCentroids[i].center);
    if (d < best_distance) {
      best_distance = d;
      best = kEmotionCentroids[i].label;
    }
  }
  return best;
}

// --- lexicon ----------------------------------------------------------------

void VadLexicon::add(std::string word, Entry entry) { entries_[text::to_lower(word)] = entry; }

const VadLexicon::Entry* VadLexicon::find(std::string_view word) const {
  auto it = entries_.find(std::string(word));
  return it == entries_.end() ? nullptr : &it->second;
}

namespace {

bool parse_unit(const std::string& s, double& out) {
  std::istringstream in(text::trim(s));
  in >> out;
  return in && in.eof() && out >= 0.0 && out <= 1.0;
}

}  // namespace

VadLexicon VadLexicon::parse(std::istream& in) {
  VadLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const auto cols = text::split(line, '\t');
    const std::string where = "lexicon line " + std::to_string(line_no);
    if (cols.size() != 4) throw ParseError(where + ": expected 4 tab-separated columns");
    Entry e{};
    const bool ok = parse_unit(cols[1], e.v) && parse_unit(cols[2], e.a) && parse_unit(cols[3], e.d);
    if (!ok) {
      if (line_no == 1 && lex.size() == 0) continue;  // header
      throw ParseError(where + ": values must be numbers in [0, 1]");
    }
    const std::string word = text::trim(cols[0]);
    if (word.empty()) throw ParseError(where + ": empty word");
    lex.add(word, e);
  }
  return lex;
}

VadLexicon VadLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon " + path.string());
  try {
    return parse(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

RawVad lexicon_score(std::string_view text, const VadLexicon& lexicon) {
  double sum_v = 0.0, sum_a = 0.0, sum_d = 0.0;
  std::size_t hits = 0;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    if (const auto* e = lexicon.find(token)) {
      sum_v += e->v;
      sum_a += e->a;
      sum_d += e->d;
      ++hits;
    }
    token.clear();
  };
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  if (hits == 0) return RawVad{3.0, 3.0, 3.0};
  const double n = static_cast<double>(hits);
  return RawVad{sum_v / n * 4.0 + 1.0, sum_a / n * 4.0 + 1.0, sum_d / n * 4.0 + 1.0};
}

// --- remote scorer ----------------------------------------------------------

std::string build_remote_score_body(std::string_view text) {
  return nlohmann::json{{"text", std::string(text)}}.dump();
}

RawVad parse_remote_score_response(std::string_view body) {
  auto parsed = nlohmann::json::parse(body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) throw ParseError("VAD scorer returned invalid JSON");
  auto field = [&parsed](const char* key) {
    auto it = parsed.find(key);
    if (it == parsed.end() || !it->is_number()) {
      throw ParseError(std::string("VAD scorer response lacks numeric '") + key + "'");
    }
    const double x = it->get<double>();
    if (!(x >= 1.0 && x <= 5.0)) {
      throw ParseError(std::string("VAD scorer ") + key + " " + std::to_string(x) + " outside [1, 5]");
    }
    return x;
  };
  return RawVad{field("valence"), field("arousal"), field("dominance")};
}

RemoteScorer::RemoteScorer(std::string endpoint_url, std::chrono::seconds timeout) : timeout_(timeout) {
  const auto scheme_end = endpoint_url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("scorer endpoint needs a scheme: " + endpoint_url);
  const auto path_start = endpoint_url.find('/', scheme_end + 3);
  scheme_host_port_ = endpoint_url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : endpoint_url.substr(path_start);
}

RawVad RemoteScorer::score(std::string_view text) const {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  auto res = client.Post(path_, build_remote_score_body(text), "application/json");
  if (!res) throw IoError("VAD scorer unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200) throw IoError("VAD scorer returned HTTP " + std::to_string(res->status));
  return parse_remote_score_response(res->body);
}

RawVad remote_score(std::string_view text, const std::string& endpoint_url) {
  return RemoteScorer(endpoint_url).score(text);
}

}  // namespace affect
