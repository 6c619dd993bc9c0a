#include "affect/llm_client.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "affect/hash.hpp"
#include "affect/io.hpp"
#include "affect/text.hpp"

namespace affect {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

CacheKey CacheKey::of(const PromptRequest& request) {
  // Length-prefix every field so no two distinct tuples serialise identically.
  std::string buf;
  auto field = [&buf](std::string_view s) {
    buf += std::to_string(s.size());
    buf += ':';
    buf += s;
    buf += ';';
  };
  char temperature[32];
  std::snprintf(temperature, sizeof temperature, "%.17g", request.temperature);
  field(request.model_id);
  field(request.system_text);
  field(request.user_text);
  field(temperature);
  field(std::to_string(request.max_output_tokens));
  return CacheKey{sha256_hex(buf)};
}

bool TransportReply::transient() const {
  switch (kind) {
    case Kind::kOk: return false;
    case Kind::kTimeout:
    case Kind::kNetworkError: return true;
    case Kind::kHttpError: return status == 429 || (status >= 500 && status <= 599);
  }
  return false;
}

std::string build_chat_body(const PromptRequest& request) {
  ojson messages = ojson::array();
  if (!request.system_text.empty()) {
    messages.push_back({{"role", "system"}, {"content", request.system_text}});
  }
  messages.push_back({{"role", "user"}, {"content", request.user_text}});
  ojson body{{"model", request.model_id},
             {"messages", std::move(messages)},
             {"temperature", request.temperature},
             {"max_tokens", request.max_output_tokens}};
  return body.dump();
}

std::optional<std::string> extract_completion_text(const std::string& body) {
  json parsed = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded() || !parsed.is_object()) return std::nullopt;
  auto choices = parsed.find("choices");
  if (choices == parsed.end() || !choices->is_array() || choices->empty()) return std::nullopt;
  const json& first = (*choices)[0];
  if (!first.is_object()) return std::nullopt;
  auto message = first.find("message");
  if (message == first.end() || !message->is_object()) return std::nullopt;
  auto content = message->find("content");
  if (content == message->end() || !content->is_string()) return std::nullopt;
  return content->get<std::string>();
}

// --- HttpTransport ----------------------------------------------------------

HttpTransport::HttpTransport(std::string base_url, std::chrono::seconds timeout)
    : timeout_(timeout) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("api base URL needs a scheme: " + base_url);
  const auto path_start = base_url.find('/', scheme_end + 3);
  scheme_host_port_ = base_url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  path_ = prefix + "/chat/completions";
}

TransportReply HttpTransport::send(const PromptRequest& request, const std::string& api_key) {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers headers{{"Authorization", "Bearer " + api_key}};

  auto res = client.Post(path_, headers, build_chat_body(request), "application/json");
  if (!res) {
    const auto err = res.error();
    TransportReply reply;
    reply.kind = (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
                     ? TransportReply::Kind::kTimeout
                     : TransportReply::Kind::kNetworkError;
    reply.status = 0;
    reply.detail = httplib::to_string(err);
    return reply;
  }
  if (res->status != 200) return TransportReply::http_error(res->status, res->body);
  auto content = extract_completion_text(res->body);
  if (!content) return TransportReply::http_error(res->status, "response has no choices[0].message.content");
  return TransportReply::ok(std::move(*content));
}

// --- ScriptedTransport ------------------------------------------------------

void ScriptedTransport::push_reply(TransportReply reply) {
  std::lock_guard lock(mu_);
  queue_.push_back(std::move(reply));
}

void ScriptedTransport::add_rule(std::vector<std::string> match, std::string response) {
  std::lock_guard lock(mu_);
  rules_.push_back(Rule{std::move(match), std::move(response)});
}

void ScriptedTransport::load_rules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open transport script " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    json rule = json::parse(line, nullptr, false);
    if (rule.is_discarded() || !rule.is_object()) throw SchemaError(where + ": invalid JSON");
    if (!rule.contains("response") || !rule["response"].is_string()) {
      throw SchemaError(where + ": 'response' must be a string");
    }
    std::vector<std::string> match;
    const json& m = rule.value("match", json(""));
    if (m.is_string()) {
      match.push_back(m.get<std::string>());
    } else if (m.is_array()) {
      for (const auto& s : m) {
        if (!s.is_string()) throw SchemaError(where + ": 'match' entries must be strings");
        match.push_back(s.get<std::string>());
      }
    } else {
      throw SchemaError(where + ": 'match' must be a string or array of strings");
    }
    add_rule(std::move(match), rule["response"].get<std::string>());
  }
}

TransportReply ScriptedTransport::send(const PromptRequest& request, const std::string&) {
  std::lock_guard lock(mu_);
  requests_.push_back(request);
  if (!queue_.empty()) {
    TransportReply reply = std::move(queue_.front());
    queue_.pop_front();
    return reply;
  }
  for (const auto& rule : rules_) {
    bool all = true;
    for (const auto& needle : rule.match) {
      if (request.user_text.find(needle) == std::string::npos) {
        all = false;
        break;
      }
    }
    if (all) return TransportReply::ok(rule.response);
  }
  return TransportReply::http_error(404, "no scripted reply for request");
}

std::size_t ScriptedTransport::calls() const {
  std::lock_guard lock(mu_);
  return requests_.size();
}

std::vector<PromptRequest> ScriptedTransport::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

// --- backoff ----------------------------------------------------------------

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry, std::mt19937_64& rng) {
  const double nominal = static_cast<double>(policy.base_delay.count()) *
                         std::pow(policy.factor, static_cast<double>(retry - 1));
  // 53 random bits mapped onto [-1, 1).
  const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
  const double scaled = nominal * (1.0 + policy.jitter * unit);
  return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(std::max(0.0, scaled))));
}

// --- ResponseCache ----------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create cache directory " + dir_.string() + ": " + ec.message());
}

std::filesystem::path ResponseCache::entry_path(const CacheKey& key) const {
  return dir_ / (key.digest + ".json");
}

namespace {

std::string entry_checksum(const CacheKey& key, const std::string& text) {
  return sha256_hex(key.digest + "\n" + text);
}

}  // namespace

std::optional<std::string> ResponseCache::load(const CacheKey& key) const {
  const auto path = entry_path(key);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  std::string raw;
  try {
    raw = read_file(path);
  } catch (const IoError&) {
    return std::nullopt;
  }
  json entry = json::parse(raw, nullptr, false);
  if (!entry.is_discarded() && entry.is_object() && entry.value("digest", "") == key.digest &&
      entry.contains("text") && entry["text"].is_string()) {
    std::string text = entry["text"].get<std::string>();
    if (entry.value("checksum", "") == entry_checksum(key, text)) return text;
  }
  std::cerr << "warning: cache entry " << path.string() << " failed its checksum; treating as miss\n";
  return std::nullopt;
}

void ResponseCache::store(const CacheKey& key, const std::string& text) const {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
  ojson entry{{"digest", key.digest},
              {"timestamp", stamp},
              {"text", text},
              {"checksum", entry_checksum(key, text)}};
  write_file_atomic(entry_path(key), entry.dump() + "\n");
}

std::mutex& ResponseCache::key_mutex(const CacheKey& key) {
  std::lock_guard lock(map_mu_);
  auto& slot = key_mutexes_[key.digest];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

// --- LlmClient --------------------------------------------------------------

class LlmClient::Slot {
public:
  explicit Slot(LlmClient& client) : client_(client) {
    std::unique_lock lock(client_.in_flight_mu_);
    client_.in_flight_cv_.wait(lock, [this] { return client_.in_flight_ < client_.options_.max_in_flight; });
    ++client_.in_flight_;
  }
  ~Slot() {
    {
      std::lock_guard lock(client_.in_flight_mu_);
      --client_.in_flight_;
    }
    client_.in_flight_cv_.notify_one();
  }
  Slot(const Slot&) = delete;
  Slot& operator=(const Slot&) = delete;

private:
  LlmClient& client_;
};

LlmClient::LlmClient(std::shared_ptr<Transport> transport, Options options,
                     std::shared_ptr<ResponseCache> cache)
    : transport_(std::move(transport)),
      options_(std::move(options)),
      cache_(std::move(cache)),
      jitter_rng_(options_.jitter_seed) {
  if (!transport_) throw ConfigError("LLM client needs a transport");
  if (options_.retry.max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
  if (options_.max_in_flight < 1) throw ConfigError("concurrency limit must be at least 1");
  if (!options_.sleep) {
    options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

LlmResponse LlmClient::complete(const PromptRequest& request) {
  std::string api_key = options_.api_key.value_or("");
  if (transport_->needs_credential() && api_key.empty()) {
    throw ConfigError(std::string("no API credential: set ") + kApiKeyEnvVar);
  }
  if (request.user_text.empty()) throw InvalidArgument("prompt user text is empty");

  std::string last_failure;
  for (int attempt = 1; attempt <= options_.retry.max_attempts; ++attempt) {
    TransportReply reply;
    {
      Slot slot(*this);
      reply = transport_->send(request, api_key);
    }
    if (reply.kind == TransportReply::Kind::kOk) {
      return LlmResponse{std::move(reply.text), false, attempt};
    }
    last_failure = reply.kind == TransportReply::Kind::kHttpError
                       ? "HTTP " + std::to_string(reply.status) + ": " + reply.detail
                       : reply.detail;
    if (!reply.transient()) throw LlmError("LLM request failed: " + last_failure);
    if (attempt < options_.retry.max_attempts) {
      std::chrono::milliseconds delay;
      {
        std::lock_guard lock(rng_mu_);
        delay = backoff_delay(options_.retry, attempt, jitter_rng_);
      }
      options_.sleep(delay);
    }
  }
  throw LlmError("LLM request gave up after " + std::to_string(options_.retry.max_attempts) +
                 " attempts: " + last_failure);
}

LlmResponse LlmClient::cached_complete(const PromptRequest& request, ResponseCache& cache) {
  const CacheKey key = CacheKey::of(request);
  std::lock_guard key_lock(cache.key_mutex(key));
  if (auto hit = cache.load(key)) return LlmResponse{std::move(*hit), true, 1};
  LlmResponse response = complete(request);
  cache.store(key, response.text);
  return response;
}

LlmResponse LlmClient::ask(const PromptRequest& request) {
  return cache_ ? cached_complete(request, *cache_) : complete(request);
}

}  // namespace affect
