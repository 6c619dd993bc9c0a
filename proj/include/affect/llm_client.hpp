#pragma once

// Chat-completion client used by the annotation stages: injectable transport,
// exponential backoff on transient failures, bounded concurrency, and a
// content-addressed on-disk response cache.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "affect/error.hpp"

namespace affect {

inline constexpr const char* kDefaultModelId = "gpt-4o-mini";
inline constexpr const char* kApiKeyEnvVar = "AFFECT_FORGE_API_KEY";

struct PromptRequest {
  std::string model_id = kDefaultModelId;
  std::string system_text;
  std::string user_text;
  double temperature = 0.0;
  int max_output_tokens = 64;

  friend bool operator==(const PromptRequest&, const PromptRequest&) = default;
};

struct LlmResponse {
  std::string text;  // raw completion, untrimmed
  bool cached = false;
  int attempt_count = 1;
};

struct CacheKey {
  std::string digest;  // hex SHA-256

  static CacheKey of(const PromptRequest& request);
  friend bool operator==(const CacheKey&, const CacheKey&) = default;
};

// Service-side or transport failure that the client gave up on.
class LlmError : public Error {
public:
  using Error::Error;
};

struct TransportReply {
  enum class Kind { kOk, kHttpError, kTimeout, kNetworkError };

  Kind kind = Kind::kOk;
  int status = 200;
  std::string text;    // completion content when kind == kOk
  std::string detail;  // diagnostic for failures

  static TransportReply ok(std::string text) { return {Kind::kOk, 200, std::move(text), {}}; }
  static TransportReply http_error(int status, std::string detail = {}) {
    return {Kind::kHttpError, status, {}, std::move(detail)};
  }
  static TransportReply timeout() { return {Kind::kTimeout, 0, {}, "timeout"}; }

  // 429, 5xx, timeouts and connection failures are retried.
  bool transient() const;
};

class Transport {
public:
  virtual ~Transport() = default;
  virtual TransportReply send(const PromptRequest& request, const std::string& api_key) = 0;
  virtual bool needs_credential() const { return true; }
};

// JSON body for POST {base}/chat/completions.
std::string build_chat_body(const PromptRequest& request);
// First choice's message content; nullopt if the body does not have one.
std::optional<std::string> extract_completion_text(const std::string& body);

class HttpTransport : public Transport {
public:
  explicit HttpTransport(std::string base_url,
                         std::chrono::seconds timeout = std::chrono::seconds(60));
  TransportReply send(const PromptRequest& request, const std::string& api_key) override;

private:
  std::string scheme_host_port_;
  std::string path_;
  std::chrono::seconds timeout_;
};

// Replays canned completions. Queued replies are consumed first, in order;
// afterwards the first rule whose every `match` substring occurs in the user
// text answers. Anything else gets an HTTP 404 (non-transient).
class ScriptedTransport : public Transport {
public:
  struct Rule {
    std::vector<std::string> match;
    std::string response;
  };

  void push_reply(TransportReply reply);
  void add_rule(std::vector<std::string> match, std::string response);
  // JSONL, one {"match": string | [string...], "response": string} per line.
  void load_rules(const std::filesystem::path& path);

  TransportReply send(const PromptRequest& request, const std::string& api_key) override;
  bool needs_credential() const override { return false; }

  std::size_t calls() const;
  std::vector<PromptRequest> requests() const;

private:
  mutable std::mutex mu_;
  std::deque<TransportReply> queue_;
  std::vector<Rule> rules_;
  std::vector<PromptRequest> requests_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{1000};
  double factor = 2.0;
  double jitter = 0.2;  // +/- fraction of the nominal delay
};

// Delay before retry number `retry` (1-based): base * factor^(retry-1) * (1 + U(-jitter, jitter)).
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry, std::mt19937_64& rng);

// One file per key: <dir>/<digest>.json holding the digest, a timestamp, the
// raw response text and a checksum. Entries failing the checksum are misses.
class ResponseCache {
public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> load(const CacheKey& key) const;
  void store(const CacheKey& key, const std::string& text) const;
  std::filesystem::path entry_path(const CacheKey& key) const;
  const std::filesystem::path& dir() const { return dir_; }

  // Serialises concurrent misses on the same key within this process.
  std::mutex& key_mutex(const CacheKey& key);

private:
  std::filesystem::path dir_;
  std::mutex map_mu_;
  std::unordered_map<std::string, std::unique_ptr<std::mutex>> key_mutexes_;
};

class LlmClient {
public:
  struct Options {
    std::optional<std::string> api_key;
    RetryPolicy retry;
    std::size_t max_in_flight = 4;
    std::function<void(std::chrono::milliseconds)> sleep;  // defaults to sleeping the thread
    std::uint64_t jitter_seed = 0x5eed;
  };

  LlmClient(std::shared_ptr<Transport> transport, Options options,
            std::shared_ptr<ResponseCache> cache = nullptr);

  // Throws ConfigError when the transport needs a credential and none is set,
  // LlmError on non-transient failures or when the attempt cap is exhausted.
  LlmResponse complete(const PromptRequest& request);

  // Cache hit: no transport call, cached = true. Miss: complete() and persist.
  LlmResponse cached_complete(const PromptRequest& request, ResponseCache& cache);

  // cached_complete when a cache is attached, complete otherwise.
  LlmResponse ask(const PromptRequest& request);

  const std::shared_ptr<ResponseCache>& cache() const { return cache_; }

private:
  class Slot;

  std::shared_ptr<Transport> transport_;
  Options options_;
  std::shared_ptr<ResponseCache> cache_;

  std::mutex in_flight_mu_;
  std::condition_variable in_flight_cv_;
  std::size_t in_flight_ = 0;

  std::mutex rng_mu_;
  std::mt19937_64 jitter_rng_;
};

}  // namespace affect
