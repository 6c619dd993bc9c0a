#include <doctest.h>

#include <atomic>
#include <fstream>
#include <set>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "affect/io.hpp"
#include "affect/llm_client.hpp"
#include "test_support.hpp"

using namespace affect;
using affect::testing::FunctionTransport;
using affect::testing::no_sleep_options;
using affect::testing::TempDir;

namespace {

PromptRequest request(std::string user = "Which emotion?") {
  PromptRequest r;
  r.system_text = "system";
  r.user_text = std::move(user);
  r.max_output_tokens = 8;
  return r;
}

std::size_t count_files(const std::filesystem::path& dir) {
  std::size_t n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) n += entry.is_regular_file();
  return n;
}

}  // namespace

TEST_CASE("stub passthrough") {
  auto transport = std::make_shared<FunctionTransport>([](const PromptRequest&) { return TransportReply::ok("joy"); });
  LlmClient client(transport, no_sleep_options());
  auto response = client.complete(request());
  CHECK(response.text == "joy");
  CHECK(response.attempt_count == 1);
  CHECK_FALSE(response.cached);
}

TEST_CASE("two 429s then success: three attempts with growing backoff") {
  std::atomic<int> n{0};
  auto transport = std::make_shared<FunctionTransport>([&n](const PromptRequest&) {
    return ++n <= 2 ? TransportReply::http_error(429, "slow down") : TransportReply::ok("anger");
  });
  std::vector<std::chrono::milliseconds> sleeps;
  auto options = no_sleep_options();
  options.sleep = [&sleeps](std::chrono::milliseconds d) { sleeps.push_back(d); };
  LlmClient client(transport, options);

  auto response = client.complete(request());
  CHECK(response.text == "anger");
  CHECK(response.attempt_count == 3);
  REQUIRE(sleeps.size() == 2);
  CHECK(sleeps[0].count() >= 800);
  CHECK(sleeps[0].count() <= 1200);
  CHECK(sleeps[1].count() >= 1600);
  CHECK(sleeps[1].count() <= 2400);
}

TEST_CASE("missing credential fails before any call") {
  auto transport = std::make_shared<FunctionTransport>([](const PromptRequest&) { return TransportReply::ok("x"); },
                                                       /*needs_credential=*/true);
  LlmClient client(transport, no_sleep_options());
  CHECK_THROWS_AS(client.complete(request()), ConfigError);
  CHECK(transport->calls() == 0);

  auto options = no_sleep_options();
  options.api_key = "sk-test";
  LlmClient with_key(transport, options);
  CHECK(with_key.complete(request()).text == "x");
}

TEST_CASE("non-transient error is not retried; transient errors exhaust the cap") {
  auto bad = std::make_shared<FunctionTransport>([](const PromptRequest&) { return TransportReply::http_error(400); });
  LlmClient client(bad, no_sleep_options());
  CHECK_THROWS_AS(client.complete(request()), LlmError);
  CHECK(bad->calls() == 1);

  auto flaky = std::make_shared<FunctionTransport>([](const PromptRequest&) { return TransportReply::http_error(503); });
  LlmClient capped(flaky, no_sleep_options());
  CHECK_THROWS_AS(capped.complete(request()), LlmError);
  CHECK(flaky->calls() == 5);

  std::atomic<int> n{0};
  auto slow = std::make_shared<FunctionTransport>(
      [&n](const PromptRequest&) { return ++n == 1 ? TransportReply::timeout() : TransportReply::ok("fear"); });
  LlmClient timeouts(slow, no_sleep_options());
  CHECK(timeouts.complete(request()).attempt_count == 2);
}

TEST_CASE("transient classification") {
  CHECK(TransportReply::http_error(429).transient());
  CHECK(TransportReply::http_error(500).transient());
  CHECK(TransportReply::http_error(599).transient());
  CHECK_FALSE(TransportReply::http_error(401).transient());
  CHECK_FALSE(TransportReply::http_error(404).transient());
  CHECK(TransportReply::timeout().transient());
  CHECK_FALSE(TransportReply::ok("x").transient());
}

TEST_CASE("backoff delay stays within the jitter band") {
  RetryPolicy policy;
  std::mt19937_64 rng(99);
  for (int retry = 1; retry <= 4; ++retry) {
    const double nominal = 1000.0 * std::pow(2.0, retry - 1);
    for (int i = 0; i < 200; ++i) {
      const auto d = backoff_delay(policy, retry, rng).count();
      CHECK(d >= std::llround(nominal * 0.8));
      CHECK(d <= std::llround(nominal * 1.2));
    }
  }
}

TEST_CASE("cache key: equal requests agree, every field matters") {
  const PromptRequest base = request();
  CHECK(CacheKey::of(base) == CacheKey::of(request()));
  CHECK(CacheKey::of(base).digest.size() == 64);

  std::vector<PromptRequest> variants(5, base);
  variants[0].model_id = "other-model";
  variants[1].system_text = "different system";
  variants[2].user_text = "Which emotion?!";
  variants[3].temperature = 0.5;
  variants[4].max_output_tokens = 9;
  std::set<std::string> digests{CacheKey::of(base).digest};
  for (const auto& v : variants) digests.insert(CacheKey::of(v).digest);
  CHECK(digests.size() == 6);

  // Field boundaries are unambiguous.
  PromptRequest a = base, b = base;
  a.system_text = "ab";
  a.user_text = "c";
  b.system_text = "a";
  b.user_text = "bc";
  CHECK_FALSE(CacheKey::of(a) == CacheKey::of(b));
}

TEST_CASE("cached_complete: hit skips the transport, key sensitivity") {
  TempDir dir;
  auto transport = std::make_shared<FunctionTransport>([](const PromptRequest& r) {
    return TransportReply::ok("echo " + r.user_text);
  });
  LlmClient client(transport, no_sleep_options());
  ResponseCache cache(dir / "cache");

  auto first = client.cached_complete(request(), cache);
  CHECK_FALSE(first.cached);
  CHECK(transport->calls() == 1);

  auto second = client.cached_complete(request(), cache);
  CHECK(second.cached);
  CHECK(second.text == first.text);
  CHECK(transport->calls() == 1);

  auto other = client.cached_complete(request("Another sentence"), cache);
  CHECK_FALSE(other.cached);
  CHECK(transport->calls() == 2);
  CHECK(count_files(cache.dir()) == 2);

  auto entry = nlohmann::json::parse(read_file(cache.entry_path(CacheKey::of(request()))));
  CHECK(entry["digest"] == CacheKey::of(request()).digest);
  CHECK(entry["text"] == "echo Which emotion?");
  CHECK(entry.contains("timestamp"));
}

TEST_CASE("corrupted cache entry is a miss") {
  TempDir dir;
  std::atomic<int> n{0};
  auto transport = std::make_shared<FunctionTransport>(
      [&n](const PromptRequest&) { return TransportReply::ok("answer " + std::to_string(++n)); });
  LlmClient client(transport, no_sleep_options());
  ResponseCache cache(dir / "cache");
  client.cached_complete(request(), cache);

  const auto path = cache.entry_path(CacheKey::of(request()));
  auto entry = nlohmann::json::parse(read_file(path));
  entry["text"] = "tampered";
  write_file_atomic(path, entry.dump());

  auto again = client.cached_complete(request(), cache);
  CHECK_FALSE(again.cached);
  CHECK(again.text == "answer 2");
  CHECK(client.cached_complete(request(), cache).cached);

  write_file_atomic(path, "not json");
  CHECK_FALSE(client.cached_complete(request(), cache).cached);
}

TEST_CASE("concurrent misses on one key persist a single entry") {
  TempDir dir;
  std::atomic<int> n{0};
  auto transport = std::make_shared<FunctionTransport>([&n](const PromptRequest&) {
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    return TransportReply::ok("surprise #" + std::to_string(++n));
  });
  auto cache = std::make_shared<ResponseCache>(dir / "cache");
  LlmClient client(transport, no_sleep_options(), cache);

  std::vector<std::string> texts(8);
  {
    std::vector<std::jthread> threads;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      threads.emplace_back([&, i] { texts[i] = client.ask(request()).text; });
    }
  }
  CHECK(transport->calls() == 1);
  CHECK(count_files(cache->dir()) == 1);
  for (const auto& t : texts) CHECK(t == texts[0]);
}

TEST_CASE("in-flight requests are bounded") {
  std::atomic<int> active{0}, peak{0};
  auto transport = std::make_shared<FunctionTransport>([&](const PromptRequest&) {
    const int now = ++active;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    --active;
    return TransportReply::ok("joy");
  });
  auto options = no_sleep_options();
  options.max_in_flight = 2;
  LlmClient client(transport, options);
  {
    std::vector<std::jthread> threads;
    for (int i = 0; i < 8; ++i) threads.emplace_back([&, i] { client.complete(request("q" + std::to_string(i))); });
  }
  CHECK(peak.load() <= 2);
  CHECK(transport->calls() == 8);
}

TEST_CASE("scripted transport: queue first, then rules, then 404") {
  TempDir dir;
  {
    std::ofstream rules(dir / "rules.jsonl");
    rules << R"({"match": ["Sub-sentence", "rude"], "response": "anger"})" << '\n'
          << R"({"match": "Sub-sentence", "response": "neutral"})" << '\n';
  }
  auto scripted = std::make_shared<ScriptedTransport>();
  scripted->load_rules(dir / "rules.jsonl");
  scripted->push_reply(TransportReply::http_error(429));

  LlmClient client(scripted, no_sleep_options());
  auto r = client.complete(request("Sub-sentence: staff was rude"));
  CHECK(r.text == "anger");
  CHECK(r.attempt_count == 2);
  CHECK(client.complete(request("Sub-sentence: fine")).text == "neutral");
  CHECK_THROWS_AS(client.complete(request("unmatched")), LlmError);
  CHECK(scripted->calls() == 4);
}

TEST_CASE("chat body and completion extraction") {
  PromptRequest r = request("hello");
  auto body = nlohmann::json::parse(build_chat_body(r));
  CHECK(body["model"] == "gpt-4o-mini");
  CHECK(body["temperature"] == 0.0);
  CHECK(body["max_tokens"] == 8);
  REQUIRE(body["messages"].size() == 2);
  CHECK(body["messages"][0]["role"] == "system");
  CHECK(body["messages"][1]["content"] == "hello");

  CHECK(extract_completion_text(R"({"choices":[{"message":{"role":"assistant","content":" joy\n"}}]})") == " joy\n");
  CHECK_FALSE(extract_completion_text(R"({"choices":[]})"));
  CHECK_FALSE(extract_completion_text("garbage"));
}

TEST_CASE("HTTP transport against a local server") {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::string seen_auth;
  std::string seen_body;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (++hits == 1) {
      res.status = 429;
      return;
    }
    seen_auth = req.get_header_value("Authorization");
    seen_body = req.body;
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"sadness"}}]})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::jthread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto options = no_sleep_options();
  options.api_key = "sk-local";
  LlmClient client(std::make_shared<HttpTransport>("http://127.0.0.1:" + std::to_string(port) + "/v1/"), options);
  auto response = client.complete(request("How does this feel?"));
  server.stop();

  CHECK(response.text == "sadness");
  CHECK(response.attempt_count == 2);
  CHECK(seen_auth == "Bearer sk-local");
  auto body = nlohmann::json::parse(seen_body);
  CHECK(body["messages"][1]["content"] == "How does this feel?");
}
