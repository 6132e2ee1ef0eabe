#include <chrono>
#include <fstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "doctest.h"
#include "dialogic/error.hpp"
#include "dialogic/gateway.hpp"
#include "dialogic/parallel.hpp"
#include "support/builders.hpp"

using namespace dialogic;
using namespace std::chrono_literals;
using Step = MockProvider::Step;

namespace {

CompletionRequest request(std::string prompt) {
  CompletionRequest r;
  r.model_id = "m";
  r.prompt = std::move(prompt);
  r.prompt_version = "v1";
  return r;
}

GatewayOptions no_sleep() {
  GatewayOptions o;
  o.sleep = [](std::chrono::nanoseconds) {};
  return o;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::IoError;
}

// Local chat-completions stand-in; the handler decides the status code.
struct FakeServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit FakeServer(httplib::Server::Handler handler) {
    server.Post("/v1/chat/completions", std::move(handler));
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~FakeServer() {
    server.stop();
    thread.join();
  }
  std::string endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  }
};

HttpProvider provider_for(const FakeServer& s, std::chrono::milliseconds timeout = 5s) {
  HttpProviderConfig c;
  c.endpoint = s.endpoint();
  c.api_key = "secret";
  c.model_id = "default-model";
  c.timeout = timeout;
  return HttpProvider(c);
}

}  // namespace

TEST_CASE("cache key depends on every keyed field") {
  auto base = request("hello");
  const auto k = cache_key(base);
  CHECK(k.size() == 64);
  CHECK(cache_key(base) == k);
  auto r = base;
  r.prompt = "hello ";
  CHECK(cache_key(r) != k);
  r = base;
  r.model_id = "m2";
  CHECK(cache_key(r) != k);
  r = base;
  r.temperature = 0.5;
  CHECK(cache_key(r) != k);
  r = base;
  r.prompt_version = "v2";
  CHECK(cache_key(r) != k);
  r = base;
  r.retry_round = 1;
  CHECK(cache_key(r) != k);
  r = base;
  r.tag = "other caller";
  r.max_output = 9;
  CHECK(cache_key(r) == k);
  // field boundaries cannot be shifted
  auto a = request("xy");
  a.model_id = "m";
  auto b = request("y");
  b.model_id = "mx";
  CHECK(cache_key(a) != cache_key(b));
}

TEST_CASE("second identical request is served from the cache") {
  testing::TempDir dir("cache");
  auto mock = std::make_shared<MockProvider>();
  mock->otherwise("canned");
  auto opts = no_sleep();
  opts.cache_dir = dir.path();
  Gateway gw(mock, opts);
  const auto first = gw.complete(request("p"));
  CHECK_FALSE(first.cached);
  const auto second = gw.complete(request("p"));
  CHECK(second.cached);
  CHECK(second.text == first.text);
  CHECK(mock->calls() == 1);

  // a fresh gateway over the same directory still hits
  auto silent = std::make_shared<MockProvider>();
  Gateway again(silent, opts);
  const auto third = again.complete(request("p"));
  CHECK(third.cached);
  CHECK(third.text == "canned");
  CHECK(silent->calls() == 0);
}

TEST_CASE("damaged cache entries count as misses") {
  testing::TempDir dir("cache-bad");
  auto mock = std::make_shared<MockProvider>();
  mock->otherwise("fresh");
  auto opts = no_sleep();
  opts.cache_dir = dir.path();
  Gateway gw(mock, opts);
  std::ofstream(dir.path() / (cache_key(request("p")) + ".json")) << "{not json";
  CHECK(gw.complete(request("p")).text == "fresh");
  CHECK(gw.complete(request("p")).cached);
}

TEST_CASE("retry: two failures then success") {
  auto mock = std::make_shared<MockProvider>();
  mock->when_contains("p", {Step::fail(ErrorCode::ProviderError),
                            Step::fail(ErrorCode::RateLimited),
                            Step::reply("ok")});
  std::vector<std::chrono::nanoseconds> sleeps;
  auto opts = no_sleep();
  opts.initial_backoff = 100ms;
  opts.sleep = [&](std::chrono::nanoseconds d) { sleeps.push_back(d); };
  Gateway gw(mock, opts);
  const auto r = gw.complete(request("p"));
  CHECK(r.text == "ok");
  CHECK(r.attempt_count == 3);
  REQUIRE(sleeps.size() == 2);
  CHECK(sleeps[0] == 100ms);
  CHECK(sleeps[1] == 200ms);
}

TEST_CASE("retry budget and non-retryable errors") {
  auto mock = std::make_shared<MockProvider>();
  mock->when_contains("busy", {Step::fail(ErrorCode::RateLimited)});
  mock->when_contains("slow", {Step::fail(ErrorCode::Timeout)});
  mock->when_contains("auth", {Step::fail(ErrorCode::AuthError)});
  Gateway gw(mock, no_sleep());
  CHECK(code_of([&] { gw.complete(request("busy")); }) == ErrorCode::RateLimited);
  CHECK(mock->calls() == 3);
  CHECK(code_of([&] { gw.complete(request("slow")); }) == ErrorCode::Timeout);
  CHECK(mock->calls() == 6);
  CHECK(code_of([&] { gw.complete(request("auth")); }) == ErrorCode::AuthError);
  CHECK(mock->calls() == 7);
  CHECK(code_of([&] { gw.complete(request("novel")); }) ==
        ErrorCode::UnscriptedPrompt);
  CHECK(code_of([&] { gw.complete(request("")); }) == ErrorCode::InvalidArgument);
  auto neg = request("busy");
  neg.temperature = -1;
  CHECK(code_of([&] { gw.complete(neg); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("mock: ordering, regex, functions") {
  MockProvider mock;
  mock.when_contains("Title:", "Title: \"Childhood Memories\"")
      .when_contains("Title", "second rule")
      .when_regex("^num=[0-9]+$", "digits")
      .when([](std::string_view p) { return p.size() > 100; },
            [](const CompletionRequest& r) {
              return std::to_string(r.prompt.size());
            });
  CHECK(mock.complete(request("x Title: y")) == "Title: \"Childhood Memories\"");
  CHECK(mock.complete(request("Title only")) == "second rule");
  CHECK(mock.complete(request("num=42")) == "digits");
  CHECK(mock.complete(request(std::string(150, 'a'))) == "150");
  CHECK(code_of([&] { mock.complete(request("num=4x")); }) ==
        ErrorCode::UnscriptedPrompt);
  mock.otherwise("fallback");
  CHECK(mock.complete(request("num=4x")) == "fallback");
}

TEST_CASE("concurrent completes respect the in-flight cap") {
  auto mock = std::make_shared<MockProvider>();
  mock->set_delay(5ms);
  mock->when([](std::string_view) { return true; },
             [](const CompletionRequest& r) { return "re:" + r.prompt; });
  auto opts = no_sleep();
  opts.max_in_flight = 3;
  Gateway gw(mock, opts);
  std::vector<std::string> out(40);
  parallel_for(out.size(), 12, [&](std::size_t i) {
    out[i] = gw.complete(request("p" + std::to_string(i))).text;
  });
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i] == "re:p" + std::to_string(i));
  }
  CHECK(gw.max_in_flight_observed() <= 3);
  CHECK(mock->max_concurrent() <= 3);
  CHECK(mock->max_concurrent() >= 2);
}

TEST_CASE("token bucket spaces requests by the configured rate") {
  auto t = std::chrono::steady_clock::time_point{};
  std::vector<std::chrono::nanoseconds> waits;
  RateLimiter limiter(
      10.0, 2.0, [&] { return t; },
      [&](std::chrono::nanoseconds d) {
        waits.push_back(d);
        t += d;
      });
  limiter.acquire();
  limiter.acquire();
  CHECK(waits.empty());  // burst of two
  limiter.acquire();
  REQUIRE(waits.size() == 1);
  CHECK(waits[0] == 100ms);
  t += 1s;  // refills to the burst cap, not beyond
  limiter.acquire();
  limiter.acquire();
  limiter.acquire();
  REQUIRE(waits.size() == 2);
  CHECK(waits[1] == 100ms);
}

TEST_CASE("http provider: success and request shape") {
  nlohmann::json seen;
  std::string auth;
  FakeServer server([&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(
        R"({"choices":[{"message":{"role":"assistant","content":"Title: \"X\""}}]})",
        "application/json");
  });
  auto provider = provider_for(server);
  auto r = request("the prompt");
  r.model_id = "";
  CHECK(provider.complete(r) == "Title: \"X\"");
  CHECK(auth == "Bearer secret");
  CHECK(seen["model"] == "default-model");
  CHECK(seen["messages"][0]["content"] == "the prompt");
  CHECK(seen["temperature"] == 0.0);
}

TEST_CASE("http provider: status codes map to distinct errors") {
  int status = 200;
  FakeServer server([&](const httplib::Request&, httplib::Response& res) {
    res.status = status;
    res.set_content(status == 200 ? "not json" : "{}", "application/json");
  });
  auto provider = provider_for(server);
  auto call = [&] { provider.complete(request("p")); };
  status = 401;
  CHECK(code_of(call) == ErrorCode::AuthError);
  status = 403;
  CHECK(code_of(call) == ErrorCode::AuthError);
  status = 429;
  CHECK(code_of(call) == ErrorCode::RateLimited);
  status = 503;
  CHECK(code_of(call) == ErrorCode::ProviderError);
  status = 200;
  CHECK(code_of(call) == ErrorCode::ProviderError);
}

TEST_CASE("http provider: slow server times out") {
  FakeServer server([&](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(600ms);
    res.set_content("{}", "application/json");
  });
  auto provider = provider_for(server, 150ms);
  CHECK(code_of([&] { provider.complete(request("p")); }) == ErrorCode::Timeout);
}

TEST_CASE("http provider: configuration errors") {
  HttpProviderConfig c;
  c.endpoint = "no-scheme";
  CHECK(code_of([&] { HttpProvider p(c); }) == ErrorCode::ConfigError);
}
