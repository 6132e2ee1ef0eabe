#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dialogic/error.hpp"

namespace dialogic {

struct CompletionRequest {
  std::string model_id;
  std::string prompt;
  double temperature = 0.0;
  int max_output = 512;
  std::string tag;             // caller label, recorded in cache metadata
  std::string prompt_version;  // e.g. "topic_naming.v1"
  // Callers re-asking after an unusable reply bump this so the retry is
  // not answered from the cache entry holding that same reply.
  int retry_round = 0;
};

struct CompletionResult {
  std::string text;
  bool cached = false;
  std::chrono::milliseconds latency{0};
  int attempt_count = 1;
};

// Hex SHA-256 over (model_id, prompt, temperature, prompt_version[, round]).
std::string cache_key(const CompletionRequest& r);

// Providers signal failures by throwing Error with AuthError, RateLimited,
// ProviderError or Timeout.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string complete(const CompletionRequest& r) = 0;
  virtual std::string name() const = 0;
};

// One JSON file per key: {"key", "text", "model_id", "prompt_version",
// "temperature", "tag", "provider"}. Writes go through a temp file and a
// rename, so readers never see a partial entry.
class DiskCache {
 public:
  explicit DiskCache(std::filesystem::path dir);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& text,
           const nlohmann::json& metadata);
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::mutex write_mu_;
};

// Shared token bucket. Callers reserve a token and sleep off any deficit,
// so concurrent callers queue in arrival order.
class RateLimiter {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;
  using Sleep = std::function<void(std::chrono::nanoseconds)>;

  RateLimiter(double per_second, double burst, Clock clock = {},
              Sleep sleep = {});

  void acquire();
  bool unlimited() const { return rate_ <= 0.0; }

 private:
  double rate_;
  double burst_;
  double tokens_;
  Clock clock_;
  Sleep sleep_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mu_;
};

struct GatewayOptions {
  std::optional<std::filesystem::path> cache_dir;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double backoff_factor = 2.0;
  std::size_t max_in_flight = 4;
  double requests_per_second = 0.0;  // 0 disables the limiter
  double burst = 1.0;
  std::function<void(std::chrono::nanoseconds)> sleep;  // default: real sleep
};

class Gateway {
 public:
  Gateway(std::shared_ptr<Provider> provider, GatewayOptions options = {});

  CompletionResult complete(const CompletionRequest& r);

  std::size_t provider_calls() const { return provider_calls_; }
  std::size_t cache_hits() const { return cache_hits_; }
  std::size_t max_in_flight_observed() const { return max_observed_; }
  const Provider& provider() const { return *provider_; }

 private:
  std::string call_with_retry(const CompletionRequest& r, int& attempts);

  std::shared_ptr<Provider> provider_;
  GatewayOptions opts_;
  std::unique_ptr<DiskCache> cache_;
  RateLimiter limiter_;
  std::counting_semaphore<> slots_;
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> max_observed_{0};
  std::atomic<std::size_t> provider_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

bool is_retryable(ErrorCode code);

// Scriptable offline provider. Rules are tried in order; the first match
// answers. A rule may carry a sequence of steps that are consumed one per
// call (the last step repeats), which is how tests script failures.
class MockProvider : public Provider {
 public:
  using Matcher = std::function<bool(std::string_view prompt)>;
  using Responder = std::function<std::string(const CompletionRequest&)>;

  struct Step {
    std::string text;
    std::optional<ErrorCode> error;

    static Step reply(std::string t) { return {std::move(t), std::nullopt}; }
    static Step fail(ErrorCode c) { return {{}, c}; }
  };

  MockProvider& when_contains(std::string needle, std::string reply);
  MockProvider& when_contains(std::string needle, std::vector<Step> steps);
  MockProvider& when_contains(std::string needle, Responder r);
  MockProvider& when_regex(const std::string& pattern, std::string reply);
  MockProvider& when(Matcher m, Responder r);
  MockProvider& when(Matcher m, std::vector<Step> steps);
  MockProvider& otherwise(Responder r);
  MockProvider& otherwise(std::string reply);
  MockProvider& otherwise(std::vector<Step> steps);

  // Artificial latency, handy for exercising the in-flight cap.
  void set_delay(std::chrono::milliseconds d) { delay_ = d; }

  std::string complete(const CompletionRequest& r) override;
  std::string name() const override { return "mock"; }

  std::size_t calls() const { return calls_; }
  std::size_t max_concurrent() const { return max_concurrent_; }

 private:
  struct Rule {
    Matcher match;
    Responder respond;
    std::vector<Step> steps;
    std::size_t next_step = 0;
  };

  std::vector<Rule> rules_;
  std::mutex mu_;
  std::chrono::milliseconds delay_{0};
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> active_{0};
  std::atomic<std::size_t> max_concurrent_{0};
};

// OpenAI-style chat-completions endpoint. Configuration comes from
// DIALOGIC_LLM_ENDPOINT, DIALOGIC_LLM_API_KEY and DIALOGIC_LLM_MODEL.
struct HttpProviderConfig {
  std::string endpoint;  // e.g. https://api.example.com/v1/chat/completions
  std::string api_key;
  std::string model_id;
  std::chrono::milliseconds timeout{60000};

  static HttpProviderConfig from_env();
};

class HttpProvider : public Provider {
 public:
  explicit HttpProvider(HttpProviderConfig config);

  std::string complete(const CompletionRequest& r) override;
  std::string name() const override { return "http"; }

 private:
  HttpProviderConfig config_;
  std::string base_;  // scheme://host[:port]
  std::string path_;
};

}  // namespace dialogic
