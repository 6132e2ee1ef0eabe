#include "dialogic/gateway.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "dialogic/hash.hpp"

namespace dialogic {

namespace fs = std::filesystem;
using nlohmann::json;

std::string cache_key(const CompletionRequest& r) {
  // Length-prefixed fields so that no two field tuples share a preimage.
  std::string material;
  auto field = [&](std::string_view s) {
    material += fmt::format("{}:", s.size());
    material += s;
    material.push_back('\n');
  };
  field(r.model_id);
  field(r.prompt);
  field(fmt::format("{:.17g}", r.temperature));
  field(r.prompt_version);
  if (r.retry_round > 0) field(fmt::format("round={}", r.retry_round));
  return sha256_hex(material);
}

DiskCache::DiskCache(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) {
    throw Error(ErrorCode::IoError, fmt::format("cannot create cache dir {}: {}",
                                                dir_.string(), ec.message()));
  }
}

std::optional<std::string> DiskCache::get(const std::string& key) const {
  std::ifstream in(dir_ / (key + ".json"), std::ios::binary);
  if (!in) return std::nullopt;
  try {
    const json j = json::parse(in);
    if (j.value("key", "") != key || !j.contains("text")) return std::nullopt;
    return j["text"].get<std::string>();
  } catch (const json::exception&) {
    return std::nullopt;  // treat a damaged entry as a miss
  }
}

void DiskCache::put(const std::string& key, const std::string& text,
                    const json& metadata) {
  json j = metadata;
  j["key"] = key;
  j["text"] = text;
  const std::string body = j.dump(2) + "\n";
  std::lock_guard lock(write_mu_);
  const fs::path final_path = dir_ / (key + ".json");
  const fs::path tmp = dir_ / (key + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << body;
    if (!out) {
      throw Error(ErrorCode::IoError,
                  fmt::format("cannot write cache entry {}", tmp.string()));
    }
  }
  fs::rename(tmp, final_path);
}

RateLimiter::RateLimiter(double per_second, double burst, Clock clock,
                         Sleep sleep)
    : rate_(per_second),
      burst_(std::max(1.0, burst)),
      tokens_(std::max(1.0, burst)),
      clock_(clock ? std::move(clock)
                   : Clock([] { return std::chrono::steady_clock::now(); })),
      sleep_(sleep ? std::move(sleep) : Sleep([](std::chrono::nanoseconds d) {
        std::this_thread::sleep_for(d);
      })),
      last_(clock_()) {}

void RateLimiter::acquire() {
  if (unlimited()) return;
  std::chrono::nanoseconds wait{0};
  {
    std::lock_guard lock(mu_);
    const auto now = clock_();
    const double elapsed = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(burst_, tokens_ + elapsed * rate_);
    tokens_ -= 1.0;
    if (tokens_ < 0.0) {
      wait = std::chrono::nanoseconds(
          static_cast<long long>(std::ceil(-tokens_ / rate_ * 1e9)));
    }
  }
  if (wait.count() > 0) sleep_(wait);
}

bool is_retryable(ErrorCode code) {
  return code == ErrorCode::RateLimited || code == ErrorCode::ProviderError ||
         code == ErrorCode::Timeout;
}

Gateway::Gateway(std::shared_ptr<Provider> provider, GatewayOptions options)
    : provider_(std::move(provider)),
      opts_(std::move(options)),
      limiter_(opts_.requests_per_second, opts_.burst, {}, opts_.sleep),
      slots_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(
          1, opts_.max_in_flight))) {
  if (!provider_) throw Error(ErrorCode::ConfigError, "gateway has no provider");
  if (opts_.max_attempts < 1) {
    throw Error(ErrorCode::ConfigError, "max_attempts must be at least 1");
  }
  if (!opts_.sleep) {
    opts_.sleep = [](std::chrono::nanoseconds d) {
      std::this_thread::sleep_for(d);
    };
  }
  if (opts_.cache_dir) cache_ = std::make_unique<DiskCache>(*opts_.cache_dir);
}

std::string Gateway::call_with_retry(const CompletionRequest& r,
                                     int& attempts) {
  auto backoff = std::chrono::duration<double, std::milli>(opts_.initial_backoff);
  for (attempts = 1;; ++attempts) {
    limiter_.acquire();
    slots_.acquire();
    const std::size_t now = ++in_flight_;
    std::size_t prev = max_observed_.load();
    while (now > prev && !max_observed_.compare_exchange_weak(prev, now)) {
    }
    ++provider_calls_;
    try {
      std::string text = provider_->complete(r);
      --in_flight_;
      slots_.release();
      return text;
    } catch (const Error& e) {
      --in_flight_;
      slots_.release();
      if (!is_retryable(e.code()) || attempts >= opts_.max_attempts) throw;
    } catch (...) {
      --in_flight_;
      slots_.release();
      throw;
    }
    opts_.sleep(std::chrono::duration_cast<std::chrono::nanoseconds>(backoff));
    backoff *= opts_.backoff_factor;
  }
}

CompletionResult Gateway::complete(const CompletionRequest& r) {
  if (r.prompt.empty()) {
    throw Error(ErrorCode::InvalidArgument, "completion prompt is empty");
  }
  if (!(r.temperature >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "temperature must be >= 0");
  }
  const auto start = std::chrono::steady_clock::now();
  CompletionResult result;
  const std::string key = cache_key(r);
  if (cache_) {
    if (auto hit = cache_->get(key)) {
      ++cache_hits_;
      result.text = std::move(*hit);
      result.cached = true;
      result.attempt_count = 1;
      return result;
    }
  }
  result.text = call_with_retry(r, result.attempt_count);
  if (cache_) {
    cache_->put(key, result.text,
                {{"model_id", r.model_id},
                 {"prompt_version", r.prompt_version},
                 {"temperature", r.temperature},
                 {"tag", r.tag},
                 {"provider", provider_->name()}});
  }
  result.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);
  return result;
}

MockProvider& MockProvider::when_contains(std::string needle,
                                          std::string reply) {
  return when_contains(std::move(needle), {Step::reply(std::move(reply))});
}

MockProvider& MockProvider::when_contains(std::string needle,
                                          std::vector<Step> steps) {
  return when(
      [needle = std::move(needle)](std::string_view p) {
        return p.find(needle) != std::string_view::npos;
      },
      std::move(steps));
}

MockProvider& MockProvider::when_contains(std::string needle, Responder r) {
  return when(
      [needle = std::move(needle)](std::string_view p) {
        return p.find(needle) != std::string_view::npos;
      },
      std::move(r));
}

MockProvider& MockProvider::when_regex(const std::string& pattern,
                                       std::string reply) {
  std::regex re(pattern);
  return when(
      [re = std::move(re)](std::string_view p) {
        return std::regex_search(p.begin(), p.end(), re);
      },
      {Step::reply(std::move(reply))});
}

MockProvider& MockProvider::when(Matcher m, Responder r) {
  rules_.push_back({std::move(m), std::move(r), {}, 0});
  return *this;
}

MockProvider& MockProvider::when(Matcher m, std::vector<Step> steps) {
  if (steps.empty()) {
    throw Error(ErrorCode::InvalidArgument, "mock rule needs at least one step");
  }
  rules_.push_back({std::move(m), {}, std::move(steps), 0});
  return *this;
}

MockProvider& MockProvider::otherwise(Responder r) {
  return when([](std::string_view) { return true; }, std::move(r));
}

MockProvider& MockProvider::otherwise(std::string reply) {
  return when([](std::string_view) { return true; },
              {Step::reply(std::move(reply))});
}

MockProvider& MockProvider::otherwise(std::vector<Step> steps) {
  return when([](std::string_view) { return true; }, std::move(steps));
}

std::string MockProvider::complete(const CompletionRequest& r) {
  ++calls_;
  const std::size_t now = ++active_;
  std::size_t prev = max_concurrent_.load();
  while (now > prev && !max_concurrent_.compare_exchange_weak(prev, now)) {
  }
  struct Leave {
    std::atomic<std::size_t>& a;
    ~Leave() { --a; }
  } leave{active_};
  if (delay_.count() > 0) std::this_thread::sleep_for(delay_);

  Rule* rule = nullptr;
  Step step;
  {
    std::lock_guard lock(mu_);
    for (auto& candidate : rules_) {
      if (candidate.match(r.prompt)) {
        rule = &candidate;
        break;
      }
    }
    if (rule && !rule->respond) {
      step = rule->steps[std::min(rule->next_step, rule->steps.size() - 1)];
      ++rule->next_step;
    }
  }
  if (!rule) {
    throw Error(ErrorCode::UnscriptedPrompt,
                fmt::format("no mock rule matches prompt starting '{}'",
                            r.prompt.substr(0, 60)));
  }
  if (rule->respond) return rule->respond(r);
  if (step.error) {
    throw Error(*step.error,
                fmt::format("scripted {} from mock", to_string(*step.error)));
  }
  return step.text;
}

}  // namespace dialogic
