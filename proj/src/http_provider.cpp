#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include <fmt/format.h>
#include <json.hpp>

#include "dialogic/gateway.hpp"

namespace dialogic {

using nlohmann::json;

namespace {

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? v : "";
}

}  // namespace

HttpProviderConfig HttpProviderConfig::from_env() {
  HttpProviderConfig c;
  c.endpoint = env_or_empty("DIALOGIC_LLM_ENDPOINT");
  c.api_key = env_or_empty("DIALOGIC_LLM_API_KEY");
  c.model_id = env_or_empty("DIALOGIC_LLM_MODEL");
  if (c.endpoint.empty()) {
    throw Error(ErrorCode::ConfigError, "DIALOGIC_LLM_ENDPOINT is not set");
  }
  return c;
}

HttpProvider::HttpProvider(HttpProviderConfig config)
    : config_(std::move(config)) {
  const auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::ConfigError,
                fmt::format("endpoint '{}' has no scheme", config_.endpoint));
  }
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  base_ = config_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/"
                                          : config_.endpoint.substr(path_start);
}

std::string HttpProvider::complete(const CompletionRequest& r) {
  const std::string model = r.model_id.empty() ? config_.model_id : r.model_id;
  const json body = {
      {"model", model},
      {"messages", json::array({{{"role", "user"}, {"content", r.prompt}}})},
      {"temperature", r.temperature},
      {"max_tokens", r.max_output}};

  httplib::Client client(base_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }
  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::Read || err == httplib::Error::Write ||
        err == httplib::Error::ConnectionTimeout) {
      throw Error(ErrorCode::Timeout,
                  fmt::format("request to {} timed out ({})", base_,
                              httplib::to_string(err)));
    }
    throw Error(ErrorCode::ProviderError,
                fmt::format("request to {} failed: {}", base_,
                            httplib::to_string(err)));
  }
  const int status = res->status;
  if (status == 401 || status == 403) {
    throw Error(ErrorCode::AuthError,
                fmt::format("provider rejected credentials (HTTP {})", status));
  }
  if (status == 429) {
    throw Error(ErrorCode::RateLimited, "provider rate limit (HTTP 429)");
  }
  if (status == 408 || status == 504) {
    throw Error(ErrorCode::Timeout, fmt::format("provider timeout (HTTP {})", status));
  }
  if (status < 200 || status >= 300) {
    throw Error(ErrorCode::ProviderError,
                fmt::format("provider returned HTTP {}", status));
  }
  try {
    const json reply = json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProviderError,
                fmt::format("unexpected completion payload: {}", e.what()));
  }
}

}  // namespace dialogic
