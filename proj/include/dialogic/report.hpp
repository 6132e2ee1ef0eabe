#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "dialogic/metrics.hpp"
#include "dialogic/segmentation.hpp"

namespace dialogic {

struct GatewaySettings {
  std::string provider = "offline";  // offline | http | none
  std::string model_id = "offline-mock";
  std::optional<std::filesystem::path> cache_dir;  // relative to output_dir
  std::size_t max_in_flight = 4;
  double requests_per_second = 0.0;
  int max_attempts = 3;
};

struct RunConfig {
  std::optional<std::filesystem::path> corpus_a;  // manifest paths
  std::optional<std::filesystem::path> corpus_b;
  std::optional<std::filesystem::path> roles;     // role map JSON
  std::size_t k = 15;
  SegmentStrategy strategy = SegmentStrategy::PairCount;
  std::size_t min_words = kDefaultMergeMinWords;
  Aggregation aggregation = Aggregation::Pooled;
  TestVariant test = TestVariant::Welch;
  double alpha = kDefaultAlpha;
  std::size_t top_k = 3;
  std::size_t sample_size = 50;
  std::size_t validation_per_type = 50;
  double match_threshold = 0.5;
  GatewaySettings gateway;
  std::filesystem::path output_dir = "out";
  std::optional<std::uint64_t> seed;
  std::size_t workers = 4;
  std::string profile = "structured_like";  // preset name or profile JSON path
  std::size_t n = 100;

  // Throws ConfigError.
  void validate() const;
};

// Unknown keys are a ConfigError so typos do not pass silently.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);

// Each command writes its files under output_dir and returns a summary
// listing them.
nlohmann::json cmd_ingest(const RunConfig& c);
nlohmann::json cmd_compare(const RunConfig& c);
nlohmann::json cmd_classify(const RunConfig& c);
nlohmann::json cmd_topics(const RunConfig& c);
nlohmann::json cmd_synth(const RunConfig& c);

}  // namespace dialogic
