#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialogic/corpus.hpp"
#include "dialogic/segmentation.hpp"

namespace dialogic {

enum class Aggregation {
  Pooled,            // every pair in the segment, across testimonies
  PerTestimonyMean,  // one value per testimony: its mean within the segment
};

std::string_view to_string(Aggregation a);
Aggregation aggregation_from_string(std::string_view s);

enum class TestVariant { Welch, Pooled };

std::string_view to_string(TestVariant v);
TestVariant test_variant_from_string(std::string_view s);

struct SegmentStats {
  std::size_t n = 0;
  std::optional<double> mean;  // null when n == 0
  double sd = 0.0;             // sample SD; 0 when n <= 1
  std::vector<double> values;
};

struct SegmentSeries {
  std::string metric_name;
  SegmentStrategy strategy = SegmentStrategy::PairCount;
  std::size_t k = 0;
  Aggregation aggregation = Aggregation::Pooled;
  std::vector<SegmentStats> segments;
  std::size_t testimonies_used = 0;
  std::size_t testimonies_skipped = 0;  // too short to split into k segments
};

struct MetricOptions {
  std::size_t k = 15;
  SegmentStrategy strategy = SegmentStrategy::PairCount;
  std::size_t min_words = kDefaultMergeMinWords;
  Aggregation aggregation = Aggregation::Pooled;
};

// Merged pairs of one testimony and the segment each pair falls in.
// `segment_of_pair` is empty when the testimony could not be segmented.
struct SegmentedPairs {
  std::vector<QAPair> pairs;
  std::vector<std::size_t> segment_of_pair;

  bool usable() const { return !pairs.empty() && !segment_of_pair.empty(); }
};

// PairCount segments the merged pair list; CumulativeWords segments the
// utterances and assigns each pair to the segment of its first turn.
SegmentedPairs segment_pairs(const Testimony& t, std::vector<QAPair> pairs,
                             std::size_t k, SegmentStrategy strategy);

SegmentStats summarize(std::vector<double> values);

SegmentSeries answer_length_series(const Corpus& corpus,
                                   const MetricOptions& opts);

// Question-less pairs are left out of the sample.
SegmentSeries question_length_series(const Corpus& corpus,
                                     const MetricOptions& opts);

struct InterventionSeries {
  SegmentSeries density;         // interviewer turn starts per 1000 words
  SegmentSeries survivor_ratio;  // survivor words / segment words
};

// Always uses CumulativeWords segmentation.
InterventionSeries intervention_density_series(const Corpus& corpus,
                                               std::size_t k);

struct SegmentComparison {
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  std::optional<double> mean_a;
  std::optional<double> mean_b;
  double sd_a = 0.0;
  double sd_b = 0.0;
  bool testable = false;
  std::optional<double> t_stat;
  std::optional<double> df;
  std::optional<double> p_value;
  bool significant = false;
};

struct ComparisonReport {
  std::string metric_name;
  SegmentStrategy strategy = SegmentStrategy::PairCount;
  std::size_t k = 0;
  double alpha = 0.05;
  TestVariant variant = TestVariant::Welch;
  std::string label_a;
  std::string label_b;
  std::vector<SegmentComparison> segments;
  std::optional<double> overall_mean_a;
  std::optional<double> overall_mean_b;

  std::vector<std::size_t> significant_segments() const;
};

inline constexpr double kDefaultAlpha = 0.05;

ComparisonReport compare_series(const SegmentSeries& a, const SegmentSeries& b,
                                double alpha = kDefaultAlpha,
                                TestVariant variant = TestVariant::Welch);

std::string series_csv(const SegmentSeries& s);
nlohmann::json to_json(const SegmentSeries& s);
std::string report_csv(const ComparisonReport& r);
nlohmann::json to_json(const ComparisonReport& r);

}  // namespace dialogic
