#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialogic/classify.hpp"
#include "dialogic/corpus.hpp"

namespace dialogic {

// Topics the generator can plant. Answers mention keywords of their pair's
// topic so that a keyword-rule labeler recovers the title.
struct TopicSpec {
  std::string title;
  std::vector<std::string> keywords;
};
const std::vector<TopicSpec>& topic_catalog();
inline constexpr const char* kFallbackTopicTitle = "General Recollections";

struct LengthParams {
  double mean = 0.0;
  double sd = 0.0;
};

using TypeWeights = std::array<double, kQuestionTypeCount>;  // kQuestionTypes order
using TopicPool = std::map<std::string, double>;             // title -> weight

struct WeightedName {
  std::string name;
  double weight = 0.0;
};

struct StyleProfile {
  std::string name;
  std::string id_prefix;
  std::string archive_id;
  double mean_total_words = 0.0;
  double sd_total_words = 0.0;
  // One entry per generation segment; all curves share the same length.
  std::vector<LengthParams> answer_length_curve;
  std::vector<LengthParams> question_length_curve;
  std::vector<TypeWeights> qtype_weights_curve;
  std::vector<TopicPool> topic_script;
  // Interviewer turn starts per 1000 words. Rates above what one question
  // per pair gives are reached with short co-interviewer follow-ups.
  std::vector<double> intervention_rate_curve;
  std::vector<WeightedName> interviewers;
  double second_interviewer_share = 0.0;
  int first_year = 1990;
  int last_year = 1999;
  std::uint64_t seed = 0;

  std::size_t k() const { return answer_length_curve.size(); }
  // Throws InvalidProfile.
  void validate() const;
};

nlohmann::json to_json(const StyleProfile& p);
StyleProfile profile_from_json(const nlohmann::json& j);

struct PresetProfiles {
  StyleProfile structured_like;
  StyleProfile freeform_like;
};
PresetProfiles preset_profiles();

struct TruePair {
  std::size_t pair_index = 0;
  std::size_t segment = 0;
  QuestionType qtype = QuestionType::Other;
  std::string topic;
  std::size_t question_words = 0;
  std::size_t answer_words = 0;
  std::size_t followups = 0;
};

struct TestimonyTruth {
  std::string testimony_id;
  double target_words = 0.0;
  std::vector<double> segment_budgets;  // cumulative word targets
  std::vector<double> followup_rates;   // extra interviewer turns per pair
  std::vector<TruePair> pairs;
};

struct GroundTruth {
  std::string profile_name;
  std::vector<TestimonyTruth> testimonies;
};

std::string ground_truth_jsonl(const GroundTruth& g);

struct SynthResult {
  Corpus corpus;
  GroundTruth truth;
};

SynthResult generate_corpus(const StyleProfile& profile,
                            std::size_t n_testimonies, std::size_t workers = 4);

}  // namespace dialogic
