#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dialogic/corpus.hpp"
#include "dialogic/gateway.hpp"
#include "dialogic/runlog.hpp"
#include "dialogic/segmentation.hpp"

namespace dialogic {

enum class QuestionType { How, What, When, Where, Why, Who, Other };

inline constexpr std::size_t kQuestionTypeCount = 7;
inline constexpr std::array<QuestionType, kQuestionTypeCount> kQuestionTypes = {
    QuestionType::How,  QuestionType::What, QuestionType::When,
    QuestionType::Where, QuestionType::Why, QuestionType::Who,
    QuestionType::Other};

std::string_view to_string(QuestionType t);

// Case-insensitive; accepts a trailing "Question" ("Why Question") and
// surrounding quotes or punctuation. Anything else is nullopt.
std::optional<QuestionType> parse_question_type(std::string_view s);

enum class ClassSource { Rule, Llm };
std::string_view to_string(ClassSource s);

// First standalone wh-word in the first clause (text up to the first comma
// or semicolon); who/whom/whose all count as Who. No wh-word means Other.
QuestionType classify_rule(std::string_view question);

// One interviewer question: the joined text of a pair's question turns.
struct QuestionItem {
  std::string testimony_id;
  std::size_t pair_index = 0;
  std::optional<std::size_t> segment;  // absent when the testimony is too short
  std::string text;
};

// Questions in document order from the unmerged pairs of every testimony.
// Segments are assigned over those pairs with the given strategy and k.
std::vector<QuestionItem> extract_questions(
    const Corpus& corpus, std::size_t k,
    SegmentStrategy strategy = SegmentStrategy::PairCount);

struct ClassifiedQuestion {
  std::string testimony_id;
  std::size_t pair_index = 0;
  std::optional<std::size_t> segment;
  std::string text;
  QuestionType qtype = QuestionType::Other;
  std::optional<std::string> explanation;  // set iff source == Llm
  ClassSource source = ClassSource::Rule;
};

struct LlmSettings {
  std::string model_id;
  int max_output = 256;
};

// Parses a Prompt C reply. Tolerates code fences and prose around the JSON
// object; returns nullopt when no valid type can be read.
struct ParsedTypeReply {
  QuestionType qtype;
  std::string explanation;
};
std::optional<ParsedTypeReply> parse_type_reply(std::string_view reply);

// Renders the question-type prompt, asks the gateway, and re-asks once on an
// unusable reply. After that the rule decides and a ParseFallback event is
// logged. Gateway errors propagate.
ClassifiedQuestion classify_llm(const QuestionItem& q, Gateway& gateway,
                                const LlmSettings& settings,
                                RunLog* log = nullptr);

// Classifies all items with `gateway` (or the rule when null), in parallel,
// and returns them ordered by (testimony_id, pair_index).
std::vector<ClassifiedQuestion> classify_all(
    const std::vector<QuestionItem>& items, Gateway* gateway,
    const LlmSettings& settings, std::size_t workers, RunLog* log = nullptr);

using TypeShares = std::array<double, kQuestionTypeCount>;

struct TypeDistribution {
  std::size_t total = 0;
  std::optional<TypeShares> overall;                  // null when total == 0
  std::vector<std::size_t> segment_totals;            // length k
  std::vector<std::optional<TypeShares>> per_segment;  // null rows are empty
};

// k = 0 skips the per-segment breakdown.
TypeDistribution type_distribution(const std::vector<ClassifiedQuestion>& qs,
                                   std::size_t k);

struct Shortfall {
  QuestionType qtype;
  std::size_t requested = 0;
  std::size_t available = 0;
};

struct ValidationSample {
  std::vector<ClassifiedQuestion> rows;  // grouped by type, then document order
  std::vector<Shortfall> shortfalls;
};

ValidationSample validation_sample(const std::vector<ClassifiedQuestion>& qs,
                                   std::size_t n_per_type, std::uint64_t seed);

// Columns: qtype,testimony_id,pair_index,segment,source,question,review
std::string validation_csv(const ValidationSample& s);

std::string classified_jsonl(const std::vector<ClassifiedQuestion>& qs);
std::vector<ClassifiedQuestion> classified_from_jsonl(std::string_view text);

// Columns: scope,segment,n,How,What,When,Where,Why,Who,Other
std::string distribution_csv(const TypeDistribution& d);
nlohmann::json to_json(const TypeDistribution& d);

}  // namespace dialogic
