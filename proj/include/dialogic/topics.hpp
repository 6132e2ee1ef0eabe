#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "dialogic/classify.hpp"
#include "dialogic/corpus.hpp"
#include "dialogic/gateway.hpp"
#include "dialogic/runlog.hpp"
#include "dialogic/segmentation.hpp"

namespace dialogic {

inline constexpr std::size_t kMaxTitleWords = 8;
inline constexpr std::size_t kDegradedTitleWords = 6;
inline constexpr std::size_t kTitleSetCap = 400;

enum class LabelSource { Llm, Degraded };
std::string_view to_string(LabelSource s);

struct TopicLabel {
  std::string testimony_id;
  std::size_t pair_index = 0;
  std::string title;
  std::string reason;
  LabelSource source = LabelSource::Llm;
};

// The exchange as the naming prompt expects it: one line per turn,
// "INT: ..." for interviewer turns and "SUBJECT: ..." for survivor turns.
std::string pair_text(const Testimony& t, const QAPair& pair);

struct ParsedTitle {
  std::string title;
  std::string reason;
};
std::optional<ParsedTitle> parse_title_reply(std::string_view reply);

// First kMaxTitleWords words, whitespace normalized.
std::string clamp_title(std::string_view title);

// Stage one. On an unparseable reply the request is repeated once; after
// that the title is the first words of the answer and source is Degraded.
TopicLabel name_topic(const Testimony& t, const QAPair& pair,
                      std::size_t pair_index, Gateway& gateway,
                      const LlmSettings& settings, RunLog* log = nullptr);

// "- title (×n)" per unique title in first-appearance order. Beyond `cap`
// unique titles, only the most frequent `cap` are kept (ties by first
// appearance), still listed in first-appearance order.
std::string render_title_set(const std::vector<std::string>& titles,
                             std::size_t cap = kTitleSetCap);

// "1. <title>" ... "n. <title>" on separate lines.
std::string numbered_format(std::size_t n);

// Items of a numbered list. The first item may lack its number because the
// prompt itself ends with "1.".
std::vector<std::string> parse_numbered_list(std::string_view reply);

bool has_conjunction(std::string_view title);

// Stage two. Returns exactly `num_topics` distinct titles or throws
// InsufficientTitles after one re-request.
std::vector<std::string> common_topics(const std::vector<std::string>& titles,
                                       std::size_t num_topics,
                                       Gateway& gateway,
                                       const LlmSettings& settings,
                                       RunLog* log = nullptr,
                                       std::size_t cap = kTitleSetCap);

// Jaccard similarity of the two titles' content-word sets.
double title_jaccard(std::string_view a, std::string_view b);

using TitleMatcher =
    std::function<bool(std::string_view label, std::string_view topic)>;
TitleMatcher jaccard_matcher(double threshold = 0.5);

// Fraction of `segment_titles` the matcher assigns to `topic`.
double coverage_score(const std::vector<std::string>& segment_titles,
                      std::string_view topic, const TitleMatcher& matcher);

struct TopicCell {
  std::string title;
  double coverage = 0.0;
  std::size_t group = 0;
};

struct SegmentTopics {
  std::size_t seg_index = 0;
  std::size_t label_count = 0;
  std::vector<TopicCell> topics;
};

struct TopicTable {
  std::string corpus_name;
  std::size_t k = 0;
  std::size_t top_k = 0;
  std::string model_id;
  std::uint64_t seed = 0;
  std::vector<std::string> sample_ids;
  std::vector<SegmentTopics> rows;
  std::map<std::string, std::size_t> topic_groups;
  std::size_t degraded_labels = 0;
};

// Stage-one labels persisted as JSON lines keyed by (testimony_id,
// pair_index, prompt_version, model_id). The file is rewritten sorted.
class LabelStore {
 public:
  using Key = std::tuple<std::string, std::size_t, std::string, std::string>;

  LabelStore() = default;
  explicit LabelStore(std::filesystem::path file);

  std::optional<TopicLabel> find(const Key& key) const;
  void put(const Key& key, const TopicLabel& label);
  void save() const;
  std::size_t size() const { return labels_.size(); }
  std::string to_jsonl() const;

 private:
  std::optional<std::filesystem::path> file_;
  std::map<Key, TopicLabel> labels_;
  mutable std::mutex mu_;
};

struct TopicOptions {
  std::size_t k = 15;
  std::size_t top_k = 3;
  std::size_t min_words = kDefaultMergeMinWords;
  std::size_t sample_size = 50;  // 0 means every testimony
  std::uint64_t seed = 0;
  double match_threshold = 0.5;
  std::size_t title_cap = kTitleSetCap;
  std::size_t workers = 4;
  LlmSettings llm;
};

// Seeded subset of testimony ids, returned sorted.
std::vector<std::string> sample_testimony_ids(const Corpus& corpus,
                                              std::size_t n,
                                              std::uint64_t seed);

TopicTable build_topic_table(const Corpus& corpus, const TopicOptions& opts,
                             Gateway& gateway, LabelStore* store = nullptr,
                             RunLog* log = nullptr);

// Union of titles whose content words overlap by at least `threshold`,
// closed transitively. Ids follow first appearance in row-major order.
std::map<std::string, std::size_t> assign_topic_groups(
    const std::vector<SegmentTopics>& rows, double threshold);

nlohmann::json to_json(const TopicTable& t);
std::string topic_table_csv(const TopicTable& t);
std::string topic_table_markdown(const TopicTable& t);
std::string topic_table_html(const TopicTable& t);

}  // namespace dialogic
