#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dialogic/corpus.hpp"

namespace dialogic {

// One interviewer question block and the survivor answer that follows.
// [first_turn, last_turn] is the contiguous span of utterances the pair
// owns; Other-role turns inside the span belong to neither list.
struct QAPair {
  std::size_t first_turn = 0;
  std::size_t last_turn = 0;
  std::vector<std::size_t> question_turns;
  std::vector<std::size_t> answer_turns;
  std::size_t question_words = 0;
  std::size_t answer_words = 0;
  std::size_t merged_from = 1;

  std::size_t total_words() const { return question_words + answer_words; }
  bool has_question() const { return !question_turns.empty(); }

  bool operator==(const QAPair&) const = default;
};

std::vector<QAPair> pair_qa(const Testimony& testimony);

inline constexpr std::size_t kDefaultMergeMinWords = 10;

// Folds each pair shorter than `min_words` into its successor (or into its
// predecessor when it is last), scanning left to right.
std::vector<QAPair> merge_short_pairs(std::vector<QAPair> pairs,
                                      std::size_t min_words);

enum class SegmentStrategy { PairCount, CumulativeWords };

std::string_view to_string(SegmentStrategy s);
SegmentStrategy strategy_from_string(std::string_view s);

struct SegmentView {
  SegmentStrategy strategy = SegmentStrategy::PairCount;
  std::size_t k = 1;
  std::size_t seg_index = 0;
  // Half-open range: pair indices for PairCount, utterance indices for
  // CumulativeWords.
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t seg_words = 0;
  bool empty_flag = false;

  std::size_t size() const { return end - begin; }
  bool operator==(const SegmentView&) const = default;
};

std::vector<SegmentView> segment_by_pairs(const std::vector<QAPair>& pairs,
                                          std::size_t k);

std::vector<SegmentView> segment_by_words(const Testimony& testimony,
                                          std::size_t k);

// Segment index of each utterance for a CumulativeWords segmentation.
std::vector<std::size_t> utterance_segments(
    const std::vector<SegmentView>& segments, std::size_t utterance_count);

nlohmann::json to_json(const std::vector<SegmentView>& segments);

}  // namespace dialogic
