#include "dialogic/segmentation.hpp"

#include <cstdint>
#include <optional>

#include <fmt/format.h>

#include "dialogic/error.hpp"
#include "dialogic/text.hpp"

namespace dialogic {

using nlohmann::json;

std::string_view to_string(SegmentStrategy s) {
  return s == SegmentStrategy::PairCount ? "pair_count" : "cumulative_words";
}

SegmentStrategy strategy_from_string(std::string_view s) {
  const std::string lower = text::to_lower(s);
  if (lower == "pair_count" || lower == "pairs" || lower == "paircount") {
    return SegmentStrategy::PairCount;
  }
  if (lower == "cumulative_words" || lower == "words" ||
      lower == "cumulativewords") {
    return SegmentStrategy::CumulativeWords;
  }
  throw Error(ErrorCode::InvalidArgument,
              fmt::format("unknown segmentation strategy '{}'", s));
}

std::vector<QAPair> pair_qa(const Testimony& testimony) {
  std::vector<QAPair> pairs;
  std::optional<QAPair> cur;
  bool answering = false;
  for (const auto& u : testimony.utterances) {
    const std::size_t i = u.index;
    switch (u.role) {
      case SpeakerRole::Interviewer:
        if (cur && answering) {
          pairs.push_back(std::move(*cur));
          cur.reset();
        }
        if (!cur) {
          cur = QAPair{};
          cur->first_turn = i;
          answering = false;
        }
        cur->question_turns.push_back(i);
        cur->question_words += u.word_count;
        break;
      case SpeakerRole::Survivor:
        if (!cur) {
          cur = QAPair{};
          cur->first_turn = i;
        }
        cur->answer_turns.push_back(i);
        cur->answer_words += u.word_count;
        answering = true;
        break;
      case SpeakerRole::Other:
        if (!cur) {
          cur = QAPair{};
          cur->first_turn = i;
          answering = false;
        }
        break;
    }
    cur->last_turn = i;
  }
  if (cur) pairs.push_back(std::move(*cur));
  return pairs;
}

namespace {

// `later` absorbs `earlier`; both are adjacent and earlier precedes later.
QAPair fold(const QAPair& earlier, const QAPair& later) {
  QAPair m;
  m.first_turn = earlier.first_turn;
  m.last_turn = later.last_turn;
  m.question_turns = earlier.question_turns;
  m.question_turns.insert(m.question_turns.end(), later.question_turns.begin(),
                          later.question_turns.end());
  m.answer_turns = earlier.answer_turns;
  m.answer_turns.insert(m.answer_turns.end(), later.answer_turns.begin(),
                        later.answer_turns.end());
  m.question_words = earlier.question_words + later.question_words;
  m.answer_words = earlier.answer_words + later.answer_words;
  m.merged_from = earlier.merged_from + later.merged_from;
  return m;
}

}  // namespace

std::vector<QAPair> merge_short_pairs(std::vector<QAPair> pairs,
                                      std::size_t min_words) {
  std::size_t i = 0;
  while (pairs.size() > 1 && i < pairs.size()) {
    if (pairs[i].total_words() >= min_words) {
      ++i;
      continue;
    }
    if (i + 1 < pairs.size()) {
      pairs[i + 1] = fold(pairs[i], pairs[i + 1]);
      pairs.erase(pairs.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      pairs[i - 1] = fold(pairs[i - 1], pairs[i]);
      pairs.pop_back();
      --i;
    }
  }
  return pairs;
}

std::vector<SegmentView> segment_by_pairs(const std::vector<QAPair>& pairs,
                                          std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  const std::size_t n = pairs.size();
  if (n < k) {
    throw Error(ErrorCode::KTooLarge,
                fmt::format("{} pairs cannot fill {} segments", n, k));
  }
  const std::size_t base = n / k;
  const std::size_t rem = n % k;
  std::vector<SegmentView> out;
  out.reserve(k);
  std::size_t pos = 0;
  for (std::size_t s = 0; s < k; ++s) {
    SegmentView v;
    v.strategy = SegmentStrategy::PairCount;
    v.k = k;
    v.seg_index = s;
    v.begin = pos;
    v.end = pos + base + (s < rem ? 1 : 0);
    for (std::size_t p = v.begin; p < v.end; ++p) {
      v.seg_words += pairs[p].total_words();
    }
    pos = v.end;
    out.push_back(v);
  }
  return out;
}

std::vector<SegmentView> segment_by_words(const Testimony& testimony,
                                          std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  const std::size_t n = testimony.utterances.size();
  const std::uint64_t total = testimony.total_words;
  if (n < k || total < k) {
    throw Error(ErrorCode::KTooLarge,
                fmt::format("{} utterances / {} words cannot fill {} segments",
                            n, total, k));
  }
  std::vector<SegmentView> out(k);
  for (std::size_t s = 0; s < k; ++s) {
    out[s].strategy = SegmentStrategy::CumulativeWords;
    out[s].k = k;
    out[s].seg_index = s;
  }
  // An utterance with cumulative midpoint m lands in segment s where
  // m is in (s*W/k, (s+1)*W/k]. Doubling keeps everything integral.
  std::vector<std::size_t> seg_of(n);
  std::uint64_t before = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t w = testimony.utterances[i].word_count;
    const std::uint64_t num = (2 * before + w) * k;
    const std::uint64_t den = 2 * total;
    std::uint64_t s = (num + den - 1) / den;
    s = s == 0 ? 0 : s - 1;
    if (s >= k) s = k - 1;
    seg_of[i] = static_cast<std::size_t>(s);
    before += w;
  }
  std::size_t i = 0;
  for (std::size_t s = 0; s < k; ++s) {
    out[s].begin = i;
    while (i < n && seg_of[i] == s) {
      out[s].seg_words += testimony.utterances[i].word_count;
      ++i;
    }
    out[s].end = i;
    out[s].empty_flag = out[s].begin == out[s].end;
  }
  return out;
}

std::vector<std::size_t> utterance_segments(
    const std::vector<SegmentView>& segments, std::size_t utterance_count) {
  std::vector<std::size_t> seg(utterance_count, 0);
  for (const auto& v : segments) {
    for (std::size_t i = v.begin; i < v.end && i < utterance_count; ++i) {
      seg[i] = v.seg_index;
    }
  }
  return seg;
}

json to_json(const std::vector<SegmentView>& segments) {
  json j;
  j["strategy"] = std::string(
      to_string(segments.empty() ? SegmentStrategy::PairCount
                                 : segments.front().strategy));
  j["k"] = segments.size();
  json segs = json::array();
  for (const auto& v : segments) {
    json s;
    if (v.strategy == SegmentStrategy::PairCount) {
      json members = json::array();
      for (std::size_t p = v.begin; p < v.end; ++p) members.push_back(p);
      s["members"] = std::move(members);
    } else {
      s["span"] = {v.begin, v.end};
      s["empty"] = v.empty_flag;
    }
    s["seg_words"] = v.seg_words;
    segs.push_back(std::move(s));
  }
  j["segments"] = std::move(segs);
  return j;
}

}  // namespace dialogic
