#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "doctest.h"
#include "dialogic/classify.hpp"
#include "dialogic/error.hpp"
#include "dialogic/offline.hpp"
#include "dialogic/segmentation.hpp"
#include "dialogic/synth.hpp"
#include "dialogic/text.hpp"
#include "dialogic/topics.hpp"

using namespace dialogic;

namespace {

StyleProfile flat_profile(std::size_t k, double answer_mean, double answer_sd) {
  StyleProfile p;
  p.name = "flat";
  p.id_prefix = "FL";
  p.archive_id = "flat";
  p.mean_total_words = 3000;
  p.sd_total_words = 500;
  for (std::size_t s = 0; s < k; ++s) {
    p.answer_length_curve.push_back({answer_mean, answer_sd});
    p.question_length_curve.push_back({6, 0});
    p.qtype_weights_curve.push_back({0.1, 0.3, 0.1, 0.1, 0.05, 0.15, 0.2});
    p.topic_script.push_back({{"Ghetto Life", 0.5}, {"Camp Arrival", 0.5}});
    p.intervention_rate_curve.push_back(0.0);
  }
  p.interviewers = {{"Interviewer X", 1.0}};
  p.seed = 11;
  return p;
}

std::string dump_corpus(const SynthResult& r) {
  std::string out;
  for (const auto& t : r.corpus.testimonies) out += to_json(t).dump() + "\n";
  return out + ground_truth_jsonl(r.truth);
}

double mean_total(const Corpus& c) {
  double sum = 0;
  for (const auto& t : c.testimonies) sum += static_cast<double>(t.total_words);
  return sum / static_cast<double>(c.testimonies.size());
}

}  // namespace

TEST_CASE("zero-variance answers have exactly the mean length") {
  const auto r = generate_corpus(flat_profile(5, 20, 0), 4);
  std::size_t answers = 0;
  for (const auto& t : r.corpus.testimonies) {
    for (const auto& p : pair_qa(t)) {
      CHECK(p.answer_words == 20);
      CHECK(p.question_words == 6);
      ++answers;
    }
  }
  CHECK(answers > 100);
}

TEST_CASE("generation is deterministic across runs and worker counts") {
  const auto presets = preset_profiles();
  const auto a = dump_corpus(generate_corpus(presets.freeform_like, 12, 1));
  const auto b = dump_corpus(generate_corpus(presets.freeform_like, 12, 4));
  CHECK(a == b);
  auto reseeded = presets.freeform_like;
  reseeded.seed += 1;
  CHECK(a != dump_corpus(generate_corpus(reseeded, 12, 4)));
}

TEST_CASE("preset totals reproduce the archive means and their ratio") {
  const auto presets = preset_profiles();
  const auto st = generate_corpus(presets.structured_like, 100);
  const auto ff = generate_corpus(presets.freeform_like, 100);
  const double ms = mean_total(st.corpus);
  const double mf = mean_total(ff.corpus);
  MESSAGE(fmt::format("structured {:.1f} freeform {:.1f} ratio {:.4f}", ms, mf, ms / mf));
  CHECK(std::abs(ms / 23396.0 - 1.0) <= 0.02);
  CHECK(std::abs(mf / 13622.0 - 1.0) <= 0.02);
  CHECK(std::abs(ms / mf - 23396.0 / 13622.0) <= 0.05);
  for (const auto* r : {&st, &ff}) {
    const auto& p = r == &st ? presets.structured_like : presets.freeform_like;
    for (const auto& t : r->corpus.testimonies) {
      CHECK(static_cast<double>(t.total_words) <= p.mean_total_words + 4 * p.sd_total_words);
      CHECK(static_cast<double>(t.total_words) >= p.mean_total_words - 4 * p.sd_total_words);
    }
  }
}

TEST_CASE("ground truth covers every pair and matches the question text") {
  const auto presets = preset_profiles();
  const auto r = generate_corpus(presets.structured_like, 6);
  REQUIRE(r.truth.testimonies.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    const auto& t = r.corpus.testimonies[i];
    const auto& truth = r.truth.testimonies[i];
    CHECK(truth.testimony_id == t.id);
    const auto pairs = pair_qa(t);
    REQUIRE(pairs.size() == truth.pairs.size());
    std::size_t segment = 0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      std::string q;
      for (auto u : pairs[p].question_turns) q += t.utterances[u].text + " ";
      CHECK(classify_rule(q) == truth.pairs[p].qtype);
      CHECK(pairs[p].answer_words == truth.pairs[p].answer_words);
      CHECK(pairs[p].question_turns.size() == 1 + truth.pairs[p].followups);
      CHECK(truth.pairs[p].segment >= segment);
      segment = truth.pairs[p].segment;
    }
    CHECK(segment == presets.structured_like.k() - 1);
  }
  const auto jsonl = ground_truth_jsonl(r.truth);
  CHECK(text::split_lines(jsonl).size() == 6);
}

TEST_CASE("ground-truth qtype marginals follow the weights") {
  auto p = flat_profile(3, 4, 0);
  p.question_length_curve.assign(3, {2, 0});
  p.mean_total_words = 200000;
  p.sd_total_words = 0;
  p.qtype_weights_curve = {{0.1, 0.3, 0.1, 0.1, 0.05, 0.15, 0.2},
                           {0.3, 0.1, 0.1, 0.1, 0.2, 0.1, 0.1},
                           {0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.5}};
  const auto r = generate_corpus(p, 1);
  std::vector<std::array<double, kQuestionTypeCount>> counts(3);
  std::vector<double> totals(3, 0);
  for (const auto& tp : r.truth.testimonies[0].pairs) {
    counts[tp.segment][static_cast<std::size_t>(tp.qtype)] += 1;
    totals[tp.segment] += 1;
  }
  for (std::size_t s = 0; s < 3; ++s) {
    CHECK(totals[s] >= 10000);
    for (std::size_t i = 0; i < kQuestionTypeCount; ++i) {
      CHECK(std::abs(counts[s][i] / totals[s] - p.qtype_weights_curve[s][i]) <= 0.02);
    }
  }
  CHECK(counts[2][0] == 0);  // zero weight never drawn
}

TEST_CASE("presets encode the stylistic contrasts") {
  const auto presets = preset_profiles();
  const auto& st = presets.structured_like;
  const auto& ff = presets.freeform_like;
  st.validate();
  ff.validate();
  REQUIRE(st.k() == 15);
  REQUIRE(ff.k() == 15);
  auto idx = [](QuestionType t) { return static_cast<std::size_t>(t); };
  const auto& early = st.qtype_weights_curve[0];
  const double factual = early[idx(QuestionType::What)] +
                         early[idx(QuestionType::Who)] +
                         early[idx(QuestionType::When)];
  CHECK(factual > 0.6);
  CHECK(st.qtype_weights_curve[14][idx(QuestionType::Other)] >
        early[idx(QuestionType::Other)]);
  for (std::size_t s = 0; s < 15; ++s) {
    CHECK(ff.qtype_weights_curve[s][idx(QuestionType::Other)] >
          st.qtype_weights_curve[s][idx(QuestionType::Other)]);
  }
  CHECK(st.intervention_rate_curve[0] > ff.intervention_rate_curve[0]);
  CHECK(st.answer_length_curve[0].mean < ff.answer_length_curve[0].mean);
  CHECK(st.answer_length_curve[0].sd < ff.answer_length_curve[0].sd);
  for (const auto* p : {&st, &ff}) {
    CHECK(p->answer_length_curve[14].mean < p->answer_length_curve[10].mean);
  }
  for (std::size_t s = 9; s < 15; ++s) {
    CHECK(st.answer_length_curve[s].mean == ff.answer_length_curve[s].mean);
    CHECK(st.answer_length_curve[s].sd == ff.answer_length_curve[s].sd);
  }
}

TEST_CASE("profile JSON round trip and validation") {
  const auto presets = preset_profiles();
  const auto j = to_json(presets.structured_like);
  const auto back = profile_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(dump_corpus(generate_corpus(back, 3)) ==
        dump_corpus(generate_corpus(presets.structured_like, 3)));

  auto expect_invalid = [](const StyleProfile& p) {
    try {
      p.validate();
      FAIL("expected InvalidProfile");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidProfile);
    }
  };
  auto p = flat_profile(3, 20, 5);
  p.qtype_weights_curve[1][0] += 0.1;
  expect_invalid(p);
  p = flat_profile(3, 20, 5);
  p.topic_script.pop_back();
  expect_invalid(p);
  p = flat_profile(3, 20, 5);
  p.topic_script[0] = {{"Not A Topic", 1.0}};
  expect_invalid(p);
  p = flat_profile(3, 20, 5);
  p.answer_length_curve[2].mean = 0;
  expect_invalid(p);
  CHECK_THROWS_AS(generate_corpus(flat_profile(3, 20, 5), 0), Error);
}

TEST_CASE("offline mock answers the three prompts") {
  const auto presets = preset_profiles();
  const auto r = generate_corpus(presets.structured_like, 2);
  const auto& t = r.corpus.testimonies[0];
  const auto pairs = pair_qa(t);
  Gateway gw(make_offline_mock(), {});
  RunLog log;
  std::size_t agree = 0;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto label = name_topic(t, pairs[p], p, gw, {"offline"}, &log);
    agree += label.title == r.truth.testimonies[0].pairs[p].topic ? 1 : 0;
  }
  CHECK(log.count("DegradedLabel") == 0);
  CHECK(static_cast<double>(agree) >= 0.9 * static_cast<double>(pairs.size()));

  std::vector<std::string> titles(5, "Ghetto Life");
  titles.insert(titles.end(), 3, "Camp Arrival");
  titles.push_back("Food and Water");
  titles.insert(titles.end(), 4, "Forced Labor");
  CHECK(common_topics(titles, 2, gw, {"offline"}) ==
        std::vector<std::string>{"Ghetto Life", "Forced Labor"});

  const auto qs = extract_questions(r.corpus, 15);
  const auto cls = classify_all(qs, &gw, {"offline"}, 2);
  for (const auto& c : cls) {
    CHECK(c.source == ClassSource::Llm);
    CHECK(c.qtype == classify_rule(c.text));
  }
}
