#include "dialogic/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "dialogic/error.hpp"
#include "dialogic/parallel.hpp"
#include "dialogic/random.hpp"
#include "dialogic/text.hpp"

namespace dialogic {

using nlohmann::json;

namespace {

constexpr double kFollowupWords = 2.5;  // mean length of kFollowups
constexpr std::uint64_t kStrataStream = 0x73747261746100ULL;

const std::vector<std::string> kFollowups = {"Please continue.", "Go on.",
                                             "Take your time.", "Go ahead.",
                                             "Please go on.", "Continue."};

const std::vector<std::string> kAnswerFiller = {
    "we",    "were",  "there", "it",     "was",   "very",  "and",  "then",
    "the",   "people", "my",   "a",      "long",  "time",  "day",  "they",
    "all",   "had",   "to",    "go",     "in",    "our",   "house", "town",
    "after", "that",  "so",    "much",   "just",  "came",  "back", "again",
    "little", "old",  "years", "later",  "still", "said",  "went", "with",
    "us",    "nothing", "never", "every", "morning", "evening", "remember",
    "know"};

const std::vector<std::string> kQuestionFiller = {
    "did",  "you",   "do",    "see",   "there", "at",    "the",  "time",
    "your", "family", "then", "about", "that",  "place", "feel", "happen",
    "was",  "it",    "like",  "were",  "they",  "go",    "come", "back",
    "in",   "those", "days",  "first", "next",  "again"};

const std::vector<std::string> kImperatives = {"Tell", "Describe", "Please",
                                               "Talk", "Explain", "Share"};

std::string_view wh_word(QuestionType t) {
  switch (t) {
    case QuestionType::How: return "How";
    case QuestionType::What: return "What";
    case QuestionType::When: return "When";
    case QuestionType::Where: return "Where";
    case QuestionType::Why: return "Why";
    case QuestionType::Who: return "Who";
    case QuestionType::Other: break;
  }
  return "";
}

const std::string& pick(rnd::Engine& g, const std::vector<std::string>& v) {
  return v[rnd::uniform_index(g, v.size())];
}

std::size_t draw_length(rnd::Engine& g, const LengthParams& p,
                        std::size_t floor) {
  const double x = rnd::lognormal_mean_sd(g, p.mean, p.sd);
  return std::max<std::size_t>(floor, static_cast<std::size_t>(std::lround(x)));
}

std::string make_question(rnd::Engine& g, QuestionType type, std::size_t len) {
  std::string out = type == QuestionType::Other ? pick(g, kImperatives)
                                                : std::string(wh_word(type));
  for (std::size_t i = 1; i < len; ++i) {
    out.push_back(' ');
    out += pick(g, kQuestionFiller);
  }
  out.push_back(type == QuestionType::Other ? '.' : '?');
  return out;
}

std::string make_answer(rnd::Engine& g, const TopicSpec& topic,
                        std::size_t len) {
  const std::size_t n_kw = std::min(len, std::max<std::size_t>(1, len / 10));
  std::vector<std::size_t> slots(len);
  std::iota(slots.begin(), slots.end(), 0);
  for (std::size_t i = 0; i < n_kw; ++i) {
    std::swap(slots[i], slots[i + rnd::uniform_index(g, len - i)]);
  }
  std::vector<bool> keyword(len, false);
  for (std::size_t i = 0; i < n_kw; ++i) keyword[slots[i]] = true;
  std::string out;
  for (std::size_t i = 0; i < len; ++i) {
    if (i) out.push_back(' ');
    std::string w = keyword[i] ? pick(g, topic.keywords) : pick(g, kAnswerFiller);
    if (i == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    out += w;
  }
  out.push_back('.');
  return out;
}

const TopicSpec& find_topic(const std::string& title) {
  for (const auto& t : topic_catalog()) {
    if (t.title == title) return t;
  }
  throw Error(ErrorCode::InvalidProfile,
              fmt::format("topic '{}' is not in the catalog", title));
}

[[noreturn]] void invalid(const StyleProfile& p, const std::string& what) {
  throw Error(ErrorCode::InvalidProfile,
              fmt::format("profile '{}': {}", p.name, what));
}

bool sums_to_one(double s) { return std::abs(s - 1.0) <= 1e-6; }

// Extra interviewer turns per pair needed to reach `rate` given the pair's
// expected question and answer words.
double followup_rate(double rate, double pair_words) {
  const double f = (rate * pair_words / 1000.0 - 1.0) /
                   (1.0 - rate * kFollowupWords / 1000.0);
  return std::max(0.0, f);
}

double stratified_total(const StyleProfile& p, double u) {
  const double mean = p.mean_total_words;
  const double sd = p.sd_total_words;
  if (sd <= 0.0) return mean;
  const double s2 = std::log1p((sd * sd) / (mean * mean));
  const double mu = std::log(mean) - 0.5 * s2;
  const boost::math::normal_distribution<double> normal;
  const double z = boost::math::quantile(normal, std::clamp(u, 1e-12, 1.0 - 1e-12));
  const double x = std::exp(mu + std::sqrt(s2) * z);
  // Stay inside the mean +- 4 sd envelope with room for the last pair.
  return std::clamp(x, std::max(1.0, mean - 3.9 * sd), mean + 3.9 * sd);
}

struct SegmentPlan {
  std::vector<double> pair_words;  // expected words per pair
  std::vector<double> followups;
  double total_pair_words = 0.0;
};

SegmentPlan plan(const StyleProfile& p) {
  SegmentPlan out;
  for (std::size_t s = 0; s < p.k(); ++s) {
    const double base =
        p.question_length_curve[s].mean + p.answer_length_curve[s].mean;
    const double f = followup_rate(p.intervention_rate_curve[s], base);
    out.followups.push_back(f);
    out.pair_words.push_back(base + f * kFollowupWords);
    out.total_pair_words += out.pair_words.back();
  }
  return out;
}

std::pair<Testimony, TestimonyTruth> generate_one(const StyleProfile& p,
                                                  const SegmentPlan& sp,
                                                  std::size_t index, double u) {
  auto g = rnd::derive(p.seed, index);
  Testimony t;
  t.id = fmt::format("{}-{:04}", p.id_prefix, index + 1);
  t.archive_id = p.archive_id;
  t.year = p.first_year + static_cast<int>(rnd::uniform_index(
                              g, static_cast<std::uint64_t>(p.last_year - p.first_year + 1)));
  std::vector<double> iw;
  for (const auto& i : p.interviewers) iw.push_back(i.weight);
  const auto first = rnd::weighted_index(g, iw);
  t.interviewers.push_back(p.interviewers[first].name);
  if (p.interviewers.size() > 1 && rnd::uniform01(g) < p.second_interviewer_share) {
    iw[first] = 0.0;
    t.interviewers.push_back(p.interviewers[rnd::weighted_index(g, iw)].name);
  }

  TestimonyTruth truth;
  truth.testimony_id = t.id;
  truth.target_words = stratified_total(p, u);
  truth.followup_rates = sp.followups;
  double cum_share = 0.0;
  for (std::size_t s = 0; s < p.k(); ++s) {
    cum_share += sp.pair_words[s];
    truth.segment_budgets.push_back(truth.target_words * cum_share /
                                    sp.total_pair_words);
  }

  std::size_t words = 0;
  for (std::size_t s = 0; s < p.k(); ++s) {
    const auto& types = p.qtype_weights_curve[s];
    std::vector<std::string> topic_titles;
    std::vector<double> topic_weights;
    for (const auto& [title, w] : p.topic_script[s]) {
      topic_titles.push_back(title);
      topic_weights.push_back(w);
    }
    bool first_in_segment = true;
    while (first_in_segment ||
           static_cast<double>(words) + sp.pair_words[s] / 2.0 <=
               truth.segment_budgets[s]) {
      first_in_segment = false;
      TruePair tp;
      tp.pair_index = truth.pairs.size();
      tp.segment = s;
      tp.qtype = kQuestionTypes[rnd::weighted_index(g, types)];
      tp.topic = topic_titles[rnd::weighted_index(g, topic_weights)];
      tp.question_words = draw_length(g, p.question_length_curve[s], 2);
      tp.answer_words = draw_length(g, p.answer_length_curve[s], 1);
      const double f = sp.followups[s];
      tp.followups = static_cast<std::size_t>(f) +
                     (rnd::uniform01(g) < f - std::floor(f) ? 1 : 0);

      Utterance q;
      q.speaker_label = "INT";
      q.role = SpeakerRole::Interviewer;
      q.text = make_question(g, tp.qtype, tp.question_words);
      words += text::word_count(q.text);
      t.utterances.push_back(std::move(q));
      for (std::size_t i = 0; i < tp.followups; ++i) {
        Utterance fu;
        fu.speaker_label = i % 2 == 0 ? "INT2" : "INT";
        fu.role = SpeakerRole::Interviewer;
        fu.text = pick(g, kFollowups);
        words += text::word_count(fu.text);
        t.utterances.push_back(std::move(fu));
      }
      Utterance a;
      a.speaker_label = "SUBJECT";
      a.role = SpeakerRole::Survivor;
      a.text = make_answer(g, find_topic(tp.topic), tp.answer_words);
      words += tp.answer_words;
      t.utterances.push_back(std::move(a));

      truth.pairs.push_back(std::move(tp));
    }
  }
  normalize(t);
  return {std::move(t), std::move(truth)};
}

std::vector<LengthParams> lengths(const std::vector<double>& means,
                                  const std::vector<double>& sds) {
  std::vector<LengthParams> out;
  for (std::size_t i = 0; i < means.size(); ++i) out.push_back({means[i], sds[i]});
  return out;
}

// Pool centered on the chronologically expected topic with weight spread
// over neighbours; `spread` holds the weights at distance 0, 1, 2...
// Centers stay far enough from the catalog ends to keep the pool full.
TopicPool chronological_pool(std::size_t s, std::size_t k,
                             const std::vector<double>& spread) {
  const auto& cat = topic_catalog();
  const long n = static_cast<long>(cat.size());
  const long reach = static_cast<long>(spread.size()) - 1;
  const long center = std::clamp(
      std::lround(static_cast<double>(s) * static_cast<double>(n - 1) /
                  static_cast<double>(std::max<std::size_t>(1, k - 1))),
      reach, n - 1 - reach);
  TopicPool pool;
  double total = 0.0;
  for (long d = -static_cast<long>(spread.size()) + 1;
       d < static_cast<long>(spread.size()); ++d) {
    const long idx = center + d;
    if (idx < 0 || idx >= n) continue;
    const double w = spread[static_cast<std::size_t>(std::abs(d))];
    pool[cat[static_cast<std::size_t>(idx)].title] += w;
    total += w;
  }
  for (auto& [title, w] : pool) w /= total;
  return pool;
}

TypeWeights scaled(const TypeWeights& base_wh, double other) {
  TypeWeights w{};
  for (std::size_t i = 0; i + 1 < kQuestionTypeCount; ++i) {
    w[i] = base_wh[i] * (1.0 - other);
  }
  w[kQuestionTypeCount - 1] = other;
  return w;
}

}  // namespace

const std::vector<TopicSpec>& topic_catalog() {
  static const std::vector<TopicSpec> catalog = {
      {"Prewar Childhood", {"childhood", "school", "parents", "siblings", "grandmother"}},
      {"Religious Traditions", {"synagogue", "prayer", "sabbath", "holiday"}},
      {"Rising Persecution", {"antisemitism", "decrees", "armband", "boycott"}},
      {"Ghetto Life", {"ghetto", "ration", "curfew", "overcrowding"}},
      {"Deportation Journey", {"train", "deportation", "cattle", "wagon"}},
      {"Camp Arrival", {"camp", "barracks", "selection", "tattoo"}},
      {"Forced Labor", {"labor", "factory", "quarry", "shifts"}},
      {"Hiding Places", {"hiding", "attic", "forest", "cellar"}},
      {"Death Marches", {"march", "snow", "column", "guards"}},
      {"Liberation Day", {"liberation", "soldiers", "liberated", "tanks"}},
      {"Displaced Persons", {"displaced", "refugees", "relief", "registry"}},
      {"Emigration Voyage", {"emigration", "ship", "visa", "harbor"}},
      {"Postwar Family", {"marriage", "wedding", "grandchildren", "career"}},
      {"Bearing Witness", {"witness", "memory", "remembrance", "museum"}},
  };
  return catalog;
}

void StyleProfile::validate() const {
  const std::size_t n = k();
  if (n == 0) invalid(*this, "curves are empty");
  if (question_length_curve.size() != n || qtype_weights_curve.size() != n ||
      topic_script.size() != n || intervention_rate_curve.size() != n) {
    invalid(*this, "curves differ in length");
  }
  if (id_prefix.empty()) invalid(*this, "id_prefix is empty");
  if (!(mean_total_words > 0.0) || !(sd_total_words >= 0.0)) {
    invalid(*this, "total words need mean > 0 and sd >= 0");
  }
  for (std::size_t s = 0; s < n; ++s) {
    for (const auto* lp : {&answer_length_curve[s], &question_length_curve[s]}) {
      if (!(lp->mean > 0.0) || !(lp->sd >= 0.0)) {
        invalid(*this, fmt::format("segment {}: length mean must be > 0", s));
      }
    }
    const auto& w = qtype_weights_curve[s];
    if (std::any_of(w.begin(), w.end(), [](double x) { return !(x >= 0.0); }) ||
        !sums_to_one(std::accumulate(w.begin(), w.end(), 0.0))) {
      invalid(*this, fmt::format("segment {}: qtype weights must sum to 1", s));
    }
    double topic_sum = 0.0;
    for (const auto& [title, tw] : topic_script[s]) {
      find_topic(title);
      if (!(tw >= 0.0)) invalid(*this, "negative topic weight");
      topic_sum += tw;
    }
    if (!sums_to_one(topic_sum)) {
      invalid(*this, fmt::format("segment {}: topic weights must sum to 1", s));
    }
    const double r = intervention_rate_curve[s];
    if (!(r >= 0.0) || r * kFollowupWords >= 1000.0) {
      invalid(*this, fmt::format("segment {}: intervention rate out of range", s));
    }
  }
  if (interviewers.empty()) invalid(*this, "no interviewers");
  for (const auto& i : interviewers) {
    if (!(i.weight > 0.0)) invalid(*this, "interviewer weights must be > 0");
  }
  if (!(second_interviewer_share >= 0.0 && second_interviewer_share <= 1.0)) {
    invalid(*this, "second_interviewer_share must be in [0, 1]");
  }
  if (first_year > last_year) invalid(*this, "first_year after last_year");
}

json to_json(const StyleProfile& p) {
  json segs = json::array();
  for (std::size_t s = 0; s < p.k(); ++s) {
    json qt = json::object();
    for (std::size_t i = 0; i < kQuestionTypeCount; ++i) {
      qt[std::string(to_string(kQuestionTypes[i]))] = p.qtype_weights_curve[s][i];
    }
    segs.push_back(
        {{"answer", {{"mean", p.answer_length_curve[s].mean},
                     {"sd", p.answer_length_curve[s].sd}}},
         {"question", {{"mean", p.question_length_curve[s].mean},
                       {"sd", p.question_length_curve[s].sd}}},
         {"qtype_weights", qt},
         {"topics", p.topic_script[s]},
         {"intervention_rate", p.intervention_rate_curve[s]}});
  }
  json iv = json::array();
  for (const auto& i : p.interviewers) iv.push_back({{"name", i.name}, {"weight", i.weight}});
  return {{"name", p.name},
          {"id_prefix", p.id_prefix},
          {"archive_id", p.archive_id},
          {"mean_total_words", p.mean_total_words},
          {"sd_total_words", p.sd_total_words},
          {"segments", segs},
          {"interviewers", iv},
          {"second_interviewer_share", p.second_interviewer_share},
          {"years", {p.first_year, p.last_year}},
          {"seed", p.seed}};
}

StyleProfile profile_from_json(const json& j) {
  StyleProfile p;
  try {
    p.name = j.at("name").get<std::string>();
    p.id_prefix = j.value("id_prefix", p.name);
    p.archive_id = j.value("archive_id", p.name);
    p.mean_total_words = j.at("mean_total_words").get<double>();
    p.sd_total_words = j.at("sd_total_words").get<double>();
    for (const auto& s : j.at("segments")) {
      p.answer_length_curve.push_back(
          {s.at("answer").at("mean").get<double>(), s.at("answer").at("sd").get<double>()});
      p.question_length_curve.push_back({s.at("question").at("mean").get<double>(),
                                         s.at("question").at("sd").get<double>()});
      TypeWeights w{};
      for (const auto& [key, val] : s.at("qtype_weights").items()) {
        const auto t = parse_question_type(key);
        if (!t) invalid(p, fmt::format("unknown question type '{}'", key));
        w[static_cast<std::size_t>(*t)] = val.get<double>();
      }
      p.qtype_weights_curve.push_back(w);
      p.topic_script.push_back(s.at("topics").get<TopicPool>());
      p.intervention_rate_curve.push_back(s.at("intervention_rate").get<double>());
    }
    for (const auto& i : j.at("interviewers")) {
      p.interviewers.push_back(
          {i.at("name").get<std::string>(), i.at("weight").get<double>()});
    }
    p.second_interviewer_share = j.value("second_interviewer_share", 0.0);
    if (j.contains("years")) {
      p.first_year = j["years"].at(0).get<int>();
      p.last_year = j["years"].at(1).get<int>();
    }
    p.seed = j.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidProfile, fmt::format("profile: {}", e.what()));
  }
  p.validate();
  return p;
}

PresetProfiles preset_profiles() {
  constexpr std::size_t k = 15;
  // Segments 9..14 share every length and rate parameter.
  const std::vector<double> late_answer = {120, 110, 100, 92, 86, 80};
  const std::vector<double> late_answer_sd = {70, 66, 62, 58, 55, 52};
  const std::vector<double> late_question = {10, 9, 9, 9, 9, 9};
  const std::vector<double> late_rate = {9, 9.5, 10, 11, 11.5, 12};
  auto with_late = [](std::vector<double> early, const std::vector<double>& late) {
    early.insert(early.end(), late.begin(), late.end());
    return early;
  };

  PresetProfiles out;
  auto& st = out.structured_like;
  st.name = "structured_like";
  st.id_prefix = "SL";
  st.archive_id = "synthetic-structured";
  st.mean_total_words = 23396;
  st.sd_total_words = 10397;
  std::vector<double> st_answer = {60, 68, 76, 86, 96, 106, 116, 124, 128};
  std::vector<double> st_answer_sd;
  for (double m : st_answer) st_answer_sd.push_back(0.55 * m);
  st.answer_length_curve =
      lengths(with_late(st_answer, late_answer), with_late(st_answer_sd, late_answer_sd));
  st.question_length_curve =
      lengths(with_late({16, 15, 14, 13, 12, 12, 11, 11, 10}, late_question),
              std::vector<double>(k, 4.0));
  st.intervention_rate_curve =
      with_late({22, 20, 18, 16, 15, 14, 13, 12, 11}, late_rate);
  const TypeWeights st_wh = {0.08, 0.34, 0.20, 0.12, 0.04, 0.22, 0.0};
  for (std::size_t s = 0; s < k; ++s) {
    st.qtype_weights_curve.push_back(
        scaled(st_wh, 0.08 + 0.30 * static_cast<double>(s) / (k - 1)));
    st.topic_script.push_back(chronological_pool(s, k, {0.6, 0.2}));
  }
  const std::vector<double> structured_counts = {22, 17, 15, 14, 12, 12, 12, 12, 11, 11};
  for (std::size_t i = 0; i < structured_counts.size(); ++i) {
    st.interviewers.push_back({fmt::format("Interviewer S{:02}", i + 1), structured_counts[i]});
  }
  st.second_interviewer_share = 0.1;
  st.first_year = 1994;
  st.last_year = 1999;
  st.seed = 1994;

  auto& ff = out.freeform_like;
  ff.name = "freeform_like";
  ff.id_prefix = "FF";
  ff.archive_id = "synthetic-freeform";
  ff.mean_total_words = 13622;
  ff.sd_total_words = 7649;
  std::vector<double> ff_answer = {170, 165, 158, 150, 142, 136, 132, 128, 126};
  std::vector<double> ff_answer_sd;
  for (double m : ff_answer) ff_answer_sd.push_back(0.9 * m);
  ff.answer_length_curve =
      lengths(with_late(ff_answer, late_answer), with_late(ff_answer_sd, late_answer_sd));
  ff.question_length_curve =
      lengths(with_late(std::vector<double>(9, 9.0), late_question),
              std::vector<double>(k, 4.0));
  ff.intervention_rate_curve =
      with_late({6, 6, 6.5, 7, 7, 7.5, 7.5, 8, 8}, late_rate);
  const TypeWeights ff_wh = {0.18, 0.26, 0.10, 0.10, 0.20, 0.16, 0.0};
  for (std::size_t s = 0; s < k; ++s) {
    ff.qtype_weights_curve.push_back(scaled(ff_wh, 0.52));
    ff.topic_script.push_back(chronological_pool(s, k, {0.4, 0.2, 0.1}));
  }
  const std::vector<double> freeform_counts = {136, 108, 98, 62, 41, 34, 33, 33, 31, 31};
  for (std::size_t i = 0; i < freeform_counts.size(); ++i) {
    ff.interviewers.push_back({fmt::format("Interviewer F{:02}", i + 1), freeform_counts[i]});
  }
  ff.second_interviewer_share = 0.35;
  ff.first_year = 1979;
  ff.last_year = 1999;
  ff.seed = 1979;
  return out;
}

std::string ground_truth_jsonl(const GroundTruth& g) {
  std::string out;
  for (const auto& t : g.testimonies) {
    json pairs = json::array();
    for (const auto& p : t.pairs) {
      pairs.push_back({{"pair_index", p.pair_index},
                       {"segment", p.segment},
                       {"qtype", to_string(p.qtype)},
                       {"topic", p.topic},
                       {"question_words", p.question_words},
                       {"answer_words", p.answer_words},
                       {"followups", p.followups}});
    }
    const json line = {{"profile", g.profile_name},
                       {"testimony_id", t.testimony_id},
                       {"target_words", t.target_words},
                       {"segment_budgets", t.segment_budgets},
                       {"followup_rates", t.followup_rates},
                       {"pairs", std::move(pairs)}};
    out += line.dump() + "\n";
  }
  return out;
}

SynthResult generate_corpus(const StyleProfile& profile,
                            std::size_t n_testimonies, std::size_t workers) {
  profile.validate();
  if (n_testimonies == 0) {
    throw Error(ErrorCode::InvalidArgument, "n_testimonies must be at least 1");
  }
  // Stratified quantiles: testimony i draws from stratum perm[i] of n.
  std::vector<std::size_t> perm(n_testimonies);
  std::iota(perm.begin(), perm.end(), 0);
  auto sg = rnd::derive(profile.seed, kStrataStream);
  for (std::size_t i = n_testimonies; i > 1; --i) {
    std::swap(perm[i - 1], perm[rnd::uniform_index(sg, i)]);
  }
  std::vector<double> u(n_testimonies);
  for (std::size_t i = 0; i < n_testimonies; ++i) {
    u[i] = (static_cast<double>(perm[i]) + rnd::uniform01(sg)) /
           static_cast<double>(n_testimonies);
  }

  const SegmentPlan sp = plan(profile);
  SynthResult out;
  out.corpus.name = profile.name;
  out.truth.profile_name = profile.name;
  out.corpus.testimonies.resize(n_testimonies);
  out.truth.testimonies.resize(n_testimonies);
  parallel_for(n_testimonies, workers, [&](std::size_t i) {
    auto [t, truth] = generate_one(profile, sp, i, u[i]);
    out.corpus.testimonies[i] = std::move(t);
    out.truth.testimonies[i] = std::move(truth);
  });
  return out;
}

}  // namespace dialogic
