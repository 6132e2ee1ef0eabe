// Runs the eight acceptance criteria and prints one PASS/FAIL line each.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "cli.hpp"
#include "dialogic/classify.hpp"
#include "dialogic/corpus.hpp"
#include "dialogic/error.hpp"
#include "dialogic/metrics.hpp"
#include "dialogic/offline.hpp"
#include "dialogic/segmentation.hpp"
#include "dialogic/stats.hpp"
#include "dialogic/synth.hpp"
#include "dialogic/text.hpp"
#include "dialogic/topics.hpp"
#include "support/builders.hpp"

using namespace dialogic;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kData = DIALOGIC_TEST_DATA;
const fs::path kGolden = fs::path(DIALOGIC_SOURCE_DIR) / "tests" / "golden";

// Collects failed expectations; only the first few are printed.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (!ok) failures_.push_back(what);
  }
  bool ok() const { return failures_.empty(); }
  std::size_t total() const { return total_; }
  const std::vector<std::string>& failures() const { return failures_; }

 private:
  std::size_t total_ = 0;
  std::vector<std::string> failures_;
};

GatewayOptions quiet() {
  GatewayOptions o;
  o.sleep = [](std::chrono::nanoseconds) {};
  return o;
}

std::string slurp(const fs::path& p) { return read_file(p); }

std::size_t brute_force_words(const std::string& s) {
  std::istringstream in(s);
  std::size_t n = 0;
  std::string w;
  while (in >> w) ++n;
  return n;
}

// 1. Parsing and word counts.
void parsing(Checks& c) {
  std::mt19937_64 rng(2024);
  testing::TempDir dir("accept-parse");
  json manifest = json::array();
  std::vector<Testimony> originals;
  RoleMap roles;
  roles.rules.emplace_back("TR", SpeakerRole::Other);
  for (int i = 0; i < 50; ++i) {
    Testimony t = testing::random_testimony(rng, 1 + i % 23, 25, i % 2 == 1);
    t.id = fmt::format("R{:03}", i);
    t.archive_id = "accept";
    if (i % 4) t.year = 1980 + i;
    t.interviewers = {"Interviewer One"};
    const auto back = testimony_from_json(json::parse(to_json(t).dump()));
    c.expect(back == t, t.id + " json round trip");
    const auto plain = parse_transcript(to_plain_text(t), TranscriptFormat::PlainText, roles);
    c.expect(plain.utterances == t.utterances, t.id + " plain round trip");
    const auto name = t.id + (i % 2 ? ".txt" : ".json");
    write_file(dir.path() / name, i % 2 ? to_plain_text(t) : to_json(t).dump());
    json e = {{"path", name}, {"archive_id", t.archive_id}, {"interviewers", t.interviewers}};
    if (t.year) e["year"] = *t.year;
    manifest.push_back(e);
    originals.push_back(std::move(t));
  }
  write_file(dir.path() / "manifest.json", manifest.dump());
  const auto loaded = load_corpus(dir.path() / "manifest.json", roles);
  c.expect(loaded.testimonies.size() == 50, "manifest loads 50 files");
  for (const auto& t : loaded.testimonies) {
    auto it = std::find_if(originals.begin(), originals.end(),
                           [&](const Testimony& o) { return o.id == t.id; });
    c.expect(it != originals.end() && it->utterances == t.utterances,
             t.id + " survives disk round trip");
  }

  const std::string alphabet = "abc \t\n\r\v\f.,'-x\xc3\xa9";
  std::uniform_int_distribution<std::size_t> len(0, 80), ch(0, alphabet.size() - 1);
  for (int i = 0; i < 1000; ++i) {
    std::string s;
    for (std::size_t j = len(rng); j > 0; --j) s.push_back(alphabet[ch(rng)]);
    c.expect(text::word_count(s) == brute_force_words(s), "word_count on random string");
  }
}

// 2. Segmentation tiling.
void tiling(Checks& c) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> n_pairs(1, 500), max_words(0, 60);
  for (int iter = 0; iter < 1000; ++iter) {
    const std::size_t n = n_pairs(rng);
    std::uniform_int_distribution<std::size_t> k_dist(1, std::min<std::size_t>(20, n));
    const std::size_t k = k_dist(rng);
    std::uniform_int_distribution<std::size_t> w(0, max_words(rng));
    std::vector<testing::Turn> turns;
    for (std::size_t p = 0; p < n; ++p) {
      turns.push_back({"INT", testing::words(1 + w(rng), "q")});
      turns.push_back({"AB", testing::words(w(rng), "a")});
    }
    const auto t = testing::make_testimony(fmt::format("s{}", iter), turns);
    const auto pairs = pair_qa(t);
    c.expect(pairs.size() == n, "one pair per exchange");

    const auto segs = segment_by_pairs(pairs, k);
    c.expect(segs.size() == k, "pair segment count");
    std::size_t next = 0, lo = n, hi = 0;
    for (std::size_t s = 0; s < segs.size(); ++s) {
      c.expect(segs[s].seg_index == s && segs[s].begin == next && segs[s].end >= next,
               "pair segments contiguous");
      next = segs[s].end;
      lo = std::min(lo, segs[s].size());
      hi = std::max(hi, segs[s].size());
    }
    c.expect(next == n, "pair segments exhaustive");
    c.expect(hi - lo <= 1, "pair segment sizes differ by at most one");

    if (t.total_words < k) continue;
    const auto wsegs = segment_by_words(t, k);
    c.expect(wsegs.size() == k, "word segment count");
    next = 0;
    std::size_t total = 0;
    for (std::size_t s = 0; s < wsegs.size(); ++s) {
      const auto& v = wsegs[s];
      c.expect(v.seg_index == s && v.begin == next && v.end >= v.begin,
               "word segments contiguous");
      std::size_t words = 0;
      for (std::size_t u = v.begin; u < v.end; ++u) words += t.utterances[u].word_count;
      c.expect(words == v.seg_words, "word segments hold whole utterances");
      c.expect(v.empty_flag == (v.begin == v.end), "empty flag");
      next = v.end;
      total += words;
    }
    c.expect(next == t.utterances.size(), "word segments exhaustive");
    c.expect(total == t.total_words, "word segments cover every word");
    const auto owner = utterance_segments(wsegs, t.utterances.size());
    c.expect(std::is_sorted(owner.begin(), owner.end()), "utterances keep order");
  }
}

std::vector<double> normal_sample(std::mt19937_64& rng, std::size_t n, double loc,
                                  double scale) {
  std::normal_distribution<double> d(loc, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// 3. Welch t-test against the frozen reference, plus invariances.
void welch(Checks& c) {
  const auto ref = json::parse(slurp(kData / "welch_reference.json"));
  c.expect(ref.size() == 20, "20 reference pairs");
  for (const auto& r : ref) {
    const auto a = r["a"].get<std::vector<double>>();
    const auto b = r["b"].get<std::vector<double>>();
    const auto got = stats::welch_t_test(a, b);
    c.expect(std::fabs(got.t - r["t"].get<double>()) <= 1e-9, "reference t");
    c.expect(std::fabs(got.p - r["p"].get<double>()) <= 1e-6, "reference p");
  }
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> n_dist(2, 80);
  std::uniform_real_distribution<double> loc(-100, 100), scale(0.05, 30),
      shift(-1e3, 1e3), factor(1e-2, 1e2);
  for (int i = 0; i < 1000; ++i) {
    auto a = normal_sample(rng, n_dist(rng), loc(rng), scale(rng));
    auto b = normal_sample(rng, n_dist(rng), loc(rng), scale(rng));
    const auto r = stats::welch_t_test(a, b);
    const auto rev = stats::welch_t_test(b, a);
    c.expect(std::fabs(rev.t + r.t) <= 1e-12 * std::max(1.0, std::fabs(r.t)), "antisymmetric t");
    c.expect(std::fabs(rev.p - r.p) <= 1e-12, "symmetric p");
    const double d = shift(rng);
    auto a2 = a, b2 = b;
    for (auto& x : a2) x += d;
    for (auto& x : b2) x += d;
    const auto moved = stats::welch_t_test(a2, b2);
    c.expect(std::fabs(moved.t - r.t) <= 1e-7 * std::max(1.0, std::fabs(r.t)), "location t");
    c.expect(std::fabs(moved.p - r.p) <= 1e-7, "location p");
    const double s = factor(rng);
    for (auto& x : a) x *= s;
    for (auto& x : b) x *= s;
    const auto scaled = stats::welch_t_test(a, b);
    c.expect(std::fabs(scaled.t - r.t) <= 1e-9 * std::max(1.0, std::fabs(r.t)), "scale t");
    c.expect(std::fabs(scaled.p - r.p) <= 1e-9, "scale p");
  }
}

double other_share(const Corpus& corpus, Gateway& gw) {
  const auto qs = classify_all(extract_questions(corpus, 15), &gw, {"offline-mock"}, 4);
  const auto d = type_distribution(qs, 0);
  return (*d.overall)[static_cast<std::size_t>(QuestionType::Other)];
}

// 4. Effect detection on the presets.
void effects(Checks& c) {
  const auto presets = preset_profiles();
  const auto st = generate_corpus(presets.structured_like, 100).corpus;
  const auto ff = generate_corpus(presets.freeform_like, 100).corpus;

  MetricOptions opts;
  const auto report = compare_series(answer_length_series(st, opts),
                                     answer_length_series(ff, opts), 0.05);
  std::size_t early = 0, late = 0;
  for (auto s : report.significant_segments()) {
    if (s < 5) ++early;
    if (s >= 10) ++late;
  }
  c.expect(early >= 4, fmt::format("answer length significant in {} of the first 5", early));
  c.expect(late <= 2, fmt::format("answer length significant in {} of the last 5", late));

  Gateway gw(make_offline_mock(), quiet());
  const double other_st = other_share(st, gw);
  const double other_ff = other_share(ff, gw);
  c.expect(other_ff - other_st >= 0.10,
           fmt::format("Other share {:.3f} vs {:.3f}", other_ff, other_st));

  const auto dens_st = intervention_density_series(st, 15).density;
  const auto dens_ff = intervention_density_series(ff, 15).density;
  for (std::size_t s = 0; s < 5; ++s) {
    const auto& a = dens_st.segments[s].mean;
    const auto& b = dens_ff.segments[s].mean;
    c.expect(a && b && *a > *b, fmt::format("intervention density segment {}", s));
  }
}

// 5. Mean totals and their ratio.
void lengths(Checks& c) {
  const auto presets = preset_profiles();
  auto mean_total = [](const Corpus& corpus) {
    double sum = 0;
    for (const auto& t : corpus.testimonies) sum += static_cast<double>(t.total_words);
    return sum / static_cast<double>(corpus.testimonies.size());
  };
  const double ms = mean_total(generate_corpus(presets.structured_like, 100).corpus);
  const double mf = mean_total(generate_corpus(presets.freeform_like, 100).corpus);
  c.expect(std::fabs(ms / 23396.0 - 1) <= 0.02, fmt::format("structured mean {:.1f}", ms));
  c.expect(std::fabs(mf / 13622.0 - 1) <= 0.02, fmt::format("freeform mean {:.1f}", mf));
  c.expect(std::fabs(ms / mf - 23396.0 / 13622.0) <= 0.05, fmt::format("ratio {:.4f}", ms / mf));
}

// 6. Question classifier.
void classifier(Checks& c) {
  std::istringstream gold(slurp(kData / "question_gold.tsv"));
  std::string line;
  std::getline(gold, line);
  std::size_t total = 0, correct = 0;
  std::vector<QuestionItem> gold_items;
  while (std::getline(gold, line)) {
    const auto tab = line.find('\t');
    const auto want = parse_question_type(line.substr(0, tab));
    const auto question = line.substr(tab + 1);
    ++total;
    if (want && classify_rule(question) == *want) ++correct;
    gold_items.push_back({"gold", total, std::nullopt, question});
  }
  c.expect(total == 70 && correct == 70, fmt::format("rule {}/{} on the gold set", correct, total));

  auto llm_run = [&](const std::vector<QuestionItem>& items) {
    Gateway gw(make_offline_mock(), quiet());
    return classified_jsonl(classify_all(items, &gw, {"offline-mock"}, 4));
  };
  const auto corpus = generate_corpus(preset_profiles().freeform_like, 3).corpus;
  auto items = extract_questions(corpus, 15);
  items.insert(items.end(), gold_items.begin(), gold_items.end());
  const auto first = llm_run(items);
  c.expect(!first.empty() && first == llm_run(items), "mock LLM run is byte-reproducible");

  StyleProfile p = preset_profiles().structured_like;
  p.name = "recovery";
  const std::size_t k = 3;
  p.answer_length_curve.assign(k, {4, 0});
  p.question_length_curve.assign(k, {2, 0});
  p.intervention_rate_curve.assign(k, 0.0);
  p.qtype_weights_curve = {{0.1, 0.3, 0.1, 0.1, 0.05, 0.15, 0.2},
                           {0.3, 0.1, 0.1, 0.1, 0.2, 0.1, 0.1},
                           {0.05, 0.05, 0.05, 0.05, 0.05, 0.25, 0.5}};
  p.topic_script.assign(k, p.topic_script.front());
  p.mean_total_words = 200000;
  p.sd_total_words = 0;
  p.validate();
  const auto synth = generate_corpus(p, 1);
  Gateway gw(make_offline_mock(), quiet());
  const auto qs = classify_all(extract_questions(synth.corpus, k), &gw, {"offline-mock"}, 4);
  const auto d = type_distribution(qs, k);
  for (std::size_t s = 0; s < k; ++s) {
    c.expect(d.segment_totals[s] >= 10000,
             fmt::format("segment {} has {} questions", s, d.segment_totals[s]));
    for (std::size_t i = 0; i < kQuestionTypeCount; ++i) {
      const double got = (*d.per_segment[s])[i];
      const double want = p.qtype_weights_curve[s][i];
      c.expect(std::fabs(got - want) <= 0.03,
               fmt::format("segment {} {} share {:.4f} vs {:.4f}", s,
                           to_string(kQuestionTypes[i]), got, want));
    }
  }
}

// 7. Topic pipeline.
void topics(Checks& c) {
  const auto corpus = generate_corpus(preset_profiles().structured_like, 6).corpus;
  TopicOptions opts;
  opts.k = 15;
  opts.top_k = 3;
  opts.sample_size = 4;
  opts.seed = 11;
  opts.llm.model_id = "offline-mock";
  auto run = [&] {
    Gateway gw(make_offline_mock(), quiet());
    return build_topic_table(corpus, opts, gw);
  };
  const auto a = run();
  const auto b = run();
  c.expect(to_json(a).dump() == to_json(b).dump(), "table JSON identical across runs");
  c.expect(topic_table_csv(a) == topic_table_csv(b), "table CSV identical across runs");
  c.expect(a.rows.size() == opts.k, "k rows");
  for (const auto& r : a.rows) {
    c.expect(r.topics.size() == opts.top_k, "K topics per row");
    for (const auto& cell : r.topics) {
      c.expect(cell.coverage >= 0.0 && cell.coverage <= 1.0, "coverage in [0, 1]");
    }
  }

  const auto fx = json::parse(slurp(kData / "coverage_fixture.json"));
  const double got = coverage_score(fx["labels"].get<std::vector<std::string>>(),
                                    fx["topic"].get<std::string>(),
                                    jaccard_matcher(fx["threshold"].get<double>()));
  c.expect(got == fx["coverage"].get<double>(), fmt::format("fixture coverage {}", got));
}

std::set<std::string> listing(const fs::path& dir) {
  std::set<std::string> names;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) names.insert(fs::relative(e.path(), dir).generic_string());
  }
  return names;
}

// 8. Golden files.
void goldens(Checks& c) {
  testing::TempDir dir("accept-golden");
  const auto a = (kData / "corpora" / "structured_like" / "manifest.json").string();
  const auto b = (kData / "corpora" / "freeform_like" / "manifest.json").string();
  for (const std::string command : {"compare", "classify", "topics"}) {
    const auto out = dir.path() / command;
    std::ostringstream so, se;
    const int code = run_cli({command, "--config", (kGolden / "config.json").string(), "-a", a,
                              "-b", b, "-o", out.string()},
                             so, se);
    c.expect(code == 0, command + " exits 0: " + se.str());
    if (code != 0) continue;
    const auto want = listing(kGolden / command);
    c.expect(listing(out) == want, command + " writes the golden file set");
    for (const auto& name : want) {
      c.expect(fs::exists(out / name) && slurp(out / name) == slurp(kGolden / command / name),
               command + "/" + name + " matches");
    }
  }
}

struct Criterion {
  int id;
  std::string name;
  double limit_s;
  std::function<void(Checks&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "parsing round trips and word counts", 5, parsing},
      {2, "segmentation tiling", 30, tiling},
      {3, "Welch t-test oracle and invariances", 60, welch},
      {4, "effect detection on presets", 120, effects},
      {5, "length-ratio reproduction", 60, lengths},
      {6, "question classifier", 120, classifier},
      {7, "topic pipeline", 60, topics},
      {8, "golden files", 120, goldens},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Checks checks;
    const auto start = std::chrono::steady_clock::now();
    std::string error;
    try {
      cr.run(checks);
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < cr.limit_s;
    const bool pass = checks.ok() && error.empty() && in_time;
    std::cout << fmt::format("{} [{}] {} ({} checks, {:.2f} s, limit {:.0f} s)\n",
                             pass ? "PASS" : "FAIL", cr.id, cr.name, checks.total(), secs,
                             cr.limit_s);
    if (!error.empty()) std::cout << "    exception: " << error << "\n";
    if (!in_time) std::cout << "    exceeded time limit\n";
    const auto& f = checks.failures();
    for (std::size_t i = 0; i < std::min<std::size_t>(f.size(), 5); ++i) {
      std::cout << "    " << f[i] << "\n";
    }
    if (f.size() > 5) std::cout << fmt::format("    ... {} more\n", f.size() - 5);
    if (!pass) ++failed;
  }
  std::cout.flush();
  return failed;
}
