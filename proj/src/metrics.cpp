#include "dialogic/metrics.hpp"

#include <cmath>
#include <functional>

#include <fmt/format.h>

#include "dialogic/csv.hpp"
#include "dialogic/error.hpp"
#include "dialogic/parallel.hpp"
#include "dialogic/stats.hpp"
#include "dialogic/text.hpp"

namespace dialogic {

using nlohmann::json;

std::string_view to_string(Aggregation a) {
  return a == Aggregation::Pooled ? "pooled" : "per_testimony_mean";
}

Aggregation aggregation_from_string(std::string_view s) {
  const std::string lower = text::to_lower(s);
  if (lower == "pooled") return Aggregation::Pooled;
  if (lower == "per_testimony_mean" || lower == "per-testimony") {
    return Aggregation::PerTestimonyMean;
  }
  throw Error(ErrorCode::InvalidArgument,
              fmt::format("unknown aggregation '{}'", s));
}

std::string_view to_string(TestVariant v) {
  return v == TestVariant::Welch ? "welch" : "pooled";
}

TestVariant test_variant_from_string(std::string_view s) {
  const std::string lower = text::to_lower(s);
  if (lower == "welch") return TestVariant::Welch;
  if (lower == "pooled" || lower == "student") return TestVariant::Pooled;
  throw Error(ErrorCode::InvalidArgument,
              fmt::format("unknown t-test variant '{}'", s));
}

SegmentedPairs segment_pairs(const Testimony& t, std::vector<QAPair> pairs,
                             std::size_t k, SegmentStrategy strategy) {
  SegmentedPairs out;
  out.pairs = std::move(pairs);
  try {
    if (strategy == SegmentStrategy::PairCount) {
      const auto segs = segment_by_pairs(out.pairs, k);
      out.segment_of_pair.resize(out.pairs.size());
      for (const auto& s : segs) {
        for (std::size_t p = s.begin; p < s.end; ++p) {
          out.segment_of_pair[p] = s.seg_index;
        }
      }
    } else {
      const auto segs = segment_by_words(t, k);
      const auto by_utt = utterance_segments(segs, t.utterances.size());
      out.segment_of_pair.reserve(out.pairs.size());
      for (const auto& p : out.pairs) {
        out.segment_of_pair.push_back(by_utt[p.first_turn]);
      }
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::KTooLarge) throw;
    out.segment_of_pair.clear();
  }
  return out;
}

SegmentStats summarize(std::vector<double> values) {
  SegmentStats s;
  const auto m = stats::moments(values);
  s.n = m.n;
  if (m.n > 0) s.mean = m.mean;
  s.sd = std::sqrt(m.variance);
  s.values = std::move(values);
  return s;
}

namespace {

using PerSegmentValues = std::vector<std::vector<double>>;

// Runs `extract` on every testimony in parallel and stitches the results
// in corpus order so the pooled samples are deterministic.
SegmentSeries collect(const Corpus& corpus, std::string metric_name,
                      std::size_t k, SegmentStrategy strategy,
                      Aggregation aggregation,
                      const std::function<bool(const Testimony&,
                                               PerSegmentValues&)>& extract) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  const std::size_t n = corpus.testimonies.size();
  std::vector<PerSegmentValues> per(n, PerSegmentValues(k));
  std::vector<char> ok(n, 0);
  parallel_for(n, default_workers(), [&](std::size_t i) {
    ok[i] = extract(corpus.testimonies[i], per[i]) ? 1 : 0;
  });

  SegmentSeries series;
  series.metric_name = std::move(metric_name);
  series.strategy = strategy;
  series.k = k;
  series.aggregation = aggregation;
  PerSegmentValues pooled(k);
  for (std::size_t i = 0; i < n; ++i) {
    if (!ok[i]) {
      ++series.testimonies_skipped;
      continue;
    }
    ++series.testimonies_used;
    for (std::size_t s = 0; s < k; ++s) {
      auto& vals = per[i][s];
      if (vals.empty()) continue;
      if (aggregation == Aggregation::Pooled) {
        pooled[s].insert(pooled[s].end(), vals.begin(), vals.end());
      } else {
        pooled[s].push_back(stats::moments(vals).mean);
      }
    }
  }
  series.segments.reserve(k);
  for (auto& vals : pooled) series.segments.push_back(summarize(std::move(vals)));
  return series;
}

SegmentSeries length_series(const Corpus& corpus, const MetricOptions& opts,
                            bool answers) {
  return collect(
      corpus, answers ? "answer_length" : "question_length", opts.k,
      opts.strategy, opts.aggregation,
      [&](const Testimony& t, PerSegmentValues& out) {
        auto seg = segment_pairs(t, merge_short_pairs(pair_qa(t), opts.min_words),
                                 opts.k, opts.strategy);
        if (!seg.usable()) return false;
        for (std::size_t p = 0; p < seg.pairs.size(); ++p) {
          const auto& pair = seg.pairs[p];
          if (answers && pair.answer_turns.empty()) continue;
          if (!answers && pair.question_turns.empty()) continue;
          out[seg.segment_of_pair[p]].push_back(static_cast<double>(
              answers ? pair.answer_words : pair.question_words));
        }
        return true;
      });
}

}  // namespace

SegmentSeries answer_length_series(const Corpus& corpus,
                                   const MetricOptions& opts) {
  return length_series(corpus, opts, true);
}

SegmentSeries question_length_series(const Corpus& corpus,
                                     const MetricOptions& opts) {
  return length_series(corpus, opts, false);
}

InterventionSeries intervention_density_series(const Corpus& corpus,
                                               std::size_t k) {
  constexpr auto kWords = SegmentStrategy::CumulativeWords;
  // Both series come from one segmentation per testimony; compute the
  // ratio alongside the density and split afterwards.
  const std::size_t n = corpus.testimonies.size();
  std::vector<PerSegmentValues> ratios(n, PerSegmentValues(k));
  auto density = collect(
      corpus, "intervention_density", k, kWords, Aggregation::Pooled,
      [&](const Testimony& t, PerSegmentValues& out) {
        std::vector<SegmentView> segs;
        try {
          segs = segment_by_words(t, k);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::KTooLarge) throw;
          return false;
        }
        const std::size_t idx =
            static_cast<std::size_t>(&t - corpus.testimonies.data());
        for (const auto& s : segs) {
          if (s.seg_words == 0) continue;
          std::size_t starts = 0;
          std::size_t survivor_words = 0;
          for (std::size_t u = s.begin; u < s.end; ++u) {
            const auto& utt = t.utterances[u];
            if (utt.role == SpeakerRole::Interviewer) ++starts;
            if (utt.role == SpeakerRole::Survivor) {
              survivor_words += utt.word_count;
            }
          }
          const double words = static_cast<double>(s.seg_words);
          out[s.seg_index].push_back(1000.0 * static_cast<double>(starts) /
                                     words);
          ratios[idx][s.seg_index].push_back(
              static_cast<double>(survivor_words) / words);
        }
        return true;
      });

  SegmentSeries ratio;
  ratio.metric_name = "survivor_ratio";
  ratio.strategy = kWords;
  ratio.k = k;
  ratio.aggregation = Aggregation::Pooled;
  ratio.testimonies_used = density.testimonies_used;
  ratio.testimonies_skipped = density.testimonies_skipped;
  PerSegmentValues pooled(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < k; ++s) {
      pooled[s].insert(pooled[s].end(), ratios[i][s].begin(),
                       ratios[i][s].end());
    }
  }
  for (auto& vals : pooled) ratio.segments.push_back(summarize(std::move(vals)));
  return {std::move(density), std::move(ratio)};
}

std::vector<std::size_t> ComparisonReport::significant_segments() const {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (segments[s].significant) out.push_back(s);
  }
  return out;
}

namespace {

std::optional<double> overall_mean(const SegmentSeries& s) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& seg : s.segments) {
    for (double v : seg.values) sum += v;
    n += seg.values.size();
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

ComparisonReport compare_series(const SegmentSeries& a, const SegmentSeries& b,
                                double alpha, TestVariant variant) {
  if (a.metric_name != b.metric_name || a.k != b.k ||
      a.strategy != b.strategy || a.segments.size() != b.segments.size()) {
    throw Error(ErrorCode::MismatchedSeries,
                fmt::format("cannot compare {}/{}/k={} with {}/{}/k={}",
                            a.metric_name, to_string(a.strategy), a.k,
                            b.metric_name, to_string(b.strategy), b.k));
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0, 1]");
  }
  ComparisonReport r;
  r.metric_name = a.metric_name;
  r.strategy = a.strategy;
  r.k = a.k;
  r.alpha = alpha;
  r.variant = variant;
  for (std::size_t s = 0; s < a.segments.size(); ++s) {
    const auto& sa = a.segments[s];
    const auto& sb = b.segments[s];
    SegmentComparison c;
    c.n_a = sa.n;
    c.n_b = sb.n;
    c.mean_a = sa.mean;
    c.mean_b = sb.mean;
    c.sd_a = sa.sd;
    c.sd_b = sb.sd;
    try {
      const auto t = variant == TestVariant::Welch
                         ? stats::welch_t_test(sa.values, sb.values)
                         : stats::pooled_t_test(sa.values, sb.values);
      c.testable = true;
      c.t_stat = t.t;
      c.df = t.df;
      c.p_value = t.p;
      c.significant = t.p < alpha;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateSample) throw;
    }
    r.segments.push_back(c);
  }
  r.overall_mean_a = overall_mean(a);
  r.overall_mean_b = overall_mean(b);
  return r;
}

std::string series_csv(const SegmentSeries& s) {
  csv::Writer w({"metric", "strategy", "aggregation", "segment", "n", "mean",
                 "sd"});
  for (std::size_t i = 0; i < s.segments.size(); ++i) {
    const auto& seg = s.segments[i];
    w.row({s.metric_name, std::string(to_string(s.strategy)),
           std::string(to_string(s.aggregation)), std::to_string(i),
           std::to_string(seg.n), csv::real(seg.mean),
           seg.n == 0 ? "" : csv::real(seg.sd)});
  }
  return w.str();
}

namespace {

json nullable(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json to_json(const SegmentSeries& s) {
  json j;
  j["metric"] = s.metric_name;
  j["strategy"] = std::string(to_string(s.strategy));
  j["aggregation"] = std::string(to_string(s.aggregation));
  j["k"] = s.k;
  j["testimonies_used"] = s.testimonies_used;
  j["testimonies_skipped"] = s.testimonies_skipped;
  json segs = json::array();
  for (const auto& seg : s.segments) {
    segs.push_back({{"n", seg.n},
                    {"mean", nullable(seg.mean)},
                    {"sd", seg.n == 0 ? json(nullptr) : json(seg.sd)}});
  }
  j["segments"] = std::move(segs);
  return j;
}

std::string report_csv(const ComparisonReport& r) {
  csv::Writer w({"metric", "strategy", "segment", "n_a", "mean_a", "sd_a",
                 "n_b", "mean_b", "sd_b", "t", "df", "p", "significant"});
  for (std::size_t i = 0; i < r.segments.size(); ++i) {
    const auto& c = r.segments[i];
    w.row({r.metric_name, std::string(to_string(r.strategy)),
           std::to_string(i), std::to_string(c.n_a), csv::real(c.mean_a),
           c.n_a ? csv::real(c.sd_a) : "", std::to_string(c.n_b),
           csv::real(c.mean_b), c.n_b ? csv::real(c.sd_b) : "",
           csv::real(c.t_stat), csv::real(c.df), csv::real(c.p_value),
           c.testable ? (c.significant ? "1" : "0") : ""});
  }
  return w.str();
}

json to_json(const ComparisonReport& r) {
  json j;
  j["metric"] = r.metric_name;
  j["strategy"] = std::string(to_string(r.strategy));
  j["k"] = r.k;
  j["alpha"] = r.alpha;
  j["test"] = std::string(to_string(r.variant));
  j["corpus_a"] = r.label_a;
  j["corpus_b"] = r.label_b;
  j["overall_mean_a"] = nullable(r.overall_mean_a);
  j["overall_mean_b"] = nullable(r.overall_mean_b);
  json segs = json::array();
  for (const auto& c : r.segments) {
    segs.push_back({{"n_a", c.n_a},
                    {"mean_a", nullable(c.mean_a)},
                    {"sd_a", c.n_a ? json(c.sd_a) : json(nullptr)},
                    {"n_b", c.n_b},
                    {"mean_b", nullable(c.mean_b)},
                    {"sd_b", c.n_b ? json(c.sd_b) : json(nullptr)},
                    {"testable", c.testable},
                    {"t", nullable(c.t_stat)},
                    {"df", nullable(c.df)},
                    {"p", nullable(c.p_value)},
                    {"significant", c.significant}});
  }
  j["segments"] = std::move(segs);
  j["significant_segments"] = r.significant_segments();
  return j;
}

}  // namespace dialogic
