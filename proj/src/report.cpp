#include "dialogic/report.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "dialogic/classify.hpp"
#include "dialogic/corpus.hpp"
#include "dialogic/csv.hpp"
#include "dialogic/error.hpp"
#include "dialogic/figure.hpp"
#include "dialogic/gateway.hpp"
#include "dialogic/offline.hpp"
#include "dialogic/runlog.hpp"
#include "dialogic/synth.hpp"
#include "dialogic/topics.hpp"

namespace dialogic {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) {
  throw Error(ErrorCode::ConfigError, what);
}

template <typename T>
T get_as(const json& j, const char* key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    config_error(fmt::format("config key '{}' has the wrong type", key));
  }
}

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) {
      throw Error(ErrorCode::IoError, fmt::format("cannot create {}: {}",
                                                  dir_.string(), ec.message()));
    }
  }

  void write(const std::string& name, std::string_view bytes) {
    write_file(dir_ / name, bytes);
    files_.push_back(name);
  }
  void write_json(const std::string& name, const json& j) {
    write(name, j.dump(2) + "\n");
  }

  const fs::path& dir() const { return dir_; }
  json files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

RoleMap load_roles(const RunConfig& c) {
  if (!c.roles) return {};
  try {
    return RoleMap::from_json(json::parse(read_file(*c.roles)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, fmt::format("role map: {}", e.what()),
                c.roles->string());
  }
}

struct Loaded {
  std::string tag;  // "a" or "b"
  Corpus corpus;
};

std::vector<Loaded> load_inputs(const RunConfig& c, bool need_b) {
  if (!c.corpus_a) config_error("corpus_a is required");
  if (need_b && !c.corpus_b) config_error("corpus_b is required");
  const RoleMap roles = load_roles(c);
  std::vector<Loaded> out;
  out.push_back({"a", load_corpus(*c.corpus_a, roles)});
  if (c.corpus_b) out.push_back({"b", load_corpus(*c.corpus_b, roles)});
  return out;
}

std::unique_ptr<Gateway> make_gateway(const RunConfig& c, bool required) {
  const auto& g = c.gateway;
  std::shared_ptr<Provider> provider;
  if (g.provider == "none") {
    if (required) config_error("this command needs a gateway provider");
    return nullptr;
  }
  if (g.provider == "offline") {
    provider = make_offline_mock();
  } else if (g.provider == "http") {
    auto hc = HttpProviderConfig::from_env();
    if (hc.model_id.empty()) hc.model_id = g.model_id;
    provider = std::make_shared<HttpProvider>(hc);
  } else {
    config_error(fmt::format("unknown gateway provider '{}'", g.provider));
  }
  GatewayOptions opts;
  if (g.cache_dir) opts.cache_dir = c.output_dir / *g.cache_dir;
  opts.max_attempts = g.max_attempts;
  opts.max_in_flight = g.max_in_flight;
  opts.requests_per_second = g.requests_per_second;
  return std::make_unique<Gateway>(provider, opts);
}

std::string testimonies_csv(const Corpus& corpus) {
  csv::Writer w({"testimony_id", "archive_id", "year", "interviewers",
                 "utterances", "words", "pairs"});
  for (const auto& t : corpus.testimonies) {
    w.row({t.id, t.archive_id, t.year ? std::to_string(*t.year) : "",
           fmt::format("{}", fmt::join(t.interviewers, ";")),
           std::to_string(t.utterances.size()), std::to_string(t.total_words),
           std::to_string(pair_qa(t).size())});
  }
  return w.str();
}

json corpus_summary(const Corpus& corpus) {
  std::vector<double> words;
  std::size_t utterances = 0, total = 0;
  for (const auto& t : corpus.testimonies) {
    words.push_back(static_cast<double>(t.total_words));
    utterances += t.utterances.size();
    total += t.total_words;
  }
  const auto stats = summarize(words);
  json interviewers = json::array();
  for (const auto& [name, n] : interviewer_distribution(corpus)) {
    interviewers.push_back({{"name", name}, {"count", n}});
  }
  json years = json::array();
  for (const auto& y : year_distribution(corpus)) {
    years.push_back({{"year", y.year ? json(*y.year) : json(nullptr)},
                     {"count", y.count}});
  }
  return {{"corpus", corpus.name},
          {"testimony_count", corpus.testimonies.size()},
          {"utterance_count", utterances},
          {"total_words", total},
          {"mean_words", stats.mean ? json(*stats.mean) : json(nullptr)},
          {"sd_words", stats.sd},
          {"interviewers", interviewers},
          {"years", years}};
}

std::string years_svg(const Corpus& corpus) {
  BarChartSpec spec;
  spec.title = fmt::format("Testimonies per year: {}", corpus.name);
  spec.y_label = "Testimonies";
  std::vector<double> counts;
  for (const auto& y : year_distribution(corpus)) {
    spec.categories.push_back(y.year ? std::to_string(*y.year) : "unknown");
    counts.push_back(static_cast<double>(y.count));
  }
  spec.series.emplace_back(corpus.name, std::move(counts));
  return render_bar_chart(spec);
}

json config_echo(const RunConfig& c) {
  json j = to_json(c);
  // Paths depend on where the command runs; outputs must not.
  j.erase("output_dir");
  j.erase("corpus_a");
  j.erase("corpus_b");
  j.erase("roles");
  j.erase("workers");
  return j;
}

}  // namespace

void RunConfig::validate() const {
  if (k < 1) config_error("k must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) config_error("alpha must lie in (0, 1)");
  if (top_k < 1) config_error("K must be at least 1");
  if (!(match_threshold > 0.0 && match_threshold <= 1.0)) {
    config_error("match_threshold must lie in (0, 1]");
  }
  if (workers < 1) config_error("workers must be at least 1");
  if (gateway.max_attempts < 1) config_error("max_attempts must be at least 1");
  for (const auto* p : {&corpus_a, &corpus_b, &roles}) {
    if (*p && !fs::exists(**p)) {
      throw Error(ErrorCode::MissingFile,
                  fmt::format("{} does not exist", (*p)->string()), (*p)->string());
    }
  }
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) config_error("config must be a JSON object");
  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    const bool optional_key = key == "corpus_a" || key == "corpus_b" ||
                              key == "roles" || key == "seed";
    if (optional_key && v.is_null()) continue;
    if (key == "corpus_a") c.corpus_a = get_as<std::string>(v, "corpus_a");
    else if (key == "corpus_b") c.corpus_b = get_as<std::string>(v, "corpus_b");
    else if (key == "roles") c.roles = get_as<std::string>(v, "roles");
    else if (key == "k") c.k = get_as<std::size_t>(v, "k");
    else if (key == "strategy") {
      try {
        c.strategy = strategy_from_string(get_as<std::string>(v, "strategy"));
      } catch (const Error& e) {
        config_error(e.what());
      }
    } else if (key == "min_words") c.min_words = get_as<std::size_t>(v, "min_words");
    else if (key == "aggregation") {
      try {
        c.aggregation = aggregation_from_string(get_as<std::string>(v, "aggregation"));
      } catch (const Error& e) {
        config_error(e.what());
      }
    } else if (key == "test") {
      try {
        c.test = test_variant_from_string(get_as<std::string>(v, "test"));
      } catch (const Error& e) {
        config_error(e.what());
      }
    } else if (key == "alpha") c.alpha = get_as<double>(v, "alpha");
    else if (key == "K") c.top_k = get_as<std::size_t>(v, "K");
    else if (key == "sample_size") c.sample_size = get_as<std::size_t>(v, "sample_size");
    else if (key == "validation_per_type") {
      c.validation_per_type = get_as<std::size_t>(v, "validation_per_type");
    } else if (key == "match_threshold") {
      c.match_threshold = get_as<double>(v, "match_threshold");
    } else if (key == "output_dir") c.output_dir = get_as<std::string>(v, "output_dir");
    else if (key == "seed") c.seed = get_as<std::uint64_t>(v, "seed");
    else if (key == "workers") c.workers = get_as<std::size_t>(v, "workers");
    else if (key == "profile") c.profile = get_as<std::string>(v, "profile");
    else if (key == "n") c.n = get_as<std::size_t>(v, "n");
    else if (key == "gateway") {
      if (!v.is_object()) config_error("gateway must be an object");
      for (const auto& [gk, gv] : v.items()) {
        auto& g = c.gateway;
        if (gk == "provider") g.provider = get_as<std::string>(gv, "gateway.provider");
        else if (gk == "model_id") g.model_id = get_as<std::string>(gv, "gateway.model_id");
        else if (gk == "cache_dir" && gv.is_null()) g.cache_dir.reset();
        else if (gk == "cache_dir") g.cache_dir = get_as<std::string>(gv, "gateway.cache_dir");
        else if (gk == "max_in_flight") {
          g.max_in_flight = get_as<std::size_t>(gv, "gateway.max_in_flight");
        } else if (gk == "requests_per_second") {
          g.requests_per_second = get_as<double>(gv, "gateway.requests_per_second");
        } else if (gk == "max_attempts") {
          g.max_attempts = get_as<int>(gv, "gateway.max_attempts");
        } else {
          config_error(fmt::format("unknown config key 'gateway.{}'", gk));
        }
      }
    } else {
      config_error(fmt::format("unknown config key '{}'", key));
    }
  }
  return c;
}

json to_json(const RunConfig& c) {
  auto path_or_null = [](const std::optional<fs::path>& p) {
    return p ? json(p->generic_string()) : json(nullptr);
  };
  json g = {{"provider", c.gateway.provider},
            {"model_id", c.gateway.model_id},
            {"cache_dir", path_or_null(c.gateway.cache_dir)},
            {"max_in_flight", c.gateway.max_in_flight},
            {"requests_per_second", c.gateway.requests_per_second},
            {"max_attempts", c.gateway.max_attempts}};
  return {{"corpus_a", path_or_null(c.corpus_a)},
          {"corpus_b", path_or_null(c.corpus_b)},
          {"roles", path_or_null(c.roles)},
          {"k", c.k},
          {"strategy", to_string(c.strategy)},
          {"min_words", c.min_words},
          {"aggregation", to_string(c.aggregation)},
          {"test", to_string(c.test)},
          {"alpha", c.alpha},
          {"K", c.top_k},
          {"sample_size", c.sample_size},
          {"validation_per_type", c.validation_per_type},
          {"match_threshold", c.match_threshold},
          {"gateway", g},
          {"output_dir", c.output_dir.generic_string()},
          {"seed", c.seed ? json(*c.seed) : json(nullptr)},
          {"workers", c.workers},
          {"profile", c.profile},
          {"n", c.n}};
}

json cmd_ingest(const RunConfig& c) {
  c.validate();
  const auto inputs = load_inputs(c, false);
  Outputs out(c.output_dir);
  json summaries = json::array();
  for (const auto& in : inputs) {
    auto s = corpus_summary(in.corpus);
    out.write_json(fmt::format("summary_{}.json", in.tag), s);
    out.write(fmt::format("testimonies_{}.csv", in.tag), testimonies_csv(in.corpus));
    out.write(fmt::format("years_{}.svg", in.tag), years_svg(in.corpus));
    summaries.push_back(std::move(s));
  }
  return {{"command", "ingest"}, {"summaries", summaries}, {"files", out.files()}};
}

json cmd_compare(const RunConfig& c) {
  c.validate();
  const auto inputs = load_inputs(c, true);
  const Corpus& a = inputs[0].corpus;
  const Corpus& b = inputs[1].corpus;
  MetricOptions opts{c.k, c.strategy, c.min_words, c.aggregation};

  struct Item {
    SegmentSeries sa, sb;
    std::string title, y_label;
  };
  std::vector<Item> items;
  items.push_back({answer_length_series(a, opts), answer_length_series(b, opts),
                   "Answer length", "Words per answer"});
  items.push_back({question_length_series(a, opts), question_length_series(b, opts),
                   "Question length", "Words per question"});
  auto da = intervention_density_series(a, c.k);
  auto db = intervention_density_series(b, c.k);
  items.push_back({std::move(da.density), std::move(db.density),
                   "Intervention density", "Interviewer turns per 1000 words"});
  items.push_back({std::move(da.survivor_ratio), std::move(db.survivor_ratio),
                   "Survivor speech share", "Survivor words / segment words"});

  Outputs out(c.output_dir);
  json reports = json::array();
  for (auto& it : items) {
    auto r = compare_series(it.sa, it.sb, c.alpha, c.test);
    r.label_a = a.name;
    r.label_b = b.name;
    const std::string m = r.metric_name;
    out.write(m + ".csv", report_csv(r));
    out.write(m + "_series.csv", series_csv(it.sa) + series_csv(it.sb));
    const auto rj = to_json(r);
    out.write_json(m + ".json", rj);
    out.write(m + ".svg",
              render_figure(figure_from_report(
                  r, fmt::format("{}: {} vs {}", it.title, a.name, b.name), it.y_label)));
    reports.push_back({{"metric", m},
                       {"significant_segments", r.significant_segments()},
                       {"testimonies_used", {it.sa.testimonies_used, it.sb.testimonies_used}},
                       {"testimonies_skipped",
                        {it.sa.testimonies_skipped, it.sb.testimonies_skipped}}});
  }
  const json bundle = {{"command", "compare"},
                       {"corpus_a", a.name},
                       {"corpus_b", b.name},
                       {"config", config_echo(c)},
                       {"reports", reports}};
  out.write_json("compare.json", bundle);
  json summary = bundle;
  summary["files"] = out.files();
  return summary;
}

json cmd_classify(const RunConfig& c) {
  c.validate();
  const auto inputs = load_inputs(c, false);
  auto gateway = make_gateway(c, false);
  const LlmSettings llm{c.gateway.model_id};
  Outputs out(c.output_dir);
  RunLog log;
  std::vector<std::pair<std::string, TypeDistribution>> dists;
  json per_corpus = json::array();
  for (const auto& in : inputs) {
    const auto items = extract_questions(in.corpus, c.k, c.strategy);
    const auto qs = classify_all(items, gateway.get(), llm, c.workers, &log);
    const auto dist = type_distribution(qs, c.k);
    const auto sample = validation_sample(qs, c.validation_per_type, c.seed.value_or(0));
    out.write(fmt::format("questions_{}.jsonl", in.tag), classified_jsonl(qs));
    out.write(fmt::format("qtype_distribution_{}.csv", in.tag), distribution_csv(dist));
    out.write_json(fmt::format("qtype_distribution_{}.json", in.tag), to_json(dist));
    out.write(fmt::format("qtype_segments_{}.svg", in.tag),
              render_stacked(qtype_stacked(in.corpus.name, dist)));
    out.write(fmt::format("validation_sample_{}.csv", in.tag), validation_csv(sample));
    json shortfalls = json::array();
    for (const auto& s : sample.shortfalls) {
      shortfalls.push_back({{"qtype", to_string(s.qtype)},
                            {"requested", s.requested},
                            {"available", s.available}});
    }
    per_corpus.push_back({{"corpus", in.corpus.name},
                          {"questions", qs.size()},
                          {"validation_rows", sample.rows.size()},
                          {"shortfalls", shortfalls}});
    dists.emplace_back(in.corpus.name, dist);
  }
  out.write("qtype_overall.svg", render_bar_chart(qtype_bars(dists)));
  out.write("runlog_classify.jsonl", log.to_jsonl());
  return {{"command", "classify"},
          {"mode", gateway ? "llm" : "rule"},
          {"corpora", per_corpus},
          {"files", out.files()}};
}

json cmd_topics(const RunConfig& c) {
  c.validate();
  const auto inputs = load_inputs(c, false);
  auto gateway = make_gateway(c, true);
  Outputs out(c.output_dir);
  json per_corpus = json::array();
  for (const auto& in : inputs) {
    TopicOptions opts;
    opts.k = c.k;
    opts.top_k = c.top_k;
    opts.min_words = c.min_words;
    opts.sample_size = c.sample_size;
    opts.seed = c.seed.value_or(0);
    opts.match_threshold = c.match_threshold;
    opts.workers = c.workers;
    opts.llm.model_id = c.gateway.model_id;
    LabelStore store(out.dir() / fmt::format("labels_{}.jsonl", in.tag));
    RunLog log;
    const auto table = build_topic_table(in.corpus, opts, *gateway, &store, &log);
    // the store saved itself; list it with the other outputs
    out.write(fmt::format("labels_{}.jsonl", in.tag), store.to_jsonl());
    out.write_json(fmt::format("topics_{}.json", in.tag), to_json(table));
    out.write(fmt::format("topics_{}.csv", in.tag), topic_table_csv(table));
    out.write(fmt::format("topics_{}.md", in.tag), topic_table_markdown(table));
    out.write(fmt::format("topics_{}.html", in.tag), topic_table_html(table));
    out.write(fmt::format("runlog_topics_{}.jsonl", in.tag), log.to_jsonl());
    per_corpus.push_back({{"corpus", in.corpus.name},
                          {"rows", table.rows.size()},
                          {"K", table.top_k},
                          {"degraded_labels", table.degraded_labels}});
  }
  return {{"command", "topics"}, {"corpora", per_corpus}, {"files", out.files()}};
}

json cmd_synth(const RunConfig& c) {
  if (c.n < 1) config_error("n must be at least 1");
  StyleProfile profile;
  const auto presets = preset_profiles();
  if (c.profile == presets.structured_like.name) {
    profile = presets.structured_like;
  } else if (c.profile == presets.freeform_like.name) {
    profile = presets.freeform_like;
  } else if (fs::exists(c.profile)) {
    try {
      profile = profile_from_json(json::parse(read_file(c.profile)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidProfile, e.what(), c.profile);
    }
  } else {
    config_error(fmt::format("'{}' is neither a preset nor a profile file", c.profile));
  }
  if (c.seed) profile.seed = *c.seed;
  const auto result = generate_corpus(profile, c.n, c.workers);
  Outputs out(c.output_dir);
  write_corpus(result.corpus, out.dir() / profile.name);
  out.write(profile.name + "_truth.jsonl", ground_truth_jsonl(result.truth));
  out.write_json(profile.name + "_profile.json", to_json(profile));
  auto files = out.files();
  files.push_back(profile.name + "/manifest.json");
  return {{"command", "synth"},
          {"profile", profile.name},
          {"testimonies", result.corpus.testimonies.size()},
          {"summary", corpus_summary(result.corpus)},
          {"files", files}};
}

}  // namespace dialogic
