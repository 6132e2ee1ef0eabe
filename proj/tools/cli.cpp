#include "cli.hpp"

#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "dialogic/corpus.hpp"
#include "dialogic/error.hpp"
#include "dialogic/report.hpp"

namespace dialogic {

namespace {

using nlohmann::json;

struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> corpus_a, corpus_b, roles;
  std::optional<std::size_t> k, min_words, top_k, sample_size, validation_per_type;
  std::optional<std::string> strategy, aggregation, test;
  std::optional<double> alpha, match_threshold;
  std::optional<std::string> provider, model_id, cache_dir;
  std::optional<std::size_t> max_in_flight;
  std::optional<double> rps;
  std::optional<int> max_attempts;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> profile;
  std::optional<std::size_t> n;
};

void add_flags(CLI::App& cmd, Flags& f) {
  cmd.add_option("--config", f.config, "JSON config file; flags override it");
  cmd.add_option("-a,--corpus-a", f.corpus_a, "Manifest of corpus A");
  cmd.add_option("-b,--corpus-b", f.corpus_b, "Manifest of corpus B");
  cmd.add_option("--roles", f.roles, "Speaker role map JSON");
  cmd.add_option("-k,--segments", f.k, "Number of chronological segments");
  cmd.add_option("--strategy", f.strategy, "pair_count or cumulative_words");
  cmd.add_option("--min-words", f.min_words, "Merge pairs shorter than this");
  cmd.add_option("--aggregation", f.aggregation, "pooled or per_testimony_mean");
  cmd.add_option("--test", f.test, "welch or pooled");
  cmd.add_option("--alpha", f.alpha, "Significance level");
  cmd.add_option("-K,--topics", f.top_k, "Topics per segment");
  cmd.add_option("--sample-size", f.sample_size, "Testimonies sampled for topics (0 = all)");
  cmd.add_option("--validation-per-type", f.validation_per_type,
                 "Validation sample rows per question type");
  cmd.add_option("--match-threshold", f.match_threshold, "Title overlap for coverage");
  cmd.add_option("--provider", f.provider, "offline, http or none");
  cmd.add_option("--model", f.model_id, "Model id sent to the provider");
  cmd.add_option("--cache-dir", f.cache_dir, "Completion cache, under the output dir");
  cmd.add_option("--max-in-flight", f.max_in_flight, "Concurrent provider calls");
  cmd.add_option("--rps", f.rps, "Provider requests per second (0 = unlimited)");
  cmd.add_option("--max-attempts", f.max_attempts, "Attempts per completion");
  cmd.add_option("-o,--out", f.output_dir, "Output directory");
  cmd.add_option("--seed", f.seed, "Seed for sampling and generation");
  cmd.add_option("-j,--workers", f.workers, "Worker threads");
  cmd.add_option("--profile", f.profile, "Synth preset name or profile JSON");
  cmd.add_option("-n,--count", f.n, "Testimonies to generate");
}

template <typename T, typename U>
void apply(const std::optional<T>& flag, U& target) {
  if (flag) target = *flag;
}

template <typename Parse>
auto parse_enum(const std::string& s, Parse parse) {
  try {
    return parse(s);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
}

RunConfig resolve(const Flags& f) {
  RunConfig c;
  if (f.config) {
    try {
      c = config_from_json(json::parse(read_file(*f.config)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ConfigError, e.what(), *f.config);
    } catch (const Error& e) {
      throw e.file().empty() ? e.with_file(*f.config) : e;
    }
  }
  apply(f.corpus_a, c.corpus_a);
  apply(f.corpus_b, c.corpus_b);
  apply(f.roles, c.roles);
  apply(f.k, c.k);
  if (f.strategy) c.strategy = parse_enum(*f.strategy, strategy_from_string);
  apply(f.min_words, c.min_words);
  if (f.aggregation) c.aggregation = parse_enum(*f.aggregation, aggregation_from_string);
  if (f.test) c.test = parse_enum(*f.test, test_variant_from_string);
  apply(f.alpha, c.alpha);
  apply(f.top_k, c.top_k);
  apply(f.sample_size, c.sample_size);
  apply(f.validation_per_type, c.validation_per_type);
  apply(f.match_threshold, c.match_threshold);
  apply(f.provider, c.gateway.provider);
  apply(f.model_id, c.gateway.model_id);
  apply(f.cache_dir, c.gateway.cache_dir);
  apply(f.max_in_flight, c.gateway.max_in_flight);
  apply(f.rps, c.gateway.requests_per_second);
  apply(f.max_attempts, c.gateway.max_attempts);
  apply(f.output_dir, c.output_dir);
  apply(f.seed, c.seed);
  apply(f.workers, c.workers);
  apply(f.profile, c.profile);
  apply(f.n, c.n);
  return c;
}

json error_json(const Error& e) {
  json j = {{"error", to_string(e.code())}, {"message", e.what()}};
  if (!e.file().empty()) j["file"] = e.file();
  if (e.line()) j["line"] = *e.line();
  return j;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Interview transcript analysis: ingest, compare, classify, topics, synth"};
  app.name("dialogic");
  app.require_subcommand(1);
  Flags flags;
  using Command = json (*)(const RunConfig&);
  const std::vector<std::tuple<std::string, std::string, Command>> commands = {
      {"ingest", "Load corpora and write summaries", cmd_ingest},
      {"compare", "Per-segment comparison of corpus A and B", cmd_compare},
      {"classify", "Question-type classification and distributions", cmd_classify},
      {"topics", "Top topics per segment", cmd_topics},
      {"synth", "Generate a synthetic corpus", cmd_synth},
  };
  std::vector<std::pair<CLI::App*, Command>> subs;
  for (const auto& [name, help, fn] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_flags(*sub, flags);
    subs.emplace_back(sub, fn);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << json{{"error", to_string(ErrorCode::ConfigError)}, {"message", e.what()}}.dump()
        << "\n";
    return 1;
  }

  try {
    const RunConfig config = resolve(flags);
    for (const auto& [sub, fn] : subs) {
      if (sub->parsed()) {
        out << fn(config).dump(2) << "\n";
        return 0;
      }
    }
  } catch (const Error& e) {
    err << error_json(e).dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << json{{"error", "InternalError"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace dialogic
