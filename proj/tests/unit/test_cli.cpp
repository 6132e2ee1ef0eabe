#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "doctest.h"
#include "dialogic/corpus.hpp"
#include "dialogic/error.hpp"
#include "dialogic/figure.hpp"
#include "dialogic/report.hpp"

using namespace dialogic;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("dialogic_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const fs::path kData = DIALOGIC_TEST_DATA;
const fs::path kGolden = fs::path(DIALOGIC_SOURCE_DIR) / "tests" / "golden";

std::string manifest(const std::string& profile) {
  return (kData / "corpora" / profile / "manifest.json").string();
}

std::set<std::string> listing(const fs::path& dir) {
  std::set<std::string> names;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) names.insert(fs::relative(e.path(), dir).generic_string());
  return names;
}

void check_golden(const std::string& command) {
  auto out = scratch("golden_" + command);
  auto r = cli({command, "--config", (kGolden / "config.json").string(), "-a",
                manifest("structured_like"), "-b", manifest("freeform_like"), "-o",
                out.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto expected_dir = kGolden / command;
  const auto expected = listing(expected_dir);
  CHECK(listing(out) == expected);
  for (const auto& name : expected) {
    INFO(command << "/" << name);
    CHECK(read_file(out / name) == read_file(expected_dir / name));
  }
}

FigureSpec two_series(std::size_t k) {
  FigureSpec f;
  f.title = "Answer length";
  f.metric = "answer_length";
  f.y_label = "words";
  for (const char* label : {"A", "B"}) {
    FigureSeries s;
    s.label = label;
    for (std::size_t i = 0; i < k; ++i) {
      s.mean.push_back(10.0 + static_cast<double>(i) + (label[0] == 'B' ? 5 : 0));
      s.sd.push_back(2.0);
    }
    s.overall_mean = 15.0;
    f.series.push_back(s);
  }
  return f;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("golden outputs: compare") { check_golden("compare"); }
TEST_CASE("golden outputs: classify") { check_golden("classify"); }
TEST_CASE("golden outputs: topics") { check_golden("topics"); }

TEST_CASE("ingest of a two-file manifest") {
  auto dir = scratch("ingest");
  write_file(dir / "t1.txt", "INT: Where were you born?\nAB: In a small town near the river.\n");
  write_file(dir / "t2.txt", "INT: Tell me about school.\nCD: We walked there every day.\n");
  write_file(dir / "manifest.json",
             json::array({{{"id", "T1"}, {"archive_id", "x"}, {"path", "t1.txt"}, {"year", 1990}},
                          {{"id", "T2"}, {"archive_id", "x"}, {"path", "t2.txt"}}})
                 .dump());
  auto r = cli({"ingest", "-a", (dir / "manifest.json").string(), "-o", (dir / "out").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  auto j = json::parse(r.out);
  CHECK(j["summaries"][0]["testimony_count"] == 2);
  CHECK(fs::exists(dir / "out" / "summary_a.json"));
  CHECK(r.err.empty());
}

TEST_CASE("malformed transcript reports file and line") {
  auto dir = scratch("malformed");
  write_file(dir / "t1.txt", "\nno prefix here\nINT: Where were you born?\n");
  write_file(dir / "manifest.json",
             json::array({{{"id", "T1"}, {"archive_id", "x"}, {"path", "t1.txt"}}}).dump());
  auto r = cli({"ingest", "-a", (dir / "manifest.json").string(), "-o", (dir / "out").string()});
  CHECK(r.code == 1);
  CHECK(r.out.empty());
  auto j = json::parse(r.err);
  CHECK(j["error"] == "MalformedLine");
  CHECK(j["line"] == 2);
  CHECK(j["file"].get<std::string>().find("t1.txt") != std::string::npos);
}

TEST_CASE("config file values are overridden by flags") {
  auto dir = scratch("config");
  write_file(dir / "c.json", json{{"k", 5}, {"alpha", 0.01}, {"output_dir", "elsewhere"}}.dump());
  auto out = dir / "out";
  auto r = cli({"compare", "--config", (dir / "c.json").string(), "-k", "4", "-a",
                manifest("structured_like"), "-b", manifest("freeform_like"), "-o",
                out.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  auto echo = json::parse(read_file(out / "compare.json"))["config"];
  CHECK(echo["k"] == 4);
  CHECK(echo["alpha"] == doctest::Approx(0.01));
  CHECK_FALSE(fs::exists(dir / "elsewhere"));
}

TEST_CASE("config errors") {
  auto dir = scratch("config_errors");
  write_file(dir / "typo.json", json{{"segmnets", 5}}.dump());
  auto r = cli({"compare", "--config", (dir / "typo.json").string()});
  CHECK(r.code == 1);
  CHECK(json::parse(r.err)["error"] == "ConfigError");

  r = cli({"compare", "-a", manifest("structured_like"), "-o", (dir / "out").string()});
  CHECK(r.code == 1);
  CHECK(json::parse(r.err)["error"] == "ConfigError");

  r = cli({"compare", "-a", (dir / "missing.json").string(), "-b", manifest("freeform_like")});
  CHECK(r.code == 1);
  CHECK(json::parse(r.err)["error"] == "MissingFile");

  r = cli({"frobnicate"});
  CHECK(r.code == 1);

  CHECK_THROWS_AS(config_from_json(json{{"gateway", {{"provder", "x"}}}}), Error);
}

TEST_CASE("config json round trip") {
  RunConfig c;
  c.k = 7;
  c.seed = 11;
  c.gateway.provider = "none";
  auto back = config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
}

TEST_CASE("render_figure") {
  SUBCASE("empty input") {
    FigureSpec f;
    CHECK_THROWS_AS(render_figure(f), Error);
    f = two_series(5);
    f.series[1].sd.pop_back();
    CHECK_THROWS_AS(render_figure(f), Error);
  }
  SUBCASE("identical bytes") {
    auto f = two_series(15);
    f.significant = {0, 3, 7};
    CHECK(render_figure(f) == render_figure(f));
  }
  SUBCASE("one asterisk per significant segment") {
    auto f = two_series(15);
    f.significant = {0, 3, 7};
    auto svg = render_figure(f);
    CHECK(count(svg, "class=\"sig\"") == 3);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
  }
}

TEST_CASE("comparing a corpus with itself marks nothing") {
  auto corpus = load_corpus(manifest("structured_like"));
  MetricOptions opts;
  auto s = answer_length_series(corpus, opts);
  auto report = compare_series(s, s);
  CHECK(report.significant_segments().empty());
  auto svg = render_figure(figure_from_report(report, "Answer length", "words"));
  CHECK(count(svg, "class=\"sig\"") == 0);
}
