#include <fstream>
#include <sstream>

#include <json.hpp>

#include "doctest.h"
#include "dialogic/error.hpp"
#include "dialogic/hash.hpp"
#include "dialogic/prompts.hpp"

using namespace dialogic;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string rendered(const std::string& name) {
  return std::string(DIALOGIC_TEST_DATA) + "/rendered/" + name;
}

}  // namespace

TEST_CASE("embedded templates equal the template files") {
  for (const auto* t : {&prompts::topic_naming(), &prompts::common_topics(),
                        &prompts::question_type()}) {
    const auto file = slurp(std::string(DIALOGIC_SOURCE_DIR) + "/prompts/" +
                            std::string(t->version) + ".txt");
    CHECK(t->text == file);
  }
}

TEST_CASE("template digests are frozen") {
  const auto digests = nlohmann::json::parse(slurp(rendered("template_sha256.json")));
  CHECK(sha256_hex(prompts::topic_naming().text) ==
        digests["topic_naming.v1"].get<std::string>());
  CHECK(sha256_hex(prompts::common_topics().text) ==
        digests["common_topics.v1"].get<std::string>());
  CHECK(sha256_hex(prompts::question_type().text) ==
        digests["question_type.v1"].get<std::string>());
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("render matches Python str.format byte for byte") {
  for (const auto* t : {&prompts::topic_naming(), &prompts::common_topics(),
                        &prompts::question_type()}) {
    const std::string v(t->version);
    const auto vars_json = nlohmann::json::parse(slurp(rendered(v + ".vars.json")));
    prompts::Vars vars;
    for (const auto& [k, val] : vars_json.items()) vars[k] = val.get<std::string>();
    CHECK(prompts::render(t->text, vars) == slurp(rendered(v + ".txt")));
  }
}

TEST_CASE("render: braces and errors") {
  CHECK(prompts::render("{{x}} {a}", {{"a", "1"}}) == "{x} 1");
  CHECK(prompts::render("{a}{a}", {{"a", "{b}"}}) == "{b}{b}");
  CHECK_THROWS_AS(prompts::render("{missing}", {}), Error);
  CHECK_THROWS_AS(prompts::render("a } b", {}), Error);
  CHECK_THROWS_AS(prompts::render("a { b", {}), Error);
  CHECK_THROWS_AS(prompts::render("{a:>4}", {{"a", "1"}}), Error);
  CHECK_THROWS_AS(prompts::render("{}", {}), Error);
}
