#include "dialogic/offline.hpp"

#include <algorithm>
#include <map>
#include <regex>
#include <string>

#include <fmt/format.h>
#include <json.hpp>

#include "dialogic/classify.hpp"
#include "dialogic/synth.hpp"
#include "dialogic/text.hpp"
#include "dialogic/topics.hpp"

namespace dialogic {

namespace {

// Text between the first `open` marker and the last double quote.
std::string_view quoted_tail(std::string_view prompt, std::string_view open) {
  const auto start = prompt.find(open);
  if (start == std::string_view::npos) return {};
  const auto body = prompt.substr(start + open.size());
  const auto end = body.rfind('"');
  return end == std::string_view::npos ? body : body.substr(0, end);
}

std::string name_reply(const CompletionRequest& r) {
  const auto snippet = quoted_tail(r.prompt, "Text snippet:\n\"");
  std::map<std::string, std::size_t> keyword_topic;
  const auto& catalog = topic_catalog();
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    for (const auto& kw : catalog[i].keywords) keyword_topic.emplace(kw, i);
  }
  std::vector<std::size_t> hits(catalog.size(), 0);
  for (auto line : text::split_lines(snippet)) {
    if (line.starts_with("INT")) continue;
    for (const auto& tok : text::alnum_tokens(line)) {
      if (auto it = keyword_topic.find(tok); it != keyword_topic.end()) {
        ++hits[it->second];
      }
    }
  }
  const auto best = std::max_element(hits.begin(), hits.end());
  if (*best == 0) {
    return fmt::format("Title: \"{}\"\nReason: \"No catalog keyword found.\"",
                       kFallbackTopicTitle);
  }
  const auto& topic = catalog[static_cast<std::size_t>(best - hits.begin())];
  return fmt::format("Title: \"{}\"\nReason: \"{} keyword mentions.\"",
                     topic.title, *best);
}

std::string synthesis_reply(const CompletionRequest& r) {
  static const std::regex count_re("Generate ([0-9]+) distinct");
  static const std::regex item_re("^- (.*) \\(\xC3\x97([0-9]+)\\)$");
  std::smatch m;
  std::size_t wanted = 1;
  if (std::regex_search(r.prompt, m, count_re)) wanted = std::stoul(m[1]);
  std::vector<std::pair<std::string, std::size_t>> items;
  for (auto line : text::split_lines(r.prompt)) {
    const std::string l(line);
    if (std::regex_match(l, m, item_re) && !has_conjunction(m[1].str())) {
      items.emplace_back(m[1], std::stoul(m[2]));
    }
  }
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::string out;
  for (std::size_t i = 0; i < std::min(wanted, items.size()); ++i) {
    out += i == 0 ? items[i].first : fmt::format("\n{}. {}", i + 1, items[i].first);
  }
  return out;
}

std::string type_reply(const CompletionRequest& r) {
  const std::string line(quoted_tail(r.prompt, "Interviewer Question: \""));
  const auto type = line.empty() ? QuestionType::Other : classify_rule(line);
  const nlohmann::json j = {
      {"type", to_string(type)},
      {"explanation", type == QuestionType::Other
                          ? "The question does not open with a wh-word."
                          : fmt::format("The question opens with '{}'.",
                                        text::to_lower(to_string(type)))}};
  return j.dump(4);
}

}  // namespace

std::shared_ptr<MockProvider> make_offline_mock() {
  auto mock = std::make_shared<MockProvider>();
  mock->when_contains("Text snippet:", name_reply);
  mock->when_contains("Title Set:", synthesis_reply);
  mock->when_contains("Interviewer Question:", type_reply);
  return mock;
}

}  // namespace dialogic
