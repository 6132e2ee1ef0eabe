#include "dialogic/prompts.hpp"

#include <cstddef>

#include <fmt/format.h>

#include "dialogic/error.hpp"

namespace dialogic::embedded {
extern const char topic_naming_v1[];
extern const std::size_t topic_naming_v1_size;
extern const char common_topics_v1[];
extern const std::size_t common_topics_v1_size;
extern const char question_type_v1[];
extern const std::size_t question_type_v1_size;
}  // namespace dialogic::embedded

namespace dialogic::prompts {

const Template& topic_naming() {
  static const Template t{
      "topic_naming", "topic_naming.v1",
      {embedded::topic_naming_v1, embedded::topic_naming_v1_size}};
  return t;
}

const Template& common_topics() {
  static const Template t{
      "common_topics", "common_topics.v1",
      {embedded::common_topics_v1, embedded::common_topics_v1_size}};
  return t;
}

const Template& question_type() {
  static const Template t{
      "question_type", "question_type.v1",
      {embedded::question_type_v1, embedded::question_type_v1_size}};
  return t;
}

std::string render(std::string_view tmpl, const Vars& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    const char c = tmpl[i];
    if (c == '}') {
      if (i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
        out.push_back('}');
        i += 2;
        continue;
      }
      throw Error(ErrorCode::ConfigError,
                  fmt::format("single '}}' at offset {} in template", i));
    }
    if (c != '{') {
      out.push_back(c);
      ++i;
      continue;
    }
    if (i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
      out.push_back('{');
      i += 2;
      continue;
    }
    const std::size_t close = tmpl.find('}', i + 1);
    if (close == std::string_view::npos) {
      throw Error(ErrorCode::ConfigError,
                  fmt::format("unclosed '{{' at offset {} in template", i));
    }
    const std::string_view name = tmpl.substr(i + 1, close - i - 1);
    if (name.find_first_of("{:!.[") != std::string_view::npos || name.empty()) {
      throw Error(ErrorCode::ConfigError,
                  fmt::format("unsupported placeholder '{{{}}}'", name));
    }
    const auto it = vars.find(name);
    if (it == vars.end()) {
      throw Error(ErrorCode::ConfigError,
                  fmt::format("no value for placeholder '{{{}}}'", name));
    }
    out += it->second;
    i = close + 1;
  }
  return out;
}

}  // namespace dialogic::prompts
