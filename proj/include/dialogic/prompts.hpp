#pragma once

#include <map>
#include <string>
#include <string_view>

namespace dialogic::prompts {

struct Template {
  std::string_view name;
  std::string_view version;  // part of every cache key and label-store key
  std::string_view text;
};

// Built into the binary from prompts/*.txt.
const Template& topic_naming();   // per-pair title; {text_snippet}
const Template& common_topics();  // per-segment synthesis; {title_set}, {num_topics}, {output_format}
const Template& question_type();  // {speaker_line}

using Vars = std::map<std::string, std::string, std::less<>>;

// str.format-style substitution: "{{" and "}}" are literal braces, "{name}"
// is replaced. Unknown names, format specs and stray braces are errors.
std::string render(std::string_view tmpl, const Vars& vars);

}  // namespace dialogic::prompts
