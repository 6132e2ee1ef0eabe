#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace dialogic {

enum class SpeakerRole { Interviewer, Survivor, Other };

std::string_view to_string(SpeakerRole role);
SpeakerRole role_from_string(std::string_view s);

struct Utterance {
  std::size_t index = 0;
  std::string speaker_label;
  SpeakerRole role = SpeakerRole::Survivor;
  std::string text;
  std::size_t word_count = 0;

  bool operator==(const Utterance&) const = default;
};

struct Testimony {
  std::string id;
  std::string archive_id;
  std::optional<int> year;
  std::vector<std::string> interviewers;
  std::vector<Utterance> utterances;
  std::size_t total_words = 0;

  bool operator==(const Testimony&) const = default;
};

struct Corpus {
  std::string name;
  std::vector<Testimony> testimonies;
};

enum class TranscriptFormat { PlainText, Json };

// Maps raw speaker labels to roles. Explicit rules are tried first, in
// order; then the built-in interviewer rule (INT, case-insensitive, with
// optional trailing digits or colon); then everything else is Survivor
// unless `strict` is set, in which case unmatched labels are an error.
struct RoleMap {
  struct Rule {
    Rule(std::string pattern, SpeakerRole role);

    std::string pattern;  // ECMAScript regex, full match against the label
    SpeakerRole role;
    std::regex compiled;
  };
  std::vector<Rule> rules;
  bool strict = false;

  SpeakerRole resolve(std::string_view label) const;

  static RoleMap from_json(const nlohmann::json& j);
};

bool is_default_interviewer_label(std::string_view label);

// Canonical utterance text: lines split on LF, each stripped of surrounding
// whitespace, rejoined with LF.
std::string canonical_text(std::string_view raw);

// Recomputes indices, word counts and total_words, and coalesces
// consecutive utterances that share a speaker label.
void normalize(Testimony& t);

Testimony parse_transcript(std::string_view raw, TranscriptFormat format,
                           const RoleMap& role_map = {});

std::string to_plain_text(const Testimony& t);

nlohmann::json to_json(const Testimony& t);
Testimony testimony_from_json(const nlohmann::json& j,
                              const RoleMap& role_map = {});

Corpus load_corpus(const std::filesystem::path& manifest_path,
                   const RoleMap& role_map = {});

// Writes <dir>/transcripts/<id>.json and <dir>/manifest.json.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

std::vector<std::pair<std::string, std::size_t>> interviewer_distribution(
    const Corpus& corpus);

struct YearCount {
  std::optional<int> year;  // nullopt is the "unknown" bucket
  std::size_t count = 0;

  bool operator==(const YearCount&) const = default;
};

// Ascending by year; the unknown bucket, if any, comes last.
std::vector<YearCount> year_distribution(const Corpus& corpus);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace dialogic
