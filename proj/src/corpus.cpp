#include "dialogic/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "dialogic/error.hpp"
#include "dialogic/parallel.hpp"
#include "dialogic/text.hpp"

namespace dialogic {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(SpeakerRole role) {
  switch (role) {
    case SpeakerRole::Interviewer: return "Interviewer";
    case SpeakerRole::Survivor: return "Survivor";
    case SpeakerRole::Other: return "Other";
  }
  return "Other";
}

SpeakerRole role_from_string(std::string_view s) {
  std::string lower = text::to_lower(s);
  if (lower == "interviewer") return SpeakerRole::Interviewer;
  if (lower == "survivor") return SpeakerRole::Survivor;
  if (lower == "other") return SpeakerRole::Other;
  throw Error(ErrorCode::InvalidArgument,
              fmt::format("unknown speaker role '{}'", s));
}

RoleMap::Rule::Rule(std::string p, SpeakerRole r)
    : pattern(std::move(p)), role(r) {
  try {
    compiled = std::regex(pattern, std::regex::ECMAScript);
  } catch (const std::regex_error& e) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("bad role pattern '{}': {}", pattern, e.what()));
  }
}

bool is_default_interviewer_label(std::string_view label) {
  if (!label.empty() && label.back() == ':') label.remove_suffix(1);
  if (label.size() < 3) return false;
  if (text::to_lower(label.substr(0, 3)) != "int") return false;
  return std::all_of(label.begin() + 3, label.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

SpeakerRole RoleMap::resolve(std::string_view label) const {
  const std::string owned(label);
  for (const auto& rule : rules) {
    if (std::regex_match(owned, rule.compiled)) return rule.role;
  }
  if (is_default_interviewer_label(label)) return SpeakerRole::Interviewer;
  if (strict) {
    throw Error(ErrorCode::UnresolvableSpeaker,
                fmt::format("speaker label '{}' matches no role rule", label));
  }
  return SpeakerRole::Survivor;
}

RoleMap RoleMap::from_json(const json& j) {
  RoleMap map;
  if (j.is_null()) return map;
  if (!j.is_object()) {
    throw Error(ErrorCode::ConfigError, "role map must be a JSON object");
  }
  map.strict = j.value("strict", false);
  if (j.contains("rules")) {
    for (const auto& r : j.at("rules")) {
      map.rules.emplace_back(r.at("pattern").get<std::string>(),
                             role_from_string(r.at("role").get<std::string>()));
    }
  }
  return map;
}

namespace {

// Splits on every LF; n newlines always give n + 1 parts.
std::vector<std::string_view> split_all_lines(std::string_view s) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    std::size_t nl = s.find('\n', start);
    if (nl == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, nl - start));
    start = nl + 1;
  }
}

bool is_label_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_' || c == '.' || c == '\'' ||
         c == '-';
}

constexpr std::size_t kMaxLabelLength = 32;

bool is_valid_label(std::string_view label) {
  if (label.empty() || label.size() > kMaxLabelLength) return false;
  char first = label.front();
  if (!((first >= 'a' && first <= 'z') || (first >= 'A' && first <= 'Z'))) {
    return false;
  }
  return std::all_of(label.begin(), label.end(), is_label_char);
}

struct SpeakerLine {
  std::string_view label;
  std::string_view rest;
};

std::optional<SpeakerLine> speaker_prefix(std::string_view line) {
  std::size_t b = 0;
  while (b < line.size() && text::is_space(line[b])) ++b;
  line.remove_prefix(b);
  std::size_t colon = line.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  std::string_view label = line.substr(0, colon);
  if (!is_valid_label(label)) return std::nullopt;
  return SpeakerLine{label, line.substr(colon + 1)};
}

void append_line(std::string& dst, std::string_view line) {
  dst.push_back('\n');
  dst.append(text::trim(line));
}

Testimony parse_plain(std::string_view raw, const RoleMap& role_map) {
  Testimony t;
  int line_no = 0;
  for (auto line : text::split_lines(raw)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    if (auto sp = speaker_prefix(line)) {
      if (!t.utterances.empty() &&
          t.utterances.back().speaker_label == sp->label) {
        append_line(t.utterances.back().text, sp->rest);
        continue;
      }
      Utterance u;
      u.speaker_label = std::string(sp->label);
      try {
        u.role = role_map.resolve(u.speaker_label);
      } catch (const Error& e) {
        throw Error(e.code(), e.what(), "", line_no);
      }
      u.text = std::string(text::trim(sp->rest));
      t.utterances.push_back(std::move(u));
    } else {
      if (t.utterances.empty()) {
        throw Error(ErrorCode::MalformedLine,
                    fmt::format("line {} has no speaker prefix", line_no), "",
                    line_no);
      }
      append_line(t.utterances.back().text, line);
    }
  }
  if (t.utterances.empty()) {
    throw Error(ErrorCode::EmptyTranscript, "transcript has no speaker turns");
  }
  normalize(t);
  return t;
}

std::optional<int> optional_year(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_number_integer()) {
    throw Error(ErrorCode::ManifestSchemaError,
                fmt::format("'{}' must be an integer or null", key));
  }
  return j.at(key).get<int>();
}

std::vector<std::string> string_list(const json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key) || j.at(key).is_null()) return out;
  if (!j.at(key).is_array()) {
    throw Error(ErrorCode::ManifestSchemaError,
                fmt::format("'{}' must be an array of strings", key));
  }
  for (const auto& v : j.at(key)) {
    if (!v.is_string()) {
      throw Error(ErrorCode::ManifestSchemaError,
                  fmt::format("'{}' must be an array of strings", key));
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

std::string canonical_text(std::string_view raw) {
  std::string out;
  bool first = true;
  for (auto line : split_all_lines(raw)) {
    if (!first) out.push_back('\n');
    first = false;
    out.append(text::trim(line));
  }
  return out;
}

void normalize(Testimony& t) {
  std::vector<Utterance> merged;
  merged.reserve(t.utterances.size());
  for (auto& u : t.utterances) {
    if (!merged.empty() && merged.back().speaker_label == u.speaker_label) {
      merged.back().text.push_back('\n');
      merged.back().text.append(u.text);
      continue;
    }
    merged.push_back(std::move(u));
  }
  t.total_words = 0;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    merged[i].index = i;
    merged[i].text = canonical_text(merged[i].text);
    merged[i].word_count = text::word_count(merged[i].text);
    t.total_words += merged[i].word_count;
  }
  t.utterances = std::move(merged);
}

Testimony parse_transcript(std::string_view raw, TranscriptFormat format,
                           const RoleMap& role_map) {
  if (format == TranscriptFormat::PlainText) return parse_plain(raw, role_map);
  json j;
  try {
    j = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedLine,
                fmt::format("invalid transcript JSON: {}", e.what()));
  }
  return testimony_from_json(j, role_map);
}

std::string to_plain_text(const Testimony& t) {
  std::string out;
  for (const auto& u : t.utterances) {
    if (!is_valid_label(u.speaker_label)) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("label '{}' cannot be written as plain text",
                              u.speaker_label));
    }
    for (auto line : split_all_lines(u.text)) {
      out.append(u.speaker_label);
      out.push_back(':');
      if (!line.empty()) {
        out.push_back(' ');
        out.append(line);
      }
      out.push_back('\n');
    }
  }
  return out;
}

json to_json(const Testimony& t) {
  json j;
  j["id"] = t.id;
  j["archive_id"] = t.archive_id;
  if (t.year) j["year"] = *t.year;
  j["interviewers"] = t.interviewers;
  json utts = json::array();
  for (const auto& u : t.utterances) {
    utts.push_back({{"speaker_label", u.speaker_label},
                    {"role", std::string(to_string(u.role))},
                    {"text", u.text}});
  }
  j["utterances"] = std::move(utts);
  return j;
}

Testimony testimony_from_json(const json& j, const RoleMap& role_map) {
  auto schema = [](const std::string& what) {
    return Error(ErrorCode::MalformedLine,
                 fmt::format("transcript JSON schema: {}", what));
  };
  if (!j.is_object()) throw schema("top level must be an object");
  Testimony t;
  try {
    t.id = j.value("id", std::string{});
    t.archive_id = j.value("archive_id", std::string{});
  } catch (const json::exception&) {
    throw schema("'id' and 'archive_id' must be strings");
  }
  try {
    t.year = optional_year(j, "year");
    t.interviewers = string_list(j, "interviewers");
  } catch (const Error& e) {
    throw schema(e.what());
  }
  if (!j.contains("utterances") || !j.at("utterances").is_array()) {
    throw schema("'utterances' must be an array");
  }
  for (const auto& ju : j.at("utterances")) {
    if (!ju.is_object() || !ju.contains("speaker_label") ||
        !ju.at("speaker_label").is_string() || !ju.contains("text") ||
        !ju.at("text").is_string()) {
      throw schema("each utterance needs string 'speaker_label' and 'text'");
    }
    Utterance u;
    u.speaker_label = ju.at("speaker_label").get<std::string>();
    if (ju.contains("role") && !ju.at("role").is_null()) {
      u.role = role_from_string(ju.at("role").get<std::string>());
    } else {
      u.role = role_map.resolve(u.speaker_label);
    }
    u.text = ju.at("text").get<std::string>();
    t.utterances.push_back(std::move(u));
  }
  if (t.utterances.empty()) {
    throw Error(ErrorCode::EmptyTranscript, "transcript has no utterances");
  }
  normalize(t);
  return t;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::MissingFile,
                fmt::format("cannot open '{}'", path.string()), path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoError,
                fmt::format("cannot write '{}'", path.string()), path.string());
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(ErrorCode::IoError,
                fmt::format("short write to '{}'", path.string()),
                path.string());
  }
}

namespace {

struct ManifestEntry {
  fs::path path;
  std::optional<std::string> id;
  std::string archive_id;
  std::optional<int> year;
  bool has_interviewers = false;
  std::vector<std::string> interviewers;
  TranscriptFormat format = TranscriptFormat::PlainText;
};

std::vector<ManifestEntry> read_manifest(const fs::path& manifest_path) {
  const std::string raw = read_file(manifest_path);
  json j;
  try {
    j = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ManifestSchemaError,
                fmt::format("manifest is not valid JSON: {}", e.what()),
                manifest_path.string());
  }
  if (!j.is_array()) {
    throw Error(ErrorCode::ManifestSchemaError, "manifest must be a JSON array",
                manifest_path.string());
  }
  const fs::path base = manifest_path.parent_path();
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    auto fail = [&](const std::string& what) {
      return Error(ErrorCode::ManifestSchemaError,
                   fmt::format("manifest entry {}: {}", i, what),
                   manifest_path.string());
    };
    if (!e.is_object()) throw fail("must be an object");
    if (!e.contains("path") || !e.at("path").is_string()) {
      throw fail("missing string 'path'");
    }
    if (!e.contains("archive_id") || !e.at("archive_id").is_string()) {
      throw fail("missing string 'archive_id'");
    }
    ManifestEntry m;
    fs::path p = e.at("path").get<std::string>();
    m.path = p.is_absolute() ? p : base / p;
    m.archive_id = e.at("archive_id").get<std::string>();
    if (e.contains("id")) {
      if (!e.at("id").is_string()) throw fail("'id' must be a string");
      m.id = e.at("id").get<std::string>();
    }
    try {
      m.year = optional_year(e, "year");
      m.has_interviewers = e.contains("interviewers");
      m.interviewers = string_list(e, "interviewers");
    } catch (const Error& err) {
      throw fail(err.what());
    }
    std::string fmt_name;
    if (e.contains("format")) {
      if (!e.at("format").is_string()) throw fail("'format' must be a string");
      fmt_name = e.at("format").get<std::string>();
    } else {
      fmt_name = m.path.extension() == ".json" ? "json" : "text";
    }
    if (fmt_name == "json") {
      m.format = TranscriptFormat::Json;
    } else if (fmt_name == "text") {
      m.format = TranscriptFormat::PlainText;
    } else {
      throw fail(fmt::format("unknown format '{}'", fmt_name));
    }
    entries.push_back(std::move(m));
  }
  return entries;
}

std::string corpus_name_for(const fs::path& manifest_path) {
  std::string stem = manifest_path.stem().string();
  if (stem == "manifest") {
    fs::path parent = fs::absolute(manifest_path).parent_path();
    if (!parent.filename().empty()) return parent.filename().string();
  }
  return stem.empty() ? std::string("corpus") : stem;
}

}  // namespace

Corpus load_corpus(const fs::path& manifest_path, const RoleMap& role_map) {
  if (!fs::exists(manifest_path)) {
    throw Error(ErrorCode::MissingFile,
                fmt::format("manifest '{}' not found", manifest_path.string()),
                manifest_path.string());
  }
  const auto entries = read_manifest(manifest_path);
  for (const auto& e : entries) {
    if (!fs::exists(e.path)) {
      throw Error(ErrorCode::MissingFile,
                  fmt::format("transcript '{}' not found", e.path.string()),
                  e.path.string());
    }
  }

  std::vector<Testimony> parsed(entries.size());
  parallel_for(entries.size(), default_workers(), [&](std::size_t i) {
    const auto& e = entries[i];
    try {
      Testimony t = parse_transcript(read_file(e.path), e.format, role_map);
      if (e.id) {
        t.id = *e.id;
      } else if (t.id.empty()) {
        t.id = e.path.stem().string();
      }
      t.archive_id = e.archive_id;
      if (e.year || e.format == TranscriptFormat::PlainText) t.year = e.year;
      if (e.has_interviewers) t.interviewers = e.interviewers;
      parsed[i] = std::move(t);
    } catch (const Error& err) {
      throw err.with_file(e.path.string());
    }
  });

  std::set<std::string> seen;
  for (const auto& t : parsed) {
    if (!seen.insert(t.id).second) {
      throw Error(ErrorCode::DuplicateId,
                  fmt::format("testimony id '{}' appears more than once", t.id),
                  manifest_path.string());
    }
  }
  std::sort(parsed.begin(), parsed.end(),
            [](const Testimony& a, const Testimony& b) { return a.id < b.id; });
  return Corpus{corpus_name_for(manifest_path), std::move(parsed)};
}

void write_corpus(const Corpus& corpus, const fs::path& dir) {
  json manifest = json::array();
  for (const auto& t : corpus.testimonies) {
    if (t.id.empty() || t.id.find_first_of("/\\") != std::string::npos ||
        t.id == "." || t.id == "..") {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("testimony id '{}' is not a safe file name",
                              t.id));
    }
    const std::string rel = "transcripts/" + t.id + ".json";
    write_file(dir / rel, to_json(t).dump(1) + "\n");
    json entry;
    entry["path"] = rel;
    entry["id"] = t.id;
    entry["archive_id"] = t.archive_id;
    if (t.year) entry["year"] = *t.year;
    entry["interviewers"] = t.interviewers;
    manifest.push_back(std::move(entry));
  }
  write_file(dir / "manifest.json", manifest.dump(1) + "\n");
}

std::vector<std::pair<std::string, std::size_t>> interviewer_distribution(
    const Corpus& corpus) {
  std::map<std::string, std::size_t> counts;
  for (const auto& t : corpus.testimonies) {
    std::set<std::string> named(t.interviewers.begin(), t.interviewers.end());
    for (const auto& name : named) ++counts[name];
  }
  std::vector<std::pair<std::string, std::size_t>> out(counts.begin(),
                                                       counts.end());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;
  });
  return out;
}

std::vector<YearCount> year_distribution(const Corpus& corpus) {
  std::map<int, std::size_t> known;
  std::size_t unknown = 0;
  for (const auto& t : corpus.testimonies) {
    if (t.year) {
      ++known[*t.year];
    } else {
      ++unknown;
    }
  }
  std::vector<YearCount> out;
  for (const auto& [year, n] : known) out.push_back({year, n});
  if (unknown > 0) out.push_back({std::nullopt, unknown});
  return out;
}

}  // namespace dialogic
