#include "dialogic/text.hpp"

#include <algorithm>
#include <array>

#include "dialogic/error.hpp"

namespace dialogic {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::EmptyTranscript: return "EmptyTranscript";
    case ErrorCode::UnresolvableSpeaker: return "UnresolvableSpeaker";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::ManifestSchemaError: return "ManifestSchemaError";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::MismatchedSeries: return "MismatchedSeries";
    case ErrorCode::EmptyQuestion: return "EmptyQuestion";
    case ErrorCode::InsufficientTitles: return "InsufficientTitles";
    case ErrorCode::AuthError: return "AuthError";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::ProviderError: return "ProviderError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::UnscriptedPrompt: return "UnscriptedPrompt";
    case ErrorCode::InvalidProfile: return "InvalidProfile";
    case ErrorCode::SpecError: return "SpecError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace text {

bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' ||
         c == '\r';
}

std::size_t word_count(std::string_view s) noexcept {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : s) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

std::vector<std::string_view> split_words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string_view trim(std::string_view s) noexcept {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(c >= 'A' && c <= 'Z' ? c + ('a' - 'A') : c);
  });
  return out;
}

namespace {

bool is_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9');
}

constexpr auto kStopwords = std::to_array<std::string_view>({
    "a",     "about", "after", "against", "an",   "and",    "are",
    "as",    "at",    "be",    "before",  "being", "between", "by",
    "during", "for",  "from",  "had",     "has",  "have",   "his",
    "her",   "in",    "into",  "is",      "it",   "its",    "of",
    "on",    "or",    "our",   "over",    "the",  "their",  "through",
    "to",    "under", "until", "was",     "were", "while",  "with",
    "within", "without"});

}  // namespace

bool is_stopword(std::string_view lowered) noexcept {
  return std::find(kStopwords.begin(), kStopwords.end(), lowered) !=
         kStopwords.end();
}

std::vector<std::string> alnum_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && !is_alnum(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && is_alnum(s[j])) ++j;
    if (j > i) out.push_back(to_lower(s.substr(i, j - i)));
    i = j;
  }
  return out;
}

std::vector<std::string> content_words(std::string_view s) {
  auto tokens = alnum_tokens(s);
  std::erase_if(tokens, [](const std::string& t) { return is_stopword(t); });
  return tokens;
}

std::string first_words(std::string_view s, std::size_t n) {
  std::string out;
  std::size_t taken = 0;
  for (auto w : split_words(s)) {
    if (taken == n) break;
    if (taken > 0) out.push_back(' ');
    out.append(w);
    ++taken;
  }
  return out;
}

std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < s.size()) {
    std::size_t nl = s.find('\n', start);
    std::size_t end = nl == std::string_view::npos ? s.size() : nl;
    std::string_view line = s.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return out;
}

}  // namespace text
}  // namespace dialogic
