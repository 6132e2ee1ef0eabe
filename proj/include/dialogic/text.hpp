#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace dialogic::text {

// ASCII whitespace only: space, \t, \n, \v, \f, \r.
bool is_space(char c) noexcept;

// Number of maximal non-whitespace runs.
std::size_t word_count(std::string_view s) noexcept;

std::vector<std::string_view> split_words(std::string_view s);

std::string_view trim(std::string_view s) noexcept;

std::string to_lower(std::string_view s);

// Lowercased runs of ASCII letters and digits. Everything else separates.
std::vector<std::string> alnum_tokens(std::string_view s);

// alnum_tokens minus a small English stopword list.
std::vector<std::string> content_words(std::string_view s);

bool is_stopword(std::string_view lowered) noexcept;

// First `n` whitespace tokens joined by single spaces.
std::string first_words(std::string_view s, std::size_t n);

std::vector<std::string_view> split_lines(std::string_view s);

}  // namespace dialogic::text
