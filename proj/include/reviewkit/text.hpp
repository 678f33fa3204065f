#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace reviewkit {

// Deterministic, tokenizer-free token estimate: ceil(1.3 * word count),
// words split on whitespace. An estimate, not billing-grade accounting.
long token_estimate(std::string_view text);

long word_count(std::string_view text);

std::vector<std::string> split_words(std::string_view text);

std::string trim(std::string_view text);

std::string to_lower(std::string_view text);

// Collapses all whitespace runs to single spaces and trims the ends.
std::string normalize_whitespace(std::string_view text);

// Whitespace-insensitive substring test; used for evidence verification.
bool contains_normalized(std::string_view haystack, std::string_view needle);

bool starts_with(std::string_view s, std::string_view prefix);

std::vector<std::string> split_lines(std::string_view text);

// Stable non-cryptographic 64-bit FNV-1a hash. Stability across runs is the
// requirement; collision resistance is not.
std::uint64_t fnv1a64(std::string_view data);

// Formats a double with the shortest representation that round-trips;
// integral values print without a decimal point ("6", not "6.0").
std::string format_number(double value);

} // namespace reviewkit
