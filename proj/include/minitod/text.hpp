#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace minitod {

std::vector<std::string> split_ws(const std::string& text);
std::string join(const std::vector<std::string>& tokens, const std::string& sep = " ");
std::string lower(std::string s);

// Lowercase, trim, and collapse internal whitespace runs to single spaces.
// Applied to every value before storage or comparison so that matching is
// insensitive to case and spacing.
std::string normalize_value(const std::string& s);

// True when `needle` occurs as a contiguous run inside `hay`.
bool contains_subseq(const std::vector<std::string>& hay,
                     const std::vector<std::string>& needle);

// Levenshtein distance, early-exited once it exceeds `cap` (returns cap + 1).
std::size_t edit_distance(const std::string& a, const std::string& b,
                          std::size_t cap);

uint64_t fnv1a64(const std::string& data);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace minitod
