#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace minitod {

// Segment marker tokens used by the single-sequence serialization. Every
// training sequence is plain text built from these plus ordinary words, so a
// whitespace-level tokenizer round-trips it exactly.
namespace tok {
inline constexpr const char* kContext = "<|context|>";
inline constexpr const char* kEndOfContext = "<|endofcontext|>";
inline constexpr const char* kUser = "<|user|>";
inline constexpr const char* kSystem = "<|system|>";
inline constexpr const char* kBelief = "<|belief|>";
inline constexpr const char* kEndOfBelief = "<|endofbelief|>";
inline constexpr const char* kDb = "<|db|>";
inline constexpr const char* kEndOfDb = "<|endofdb|>";
inline constexpr const char* kAction = "<|action|>";
inline constexpr const char* kEndOfAction = "<|endofaction|>";
inline constexpr const char* kResponse = "<|response|>";
inline constexpr const char* kEndOfResponse = "<|endofresponse|>";
inline constexpr const char* kPad = "<|pad|>";
inline constexpr const char* kUnk = "<unk>";

// The twelve segment markers plus the padding token, in canonical id order.
std::vector<std::string> segment_specials();
}  // namespace tok

// Word-level vocabulary. Ids are assigned specials first (in the order given),
// then <unk>, then corpus tokens by first occurrence, so a rebuild from the
// same corpus is always identical.
class Vocab {
 public:
  static Vocab build(const std::vector<std::string>& texts,
                     const std::vector<std::string>& specials);

  std::size_t size() const { return tokens_.size(); }
  int id(const std::string& token) const;  // -1 when absent
  const std::string& token(int id) const;  // throws on out-of-range ids
  int unk_id() const { return unk_id_; }
  bool contains(const std::string& token) const { return id(token) >= 0; }
  bool is_special(int id) const;

  // Whitespace tokenization with special markers matched atomically even when
  // they abut other characters ("ely<|endofbelief|>" yields two tokens).
  // Unknown words map to <unk>; output is truncated to max_len ids.
  std::vector<int> encode(const std::string& text,
                          std::size_t max_len = 1024) const;

  // Joins tokens with single spaces. Out-of-range ids throw.
  std::string decode(const std::vector<int>& ids) const;

  // Line-oriented persistence: one token per line, line number = id.
  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::vector<char> special_;
  std::vector<std::string> special_tokens_;
  std::unordered_map<std::string, int> index_;
  int unk_id_ = -1;

  void add(const std::string& token, bool special);
};

}  // namespace minitod
