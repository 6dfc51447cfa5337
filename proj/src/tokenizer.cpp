#include "minitod/tokenizer.hpp"

#include <fstream>
#include <stdexcept>

#include "minitod/text.hpp"

namespace minitod {

namespace tok {
std::vector<std::string> segment_specials() {
  return {kContext, kEndOfContext, kUser,     kSystem,      kBelief,
          kEndOfBelief, kDb,       kEndOfDb,  kAction,      kEndOfAction,
          kResponse, kEndOfResponse, kPad};
}
}  // namespace tok

void Vocab::add(const std::string& token, bool special) {
  if (index_.count(token)) return;
  index_[token] = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  special_.push_back(special ? 1 : 0);
  if (special) special_tokens_.push_back(token);
}

Vocab Vocab::build(const std::vector<std::string>& texts,
                   const std::vector<std::string>& specials) {
  Vocab v;
  for (const auto& s : specials) v.add(s, true);
  v.add(tok::kUnk, true);
  v.unk_id_ = v.index_.at(tok::kUnk);
  for (const auto& text : texts) {
    for (const auto& w : split_ws(text)) v.add(w, false);
  }
  return v;
}

int Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? -1 : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw std::out_of_range("Vocab::token: id " + std::to_string(id) +
                            " outside vocabulary of size " +
                            std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocab::is_special(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= special_.size()) return false;
  return special_[static_cast<std::size_t>(id)] != 0;
}

namespace {

// Splits one whitespace-delimited chunk into plain-word and special-marker
// pieces, matching the longest special at the earliest position.
void split_specials(const std::string& chunk,
                    const std::vector<std::string>& specials,
                    std::vector<std::string>& out) {
  std::size_t best_pos = std::string::npos;
  std::size_t best_len = 0;
  for (const auto& s : specials) {
    std::size_t pos = chunk.find(s);
    if (pos == std::string::npos) continue;
    if (pos < best_pos || (pos == best_pos && s.size() > best_len)) {
      best_pos = pos;
      best_len = s.size();
    }
  }
  if (best_pos == std::string::npos) {
    out.push_back(chunk);
    return;
  }
  if (best_pos > 0) out.push_back(chunk.substr(0, best_pos));
  out.push_back(chunk.substr(best_pos, best_len));
  if (best_pos + best_len < chunk.size()) {
    split_specials(chunk.substr(best_pos + best_len), specials, out);
  }
}

}  // namespace

std::vector<int> Vocab::encode(const std::string& text,
                               std::size_t max_len) const {
  std::vector<int> ids;
  for (const auto& chunk : split_ws(text)) {
    std::vector<std::string> pieces;
    split_specials(chunk, special_tokens_, pieces);
    for (const auto& p : pieces) {
      if (ids.size() >= max_len) return ids;
      int tid = id(p);
      ids.push_back(tid >= 0 ? tid : unk_id_);
    }
  }
  if (ids.size() > max_len) ids.resize(max_len);
  return ids;
}

std::string Vocab::decode(const std::vector<int>& ids) const {
  std::vector<std::string> words;
  words.reserve(ids.size());
  for (int i : ids) words.push_back(token(i));
  return join(words);
}

void Vocab::save(const std::string& path) const {
  std::string out;
  for (const auto& t : tokens_) {
    out += t;
    out += '\n';
  }
  write_text_file(path, out);
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocab file: " + path);
  Vocab v;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    // Marker-shaped tokens keep their atomic-match behaviour after a reload.
    bool special = (line.size() > 4 && line.rfind("<|", 0) == 0 &&
                    line.compare(line.size() - 2, 2, "|>") == 0) ||
                   line == tok::kUnk;
    v.add(line, special);
  }
  v.unk_id_ = v.id(tok::kUnk);
  if (v.unk_id_ < 0) throw std::runtime_error("vocab file lacks <unk>: " + path);
  return v;
}

}  // namespace minitod
