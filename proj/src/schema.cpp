#include "minitod/schema.hpp"

#include <algorithm>
#include <stdexcept>

#include "minitod/text.hpp"
#include "minitod/tokenizer.hpp"

namespace minitod {

BeliefState canonicalize(BeliefState state) {
  std::sort(state.begin(), state.end());
  state.erase(std::unique(state.begin(), state.end()), state.end());
  return state;
}

std::size_t SlotLexicon::match(const std::vector<std::string>& words,
                               std::size_t from) const {
  std::size_t best = 0;
  for (const auto& name : slot_names) {
    auto parts = split_ws(name);
    if (parts.size() <= best || from + parts.size() > words.size()) continue;
    if (std::equal(parts.begin(), parts.end(), words.begin() + from)) {
      best = parts.size();
    }
  }
  return best;
}

std::string serialize_context(const Context& ctx, const SerializeOptions& opts) {
  if (ctx.user.empty() || ctx.user.size() != ctx.system.size() + 1) {
    throw std::invalid_argument(
        "serialize_context: history must alternate user/system and both start "
        "and end with a user utterance");
  }
  std::string out = tok::kContext;
  for (std::size_t i = 0; i < ctx.user.size(); ++i) {
    if (opts.user_system_tokens) out += std::string(" ") + tok::kUser;
    out += " " + ctx.user[i];
    if (i < ctx.system.size()) {
      if (opts.user_system_tokens) out += std::string(" ") + tok::kSystem;
      out += " " + ctx.system[i];
    }
  }
  if (opts.end_tokens) out += std::string(" ") + tok::kEndOfContext;
  return out;
}

namespace {

// Chunks are joined with a free-standing comma token so that multi-word
// values survive the whitespace tokenizer intact.
std::string join_chunks(const std::vector<std::string>& chunks) {
  std::string out;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (i) out += " ,";
    out += " " + chunks[i];
  }
  return out;
}

}  // namespace

std::string serialize_belief(const BeliefState& state,
                             const SerializeOptions& opts) {
  std::vector<std::string> chunks;
  for (const auto& t : canonicalize(state)) {
    chunks.push_back(t.domain + " " + t.slot + " " + t.value);
  }
  std::string out = tok::kBelief;
  out += join_chunks(chunks);
  if (opts.end_tokens) out += std::string(" ") + tok::kEndOfBelief;
  return out;
}

std::string serialize_actions(const ActionList& actions,
                              const SerializeOptions& opts) {
  std::vector<std::string> chunks;
  for (const auto& a : actions) {
    chunks.push_back(a.domain + " " + a.act + " " + a.slot);
  }
  std::string out = tok::kAction;
  out += join_chunks(chunks);
  if (opts.end_tokens) out += std::string(" ") + tok::kEndOfAction;
  return out;
}

std::string serialize_response(const std::string& delex_response,
                               const SerializeOptions& opts) {
  std::string out = tok::kResponse;
  if (!delex_response.empty()) out += " " + delex_response;
  if (opts.end_tokens) out += std::string(" ") + tok::kEndOfResponse;
  return out;
}

std::string serialize_training_sequence(
    const Context& ctx, const BeliefState& belief,
    const std::optional<std::string>& db_segment, const ActionList& actions,
    const std::string& delex_response, const SerializeOptions& opts) {
  std::string out = serialize_context(ctx, opts);
  out += " " + serialize_belief(belief, opts);
  if (db_segment) out += " " + *db_segment;
  out += " " + serialize_actions(actions, opts);
  out += " " + serialize_response(delex_response, opts);
  return out;
}

namespace {

std::vector<std::vector<std::string>> split_on_commas(
    const std::vector<std::string>& words) {
  std::vector<std::vector<std::string>> chunks(1);
  for (const auto& w : words) {
    if (w == ",") {
      chunks.emplace_back();
    } else {
      chunks.back().push_back(w);
    }
  }
  return chunks;
}

// Locates the span strictly between `opener` and `closer`. Returns false when
// the opener is absent; an absent closer extends the span to the end.
bool find_span(const std::vector<std::string>& words, const char* opener,
               const char* closer, std::size_t& begin, std::size_t& end,
               bool& closer_missing) {
  auto it = std::find(words.begin(), words.end(), opener);
  if (it == words.end()) return false;
  begin = static_cast<std::size_t>(it - words.begin()) + 1;
  auto ce = std::find(words.begin() + begin, words.end(), closer);
  closer_missing = (ce == words.end());
  end = static_cast<std::size_t>(ce - words.begin());
  return true;
}

}  // namespace

ParsedBelief parse_belief(const std::string& text, const SlotLexicon& slots) {
  ParsedBelief out;
  auto words = split_ws(text);
  std::size_t begin = 0, end = 0;
  if (!find_span(words, tok::kBelief, tok::kEndOfBelief, begin, end,
                 out.closer_missing)) {
    out.failed = true;
    return out;
  }
  std::vector<std::string> span(words.begin() + begin, words.begin() + end);
  for (const auto& chunk : split_on_commas(span)) {
    if (chunk.empty()) continue;
    if (chunk.size() < 3) {
      ++out.dropped_chunks;
      continue;
    }
    BeliefTriplet t;
    t.domain = chunk[0];
    std::size_t slot_words = slots.match(chunk, 1);
    if (slot_words == 0) slot_words = 1;  // unknown slot: single-word fallback
    if (1 + slot_words >= chunk.size()) {
      ++out.dropped_chunks;  // no words left for the value
      continue;
    }
    t.slot = join(std::vector<std::string>(chunk.begin() + 1,
                                           chunk.begin() + 1 + slot_words));
    t.value = join(std::vector<std::string>(chunk.begin() + 1 + slot_words,
                                            chunk.end()));
    out.generation_order.push_back(t);
  }
  out.state = canonicalize(out.generation_order);
  return out;
}

ParsedActionResponse parse_action_response(const std::string& text) {
  ParsedActionResponse out;
  auto words = split_ws(text);

  std::size_t begin = 0, end = 0;
  bool closer_missing = false;
  if (!find_span(words, tok::kAction, tok::kEndOfAction, begin, end,
                 closer_missing)) {
    out.action_opener_missing = true;
  } else {
    out.action_closer_missing = closer_missing;
    std::vector<std::string> span(words.begin() + begin, words.begin() + end);
    for (const auto& chunk : split_on_commas(span)) {
      if (chunk.empty()) continue;
      if (chunk.size() != 3) {
        ++out.dropped_chunks;
        continue;
      }
      out.actions.push_back({chunk[0], chunk[1], chunk[2]});
    }
  }

  if (!find_span(words, tok::kResponse, tok::kEndOfResponse, begin, end,
                 closer_missing)) {
    out.response_opener_missing = true;
  } else {
    out.response_closer_missing = closer_missing;
    out.response = join(
        std::vector<std::string>(words.begin() + begin, words.begin() + end));
  }
  return out;
}

}  // namespace minitod
