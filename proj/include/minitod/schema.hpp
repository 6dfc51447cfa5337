#pragma once

#include <compare>
#include <optional>
#include <string>
#include <vector>

namespace minitod {

struct BeliefTriplet {
  std::string domain;
  std::string slot;
  std::string value;
  auto operator<=>(const BeliefTriplet&) const = default;
};

// Canonical form: sorted by (domain, slot, value) with exact duplicates
// removed. Joint-goal scoring compares canonical states for set equality.
using BeliefState = std::vector<BeliefTriplet>;

BeliefState canonicalize(BeliefState state);

struct ActionTriplet {
  std::string domain;
  std::string act;
  std::string slot;
  auto operator<=>(const ActionTriplet&) const = default;
};

using ActionList = std::vector<ActionTriplet>;

// Alternating dialogue history. Turn t feeds user[0..t], system[0..t-1], so
// `user` is always exactly one utterance longer than `system` when a turn is
// being generated.
struct Context {
  std::vector<std::string> user;
  std::vector<std::string> system;
};

struct SerializeOptions {
  bool end_tokens = true;         // emit <|endof...|> closers
  bool user_system_tokens = true; // emit <|user|> / <|system|> role markers
};

// Slot names may span several words ("book people"), so the parser needs the
// closed slot vocabulary to know where a slot ends and its value begins.
struct SlotLexicon {
  std::vector<std::string> slot_names;

  // Longest known slot name that is a prefix of `words[from..]`; 0 if none.
  std::size_t match(const std::vector<std::string>& words,
                    std::size_t from) const;
};

std::string serialize_context(const Context& ctx,
                              const SerializeOptions& opts = {});
std::string serialize_belief(const BeliefState& state,
                             const SerializeOptions& opts = {});
std::string serialize_actions(const ActionList& actions,
                              const SerializeOptions& opts = {});
std::string serialize_response(const std::string& delex_response,
                               const SerializeOptions& opts = {});

// Full per-turn training sequence. The DB segment is passed pre-serialized
// (see serialize_db) and omitted entirely when absent.
std::string serialize_training_sequence(
    const Context& ctx, const BeliefState& belief,
    const std::optional<std::string>& db_segment, const ActionList& actions,
    const std::string& delex_response, const SerializeOptions& opts = {});

// Parsing never throws on malformed input: unparseable chunks are dropped and
// counted, and a missing opener yields an empty state with `failed` set.
struct ParsedBelief {
  BeliefState state;             // canonical
  BeliefState generation_order;  // as emitted, pre-canonicalization
  bool failed = false;           // no <|belief|> opener found
  bool closer_missing = false;
  int dropped_chunks = 0;
};

ParsedBelief parse_belief(const std::string& text, const SlotLexicon& slots);

struct ParsedActionResponse {
  ActionList actions;
  std::string response;
  bool action_opener_missing = false;
  bool action_closer_missing = false;
  bool response_opener_missing = false;
  bool response_closer_missing = false;
  int dropped_chunks = 0;
};

ParsedActionResponse parse_action_response(const std::string& text);

}  // namespace minitod
