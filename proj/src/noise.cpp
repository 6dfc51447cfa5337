#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "minitod/corpus.hpp"
#include "minitod/rng.hpp"
#include "minitod/text.hpp"

namespace minitod {
namespace {

// Informable value -> slots it can fill, first declaration wins for reporting.
using ValueIndex = std::map<std::string, std::vector<std::pair<std::string, std::string>>>;

ValueIndex informable_values(const Ontology& onto) {
  ValueIndex index;
  for (const auto& d : onto.domains) {
    for (const auto& s : d.informable) {
      for (const auto& v : s.values) index[v].emplace_back(d.name, s.name);
    }
  }
  return index;
}

std::vector<std::string> context_tokens(const Dialogue& d, std::size_t turn) {
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i <= turn; ++i) {
    for (auto& w : split_ws(d.turns[i].user)) tokens.push_back(std::move(w));
    if (i < turn) {
      for (auto& w : split_ws(d.turns[i].response_lex)) tokens.push_back(std::move(w));
    }
  }
  return tokens;
}

bool in_context(const std::vector<std::string>& ctx, const std::string& value) {
  return contains_subseq(ctx, split_ws(value));
}

// True when `part` is a strict contiguous token sub-phrase of `whole`.
bool is_subphrase(const std::string& part, const std::string& whole) {
  if (part == whole) return false;
  return contains_subseq(split_ws(whole), split_ws(part));
}

// Scans character windows of the flattened context for a stretch within edit
// distance 2 of `value`; returns the closest witness found, empty if none.
std::string near_context_text(const std::vector<std::string>& ctx,
                              const std::string& value) {
  const std::string text = join(ctx, " ");
  const std::size_t n = value.size();
  const std::size_t lo = n > 2 ? n - 2 : 1;
  const std::size_t hi = n + 2;
  std::string best;
  int best_dist = 3;
  for (std::size_t len = lo; len <= hi && len <= text.size(); ++len) {
    for (std::size_t start = 0; start + len <= text.size(); ++start) {
      std::string window = text.substr(start, len);
      if (window == value) continue;
      int d = edit_distance(window, value, 2);
      if (d < best_dist) {
        best_dist = d;
        best = window;
        if (best_dist == 1) return best;
      }
    }
  }
  return best;
}

struct TurnRef {
  std::size_t dialogue;
  std::size_t turn;
};

bool value_unique_in_belief(const BeliefState& belief, const std::string& value) {
  int count = 0;
  for (const auto& b : belief) {
    if (b.value == value) ++count;
  }
  return count == 1;
}

bool belief_contains(const BeliefState& belief, const BeliefTriplet& t) {
  return std::find(belief.begin(), belief.end(), t) != belief.end();
}

bool apply_t2(Turn& turn, const std::vector<std::string>& ctx,
              const ValueIndex& index, Rng& rng, NoiseRecord& rec) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < turn.belief.size(); ++i) {
    const BeliefTriplet& b = turn.belief[i];
    if (index.count(b.value) && value_unique_in_belief(turn.belief, b.value) &&
        in_context(ctx, b.value)) {
      eligible.push_back(i);
    }
  }
  if (eligible.empty()) return false;
  std::size_t pick = eligible[rng.below(eligible.size())];
  rec.type = NoiseType::t2;
  rec.original = turn.belief[pick];
  turn.belief.erase(turn.belief.begin() + pick);
  return true;
}

bool apply_t3(Turn& turn, const std::vector<std::string>& ctx,
              const Ontology& onto, Rng& rng, NoiseRecord& rec) {
  for (int attempt = 0; attempt < 30; ++attempt) {
    const DomainSpec& d = onto.domains[rng.below(onto.domains.size())];
    const SlotSpec& s = d.informable[rng.below(d.informable.size())];
    const std::string& v = s.values[rng.below(s.values.size())];
    BeliefTriplet cand{d.name, s.name, v};
    if (belief_contains(turn.belief, cand)) continue;
    bool value_labeled = false;
    for (const auto& b : turn.belief) {
      if (b.value == v) value_labeled = true;
    }
    if (value_labeled) continue;
    if (in_context(ctx, v)) continue;
    if (!near_context_text(ctx, v).empty()) continue;
    rec.type = NoiseType::t3;
    rec.corrupted = cand;
    turn.belief.push_back(cand);
    turn.belief = canonicalize(turn.belief);
    return true;
  }
  return false;
}

std::vector<std::string> misspellings(const std::string& value, Rng& rng) {
  std::vector<std::string> out;
  std::vector<std::string> tokens = split_ws(value);
  // Drop an inner character of a long token.
  for (std::size_t ti = 0; ti < tokens.size(); ++ti) {
    if (tokens[ti].size() < 4) continue;
    std::string tok = tokens[ti];
    std::size_t pos = 1 + rng.below(tok.size() - 2);
    tok.erase(pos, 1);
    std::vector<std::string> copy = tokens;
    copy[ti] = tok;
    out.push_back(join(copy, " "));
  }
  // Split a long token with a stray space.
  for (std::size_t ti = 0; ti < tokens.size(); ++ti) {
    if (tokens[ti].size() < 4) continue;
    std::size_t pos = 2 + rng.below(tokens[ti].size() - 3);
    std::vector<std::string> copy = tokens;
    copy[ti] = tokens[ti].substr(0, pos) + " " + tokens[ti].substr(pos);
    out.push_back(join(copy, " "));
  }
  // Lose the leading token of a multi-word value.
  if (tokens.size() >= 2) {
    out.push_back(join(std::vector<std::string>(tokens.begin() + 1, tokens.end()), " "));
  }
  rng.shuffle(out);
  return out;
}

bool apply_t4(Turn& turn, const std::vector<std::string>& ctx,
              const ValueIndex& index, Rng& rng, NoiseRecord& rec) {
  std::vector<std::size_t> order(turn.belief.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  for (std::size_t i : order) {
    const BeliefTriplet& b = turn.belief[i];
    if (!index.count(b.value) || !in_context(ctx, b.value)) continue;
    for (const std::string& corrupted : misspellings(b.value, rng)) {
      if (corrupted.empty() || corrupted == b.value) continue;
      if (index.count(corrupted)) continue;
      if (in_context(ctx, corrupted) && !is_subphrase(corrupted, b.value)) continue;
      rec.type = NoiseType::t4;
      rec.original = b;
      rec.corrupted = {b.domain, b.slot, corrupted};
      turn.belief[i].value = corrupted;
      turn.belief = canonicalize(turn.belief);
      return true;
    }
  }
  return false;
}

}  // namespace

NoiseResult inject_noise(const Corpus& corpus, const Ontology& ontology,
                         NoiseType type, double rate, uint64_t seed,
                         const std::set<std::pair<std::string, int>>& exclude) {
  if (type == NoiseType::t1) {
    throw std::invalid_argument(
        "t1 noise (ambiguous annotations) has no mechanical injection; "
        "only t2, t3 and t4 can be injected");
  }
  if (rate < 0.0 || rate > 1.0) {
    throw std::invalid_argument("noise rate must be in [0, 1]");
  }

  NoiseResult result;
  result.corpus = corpus;
  Rng rng(seed);
  ValueIndex index = informable_values(ontology);

  std::vector<TurnRef> turns;
  for (std::size_t di = 0; di < corpus.dialogues.size(); ++di) {
    const Dialogue& d = corpus.dialogues[di];
    for (std::size_t ti = 0; ti < d.turns.size(); ++ti) {
      if (exclude.count({d.id, int(ti)})) continue;
      turns.push_back({di, ti});
    }
  }
  rng.shuffle(turns);

  std::size_t target = std::size_t(rate * double(corpus.total_turns()));
  for (const TurnRef& ref : turns) {
    if (result.records.size() >= target) break;
    Dialogue& d = result.corpus.dialogues[ref.dialogue];
    Turn& turn = d.turns[ref.turn];
    std::vector<std::string> ctx = context_tokens(d, ref.turn);
    NoiseRecord rec;
    rec.dialogue_id = d.id;
    rec.turn = int(ref.turn);
    bool ok = false;
    switch (type) {
      case NoiseType::t2: ok = apply_t2(turn, ctx, index, rng, rec); break;
      case NoiseType::t3: ok = apply_t3(turn, ctx, ontology, rng, rec); break;
      case NoiseType::t4: ok = apply_t4(turn, ctx, index, rng, rec); break;
      case NoiseType::t1: break;
    }
    if (ok) result.records.push_back(std::move(rec));
  }
  return result;
}

std::vector<AuditFlag> audit_annotations(const Corpus& corpus,
                                         const Ontology& ontology) {
  ValueIndex index = informable_values(ontology);
  std::vector<AuditFlag> flags;

  for (const auto& d : corpus.dialogues) {
    for (std::size_t ti = 0; ti < d.turns.size(); ++ti) {
      const Turn& turn = d.turns[ti];
      std::vector<std::string> ctx = context_tokens(d, ti);
      auto add = [&](NoiseType type, const std::string& domain,
                     const std::string& slot, const std::string& value,
                     const std::string& evidence) {
        for (const auto& f : flags) {
          if (f.dialogue_id == d.id && f.turn == int(ti) && f.type == type &&
              f.value == value) {
            return;
          }
        }
        flags.push_back({d.id, int(ti), type, domain, slot, value, evidence});
      };

      for (const auto& b : turn.belief) {
        bool present = in_context(ctx, b.value);
        bool in_onto = index.count(b.value) > 0;
        if (present) {
          if (in_onto) continue;
          for (const auto& [u, slots] : index) {
            if (in_context(ctx, u) && is_subphrase(b.value, u)) {
              add(NoiseType::t4, b.domain, b.slot, b.value,
                  "label is a fragment of '" + u + "' uttered in context");
              break;
            }
          }
          continue;
        }
        std::string witness = near_context_text(ctx, b.value);
        if (!witness.empty()) {
          add(NoiseType::t4, b.domain, b.slot, b.value,
              "label not uttered; context contains nearby text '" + witness + "'");
        } else {
          add(NoiseType::t3, b.domain, b.slot, b.value,
              "label value does not appear in context");
        }
      }

      for (const auto& [u, slots] : index) {
        if (!in_context(ctx, u)) continue;
        bool covered = false;
        for (const auto& b : turn.belief) {
          if (b.value == u) {
            covered = true;
            break;
          }
          if (!index.count(b.value) &&
              (edit_distance(b.value, u, 2) <= 2 || is_subphrase(b.value, u))) {
            covered = true;  // a misspelled label already accounts for it
            break;
          }
        }
        if (!covered) {
          add(NoiseType::t2, slots.front().first, slots.front().second, u,
              "value uttered in context but never labeled");
        }
      }
    }
  }
  return flags;
}

}  // namespace minitod
