#pragma once

#include <string>
#include <vector>

#include "minitod/database.hpp"
#include "minitod/ontology.hpp"
#include "minitod/schema.hpp"

namespace minitod {

// Marker used for DB match counts mentioned in responses; it resolves from
// the summary rather than from any entity attribute.
inline constexpr const char* kCountMarker = "[value_count]";

bool is_placeholder(const std::string& token);

// Surface-form rewriting between lexicalized responses and their placeholder
// form. Replacement works on whitespace tokens: known values (entity
// attributes first, belief values second, both longest-match-first) become
// their slot markers, then leftover bare tokens matching the generic time
// (hh:mm), price (d.dd) or integer patterns become [value_time],
// [value_price] and [value_count]. Placeholder tokens are never rewritten, so
// the operation is idempotent.
class Lexicon {
 public:
  explicit Lexicon(const Ontology& ontology) : ontology_(&ontology) {}

  std::string delexicalize(const std::string& response, const EntityRow* row,
                           const BeliefState& belief) const;

  struct LexResult {
    std::string text;
    std::vector<std::string> unresolved;  // markers left verbatim
  };

  // Fills markers from the first row's attributes (in attribute order), then
  // belief values (canonical order), then the match count. When one marker
  // serves several slots, its k-th occurrence takes the k-th candidate; the
  // last candidate repeats if occurrences outnumber candidates.
  LexResult lexicalize(const std::string& delex, const BeliefState& belief,
                       const std::vector<const EntityRow*>& rows,
                       int summary_count = -1) const;

 private:
  const Ontology* ontology_;
};

}  // namespace minitod
