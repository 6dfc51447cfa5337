#pragma once

#include <map>
#include <string>
#include <vector>

#include "minitod/corpus.hpp"
#include "minitod/database.hpp"

namespace minitod {

// Fraction of turns whose predicted belief equals the gold belief as a set,
// both in canonical form. Vectors must be parallel.
double joint_goal_accuracy(const std::vector<BeliefState>& predicted,
                           const std::vector<BeliefState>& gold);

// Everything inform/success need from one evaluated dialogue.
struct DialogueResult {
  std::string dialogue_id;
  const Goal* goal = nullptr;
  std::vector<std::string> system_responses;          // lexicalized, turn order
  std::map<std::string, const EntityRow*> offered;    // per domain, last offer
};

struct InformSuccess {
  double inform = 0.0;   // percentage
  double success = 0.0;  // percentage
  int domains_evaluated = 0;
};

// A dialogue-domain counts as informed when the offered entity satisfies every
// goal constraint, and as successful when additionally each requested slot's
// value for that entity appears verbatim in some system response.
InformSuccess inform_success(const std::vector<DialogueResult>& results);

// Corpus-level BLEU-4 with modified n-gram precision, geometric mean and
// brevity penalty, scaled to 0..100. Orders above the longest reference drop
// out of the mean; any attested order with zero matches gives 0.
double bleu(const std::vector<std::string>& candidates,
            const std::vector<std::string>& references);

double combined_score(double inform, double success, double bleu_score);

struct MetricsReport {
  double joint = 0.0;
  double inform = 0.0;
  double success = 0.0;
  double bleu = 0.0;
  double combined = 0.0;
  int turns = 0;
  int dialogues = 0;
  int belief_parse_failures = 0;
  int truncated_turns = 0;
  int unresolved_placeholders = 0;

  std::string to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

}  // namespace minitod
