#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "minitod/database.hpp"
#include "minitod/ontology.hpp"
#include "minitod/schema.hpp"

namespace minitod {

struct GoalDomain {
  std::vector<std::pair<std::string, std::string>> constraints;
  std::vector<std::string> requested;
  std::vector<std::pair<std::string, std::string>> booking;
};

struct Goal {
  std::vector<std::pair<std::string, GoalDomain>> domains;  // in script order

  const GoalDomain* find(const std::string& domain) const;
};

// One user/system exchange with full gold annotations. The belief state is
// cumulative: it reflects everything constrained up to and including this
// turn's user utterance.
struct Turn {
  std::string user;
  std::string response_delex;
  std::string response_lex;
  BeliefState belief;  // canonical
  ActionList actions;
  DbSummary db;        // match count for the active domain, booking status
  std::string active_domain;
};

struct Dialogue {
  std::string id;
  Goal goal;
  std::vector<Turn> turns;

  // Gold history visible when predicting turn t: user utterances 0..t and
  // lexicalized system responses 0..t-1.
  Context context_at(std::size_t turn) const;
};

struct Corpus {
  std::vector<Dialogue> dialogues;

  std::size_t total_turns() const;
};

void save_corpus(const Corpus& corpus, const std::string& path);

// Parses and validates a corpus file. Structural problems throw DataError;
// unknown domains or slots are tolerated but reported through `warnings`.
// Values and utterances are whitespace/case normalized, beliefs canonicalized.
Corpus load_corpus(const std::string& path, const Ontology& ontology,
                   std::vector<std::string>* warnings = nullptr);

struct SequenceOptions {
  SerializeOptions serialize;
  bool include_db = true;  // omit the DB segment entirely when false
};

// One serialized training sequence per turn, corpus order.
std::vector<std::string> training_sequences(const Corpus& corpus,
                                            const SequenceOptions& opts = {});

// ---------------------------------------------------------------------------
// Synthetic corpus generation

struct GenConfig {
  int num_train = 500;
  int num_test = 100;
  uint64_t seed = 1;
};

struct GeneratedData {
  Ontology ontology;
  Database db;
  std::vector<EntityRow> entities;  // store order, pre-normalization
  Corpus train;
  Corpus test;
};

// Deterministic: identical config yields byte-identical saved artifacts.
GeneratedData generate_corpus(const GenConfig& config);

// The built-in two-domain world used by generate_corpus.
Ontology default_ontology();

// ---------------------------------------------------------------------------
// Annotation noise

enum class NoiseType { t1, t2, t3, t4 };

std::string to_string(NoiseType t);
NoiseType noise_type_from_string(const std::string& s);

struct NoiseRecord {
  std::string dialogue_id;
  int turn = 0;
  NoiseType type = NoiseType::t2;
  BeliefTriplet original;   // empty for t3
  BeliefTriplet corrupted;  // empty for t2
};

struct NoiseResult {
  Corpus corpus;
  std::vector<NoiseRecord> records;
};

// Corrupts roughly rate * total_turns turns (at most one record per turn).
// t2 deletes a labeled triplet whose value is uttered in context, t3 adds a
// triplet whose value appears nowhere in context, t4 rewrites a value by one
// character or space edit (a leading token may also drop). t1 (ambiguous
// annotations) cannot be injected mechanically and is rejected.
NoiseResult inject_noise(const Corpus& corpus, const Ontology& ontology,
                         NoiseType type, double rate, uint64_t seed,
                         const std::set<std::pair<std::string, int>>& exclude = {});

void save_noise_records(const std::vector<NoiseRecord>& records,
                        const std::string& path);

struct AuditFlag {
  std::string dialogue_id;
  int turn = 0;
  NoiseType type = NoiseType::t2;
  std::string domain;
  std::string slot;
  std::string value;
  std::string evidence;
};

// Consistency audit of gold beliefs against dialogue context. On corpora from
// generate_corpus it reports nothing; each injected t2/t3/t4 record surfaces
// as one flag with the matching turn and type.
std::vector<AuditFlag> audit_annotations(const Corpus& corpus,
                                         const Ontology& ontology);

void save_audit_flags(const std::vector<AuditFlag>& flags,
                      const std::string& path);

}  // namespace minitod
