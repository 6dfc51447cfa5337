#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "minitod/corpus.hpp"
#include "minitod/database.hpp"
#include "minitod/evaluator.hpp"
#include "minitod/lexicon.hpp"
#include "minitod/model.hpp"
#include "minitod/tokenizer.hpp"

namespace minitod {

enum class BeliefMode { generated, oracle };
enum class DbMode { oracle, dynamic, none };
enum class ActionMode { generated, oracle };

std::string to_string(BeliefMode m);
std::string to_string(DbMode m);
std::string to_string(ActionMode m);
BeliefMode belief_mode_from_string(const std::string& s);
DbMode db_mode_from_string(const std::string& s);
ActionMode action_mode_from_string(const std::string& s);

struct EvalSettings {
  BeliefMode belief = BeliefMode::generated;
  DbMode db = DbMode::oracle;
  ActionMode action = ActionMode::generated;
  SerializeOptions serialize;
  int max_belief_tokens = 96;
  int max_action_tokens = 48;
  int max_response_tokens = 128;
};

// Continues a token prefix until a stop token or the budget runs out. The
// model-backed decoder is the real thing; the replay decoder stands in for it
// when a stage should reproduce gold annotations exactly.
class TurnDecoder {
 public:
  virtual ~TurnDecoder() = default;
  virtual std::vector<int> continue_sequence(const std::vector<int>& prefix,
                                             const std::vector<int>& stop_ids,
                                             int max_new) = 0;
};

class ModelDecoder : public TurnDecoder {
 public:
  ModelDecoder(const Model& model, const Vocab& vocab);
  std::vector<int> continue_sequence(const std::vector<int>& prefix,
                                     const std::vector<int>& stop_ids,
                                     int max_new) override;
  bool clipped_prefix() const { return clipped_prefix_; }

 private:
  const Model& model_;
  bool clipped_prefix_ = false;
};

// Serves the gold belief, action and response segments of one turn. The
// requested stage is identified by the stop token the engine asks for.
class GoldReplayDecoder : public TurnDecoder {
 public:
  GoldReplayDecoder(const Vocab& vocab, const SerializeOptions& opts,
                    const Turn& turn);
  std::vector<int> continue_sequence(const std::vector<int>& prefix,
                                     const std::vector<int>& stop_ids,
                                     int max_new) override;

 private:
  std::vector<int> belief_;
  std::vector<int> action_;
  std::vector<int> response_;
  int belief_stop_;
  int action_stop_;
  int response_stop_;
};

struct TurnInputs {
  Context context;
  const Turn* gold = nullptr;  // required for oracle modes and scoring
  std::string dialogue_id;
  int turn_index = 0;
  BeliefState prev_belief;     // belief used at the previous turn
  std::string prev_active;
};

struct TurnResult {
  BeliefState belief;          // the belief actually used downstream
  std::string belief_text;     // raw generated span, empty under oracle
  bool belief_parse_failed = false;
  std::string active_domain;
  std::optional<DbSummary> db; // what went into the sequence, if anything
  ActionList actions;
  std::string response_delex;
  std::string response_lex;
  std::vector<std::string> unresolved;
  const EntityRow* offered = nullptr;
  bool truncated = false;      // a stage ran out of budget before its stop token
};

// New constraints name the active domain; turns that add none stay on the
// previous one.
std::string infer_active_domain(const BeliefState& belief,
                                const BeliefState& prev_belief,
                                const std::string& prev_active);

// Encodes serialized turns for Model::train. With mask_context set, loss
// weights are zeroed up to and including the end-of-context marker so the
// optimizer spends capacity on belief, action and response tokens only.
std::vector<Model::Example> make_training_examples(
    const std::vector<std::string>& sequences, const Vocab& vocab,
    int max_len, bool mask_context);

TurnResult run_turn(TurnDecoder& decoder, const Vocab& vocab,
                    const EvalSettings& settings, const Ontology& ontology,
                    const Database& db, const Lexicon& lexicon,
                    const TurnInputs& inputs);

using DecoderFactory =
    std::function<std::unique_ptr<TurnDecoder>(const Dialogue&, int turn)>;

DecoderFactory model_decoder_factory(const Model& model, const Vocab& vocab);
DecoderFactory gold_replay_factory(const Vocab& vocab, const SerializeOptions& opts);

struct EvalOutcome {
  MetricsReport report;
  std::vector<DialogueResult> dialogue_results;
  std::vector<TurnResult> turn_results;  // corpus order
};

// Runs every turn against gold dialogue history and scores the predictions.
EvalOutcome evaluate_corpus(const Corpus& corpus, const Ontology& ontology,
                            const Database& db, const Vocab& vocab,
                            const EvalSettings& settings,
                            const DecoderFactory& make_decoder);

// JSON blob tying a metrics run to its exact inputs.
std::string run_manifest_json(const std::string& command,
                              const EvalSettings& settings, uint64_t seed,
                              const std::vector<std::pair<std::string, std::string>>& files);

uint64_t file_fingerprint(const std::string& path);

}  // namespace minitod
