#include "minitod/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "minitod/errors.hpp"
#include "minitod/text.hpp"

namespace minitod {

std::string to_string(BeliefMode m) {
  return m == BeliefMode::generated ? "generated" : "oracle";
}

std::string to_string(DbMode m) {
  switch (m) {
    case DbMode::oracle: return "oracle";
    case DbMode::dynamic: return "dynamic";
    case DbMode::none: return "none";
  }
  throw std::invalid_argument("to_string: bad DbMode");
}

std::string to_string(ActionMode m) {
  return m == ActionMode::generated ? "generated" : "oracle";
}

BeliefMode belief_mode_from_string(const std::string& s) {
  if (s == "generated") return BeliefMode::generated;
  if (s == "oracle") return BeliefMode::oracle;
  throw DataError("unknown belief mode: " + s);
}

DbMode db_mode_from_string(const std::string& s) {
  if (s == "oracle") return DbMode::oracle;
  if (s == "dynamic") return DbMode::dynamic;
  if (s == "none") return DbMode::none;
  throw DataError("unknown db mode: " + s);
}

ActionMode action_mode_from_string(const std::string& s) {
  if (s == "generated") return ActionMode::generated;
  if (s == "oracle") return ActionMode::oracle;
  throw DataError("unknown action mode: " + s);
}

ModelDecoder::ModelDecoder(const Model& model, const Vocab& vocab)
    : model_(model) {
  (void)vocab;
}

std::vector<int> ModelDecoder::continue_sequence(const std::vector<int>& prefix,
                                                 const std::vector<int>& stop_ids,
                                                 int max_new) {
  int limit = model_.config().max_len - max_new;
  if (limit < 1) limit = 1;
  if (int(prefix.size()) > limit) {
    clipped_prefix_ = true;
    std::vector<int> tail(prefix.end() - limit, prefix.end());
    return model_.greedy_decode(tail, stop_ids, max_new);
  }
  return model_.greedy_decode(prefix, stop_ids, max_new);
}

GoldReplayDecoder::GoldReplayDecoder(const Vocab& vocab,
                                     const SerializeOptions& opts,
                                     const Turn& turn) {
  belief_ = vocab.encode(serialize_belief(turn.belief, opts));
  action_ = vocab.encode(serialize_actions(turn.actions, opts));
  response_ = vocab.encode(serialize_response(turn.response_delex, opts));
  belief_stop_ = vocab.id(tok::kEndOfBelief);
  action_stop_ = vocab.id(tok::kEndOfAction);
  response_stop_ = vocab.id(tok::kEndOfResponse);
}

std::vector<int> GoldReplayDecoder::continue_sequence(
    const std::vector<int>& prefix, const std::vector<int>& stop_ids,
    int max_new) {
  (void)prefix;
  (void)max_new;
  for (int stop : stop_ids) {
    if (stop == belief_stop_) return belief_;
    if (stop == action_stop_) return action_;
    if (stop == response_stop_) return response_;
  }
  throw std::logic_error("gold replay needs a recognizable stop token");
}

std::string infer_active_domain(const BeliefState& belief,
                                const BeliefState& prev_belief,
                                const std::string& prev_active) {
  std::string domain;
  for (const auto& b : belief) {
    if (std::find(prev_belief.begin(), prev_belief.end(), b) == prev_belief.end()) {
      domain = b.domain;
    }
  }
  if (!domain.empty()) return domain;
  if (!prev_active.empty()) return prev_active;
  if (!belief.empty()) return belief.front().domain;
  return "";
}

namespace {

// A stage normally stops on its closing marker. When the vocabulary was
// built without closers, any other segment special works as the boundary:
// those tokens never occur inside a segment, so seeing one means the stage
// is over. The caller strips such a fallback stop from the emitted span.
std::vector<int> stage_stops(const Vocab& vocab, const std::string& closer,
                             const std::string& own_opener) {
  if (int id = vocab.id(closer); id >= 0) return {id};
  std::vector<int> stops;
  for (const std::string& s : tok::segment_specials()) {
    if (s == own_opener) continue;
    if (int id = vocab.id(s); id >= 0) stops.push_back(id);
  }
  return stops;
}

void append(std::vector<int>& seq, const std::vector<int>& tail) {
  seq.insert(seq.end(), tail.begin(), tail.end());
}

bool ends_with_stop(const std::vector<int>& generated,
                    const std::vector<int>& stop_ids) {
  if (generated.empty() || stop_ids.empty()) return false;
  return std::find(stop_ids.begin(), stop_ids.end(), generated.back()) !=
         stop_ids.end();
}

}  // namespace

std::vector<Model::Example> make_training_examples(
    const std::vector<std::string>& sequences, const Vocab& vocab,
    int max_len, bool mask_context) {
  std::vector<Model::Example> examples;
  examples.reserve(sequences.size());
  // The boundary is the end-of-context marker; without closers in the
  // vocabulary the belief opener marks where the context stops instead.
  int boundary = vocab.id(tok::kEndOfContext);
  if (boundary < 0) boundary = vocab.id(tok::kBelief);
  for (const auto& text : sequences) {
    Model::Example ex;
    ex.tokens = vocab.encode(text, max_len);
    if (ex.tokens.size() < 2) continue;
    ex.mask.assign(ex.tokens.size() - 1, 1.0);
    if (mask_context) {
      // mask[i] weights the prediction of tokens[i+1]: zero out everything up
      // to the boundary marker, keep the transitions after it.
      for (std::size_t i = 0; i + 1 < ex.tokens.size(); ++i) {
        ex.mask[i] = 0.0;
        if (ex.tokens[i + 1] == boundary) break;
      }
    }
    examples.push_back(std::move(ex));
  }
  return examples;
}

TurnResult run_turn(TurnDecoder& decoder, const Vocab& vocab,
                    const EvalSettings& settings, const Ontology& ontology,
                    const Database& db, const Lexicon& lexicon,
                    const TurnInputs& inputs) {
  const SerializeOptions& opts = settings.serialize;
  const bool needs_gold = settings.belief == BeliefMode::oracle ||
                          settings.db == DbMode::oracle ||
                          settings.action == ActionMode::oracle;
  if (needs_gold && !inputs.gold) {
    throw std::invalid_argument("run_turn: oracle mode without gold turn");
  }

  TurnResult result;
  std::vector<int> seq = vocab.encode(serialize_context(inputs.context, opts));

  if (settings.belief == BeliefMode::oracle) {
    result.belief = canonicalize(inputs.gold->belief);
    append(seq, vocab.encode(serialize_belief(result.belief, opts)));
  } else {
    std::vector<int> stops = stage_stops(vocab, tok::kEndOfBelief, tok::kBelief);
    std::vector<int> generated =
        decoder.continue_sequence(seq, stops, settings.max_belief_tokens);
    if (!ends_with_stop(generated, stops)) result.truncated = true;
    else if (vocab.id(tok::kEndOfBelief) < 0) generated.pop_back();
    append(seq, generated);
    result.belief_text = vocab.decode(generated);
    ParsedBelief parsed = parse_belief(result.belief_text, ontology.slot_lexicon());
    result.belief = parsed.state;
    result.belief_parse_failed = parsed.failed;
  }

  result.active_domain =
      infer_active_domain(result.belief, inputs.prev_belief, inputs.prev_active);

  std::vector<const EntityRow*> rows;
  if (!result.active_domain.empty() && ontology.find(result.active_domain)) {
    rows = db.query(result.belief, result.active_domain, ontology);
  }

  if (settings.db == DbMode::oracle) {
    result.db = inputs.gold->db;
  } else if (settings.db == DbMode::dynamic) {
    // Bookings always succeed in this world, so the status is a function of
    // the belief: available as soon as a booking slot of the active domain
    // has been filled.
    BookingStatus status = BookingStatus::not_applicable;
    if (const DomainSpec* schema = ontology.find(result.active_domain)) {
      for (const auto& b : result.belief) {
        if (b.domain == result.active_domain && schema->is_booking(b.slot)) {
          status = BookingStatus::available;
          break;
        }
      }
    }
    result.db = DbSummary{int(rows.size()), status};
  }
  if (result.db) {
    append(seq, vocab.encode(serialize_db(*result.db, opts)));
  }

  std::string action_text;
  if (settings.action == ActionMode::oracle) {
    result.actions = inputs.gold->actions;
    action_text = serialize_actions(result.actions, opts);
    append(seq, vocab.encode(action_text));
  } else {
    std::vector<int> stops = stage_stops(vocab, tok::kEndOfAction, tok::kAction);
    std::vector<int> generated =
        decoder.continue_sequence(seq, stops, settings.max_action_tokens);
    if (!ends_with_stop(generated, stops)) result.truncated = true;
    else if (vocab.id(tok::kEndOfAction) < 0) generated.pop_back();
    append(seq, generated);
    action_text = vocab.decode(generated);
  }

  std::vector<int> response_stops =
      stage_stops(vocab, tok::kEndOfResponse, tok::kResponse);
  std::vector<int> response_tokens =
      decoder.continue_sequence(seq, response_stops, settings.max_response_tokens);
  if (!ends_with_stop(response_tokens, response_stops)) result.truncated = true;
  else if (vocab.id(tok::kEndOfResponse) < 0) response_tokens.pop_back();
  append(seq, response_tokens);
  std::string response_text = vocab.decode(response_tokens);

  ParsedActionResponse parsed = parse_action_response(action_text + " " + response_text);
  if (settings.action == ActionMode::generated) result.actions = parsed.actions;
  result.response_delex = parsed.response;

  int count = result.db ? result.db->count : int(rows.size());
  Lexicon::LexResult lex =
      lexicon.lexicalize(result.response_delex, result.belief, rows, count);
  result.response_lex = lex.text;
  result.unresolved = lex.unresolved;

  if (!result.active_domain.empty() && !rows.empty()) {
    if (const DomainSpec* spec = ontology.find(result.active_domain)) {
      std::string marker = ontology.placeholder(result.active_domain, spec->identifier);
      if (!marker.empty()) {
        std::vector<std::string> tokens = split_ws(result.response_delex);
        if (std::find(tokens.begin(), tokens.end(), marker) != tokens.end()) {
          result.offered = rows.front();
        }
      }
    }
  }
  return result;
}

DecoderFactory model_decoder_factory(const Model& model, const Vocab& vocab) {
  return [&model, &vocab](const Dialogue&, int) {
    return std::make_unique<ModelDecoder>(model, vocab);
  };
}

DecoderFactory gold_replay_factory(const Vocab& vocab, const SerializeOptions& opts) {
  return [&vocab, opts](const Dialogue& d, int turn) {
    return std::make_unique<GoldReplayDecoder>(vocab, opts, d.turns[turn]);
  };
}

EvalOutcome evaluate_corpus(const Corpus& corpus, const Ontology& ontology,
                            const Database& db, const Vocab& vocab,
                            const EvalSettings& settings,
                            const DecoderFactory& make_decoder) {
  Lexicon lexicon(ontology);
  EvalOutcome outcome;
  std::vector<BeliefState> pred_beliefs;
  std::vector<BeliefState> gold_beliefs;
  std::vector<std::string> candidates;
  std::vector<std::string> references;

  for (const auto& dialogue : corpus.dialogues) {
    DialogueResult dres;
    dres.dialogue_id = dialogue.id;
    dres.goal = &dialogue.goal;
    BeliefState prev_belief;
    std::string prev_active;

    for (std::size_t t = 0; t < dialogue.turns.size(); ++t) {
      TurnInputs inputs;
      inputs.context = dialogue.context_at(t);
      inputs.gold = &dialogue.turns[t];
      inputs.dialogue_id = dialogue.id;
      inputs.turn_index = int(t);
      inputs.prev_belief = prev_belief;
      inputs.prev_active = prev_active;

      std::unique_ptr<TurnDecoder> decoder = make_decoder(dialogue, int(t));
      TurnResult result = run_turn(*decoder, vocab, settings, ontology, db,
                                   lexicon, inputs);

      pred_beliefs.push_back(result.belief);
      gold_beliefs.push_back(dialogue.turns[t].belief);
      candidates.push_back(result.response_delex);
      references.push_back(dialogue.turns[t].response_delex);
      dres.system_responses.push_back(result.response_lex);
      if (result.offered) dres.offered[result.active_domain] = result.offered;

      outcome.report.belief_parse_failures += result.belief_parse_failed ? 1 : 0;
      outcome.report.truncated_turns += result.truncated ? 1 : 0;
      outcome.report.unresolved_placeholders += int(result.unresolved.size());

      prev_belief = result.belief;
      prev_active = result.active_domain;
      outcome.turn_results.push_back(std::move(result));
    }
    outcome.dialogue_results.push_back(std::move(dres));
  }

  outcome.report.turns = int(pred_beliefs.size());
  outcome.report.dialogues = int(corpus.dialogues.size());
  outcome.report.joint = joint_goal_accuracy(pred_beliefs, gold_beliefs);
  InformSuccess is = inform_success(outcome.dialogue_results);
  outcome.report.inform = is.inform;
  outcome.report.success = is.success;
  outcome.report.bleu = bleu(candidates, references);
  outcome.report.combined =
      combined_score(outcome.report.inform, outcome.report.success,
                     outcome.report.bleu);
  return outcome;
}

std::string run_manifest_json(const std::string& command,
                              const EvalSettings& settings, uint64_t seed,
                              const std::vector<std::pair<std::string, std::string>>& files) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["settings"] = {
      {"belief_mode", to_string(settings.belief)},
      {"db_mode", to_string(settings.db)},
      {"action_mode", to_string(settings.action)},
      {"end_tokens", settings.serialize.end_tokens},
      {"user_system_tokens", settings.serialize.user_system_tokens},
      {"max_belief_tokens", settings.max_belief_tokens},
      {"max_action_tokens", settings.max_action_tokens},
      {"max_response_tokens", settings.max_response_tokens},
  };
  j["seed"] = seed;
  j["files"] = nlohmann::ordered_json::object();
  for (const auto& [name, path] : files) {
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  (unsigned long long)file_fingerprint(path));
    j["files"][name] = {{"path", path}, {"fingerprint", hex}};
  }
  return j.dump(2);
}

uint64_t file_fingerprint(const std::string& path) {
  return fnv1a64(read_text_file(path));
}

}  // namespace minitod
