#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "minitod/corpus.hpp"
#include "minitod/engine.hpp"
#include "minitod/lexicon.hpp"
#include "minitod/model.hpp"
#include "minitod/tokenizer.hpp"

using namespace minitod;

namespace {

struct World {
  GeneratedData data;
  Vocab vocab;

  World()
      : data(make()),
        vocab(Vocab::build(training_sequences(data.test), tok::segment_specials())) {}

  static GeneratedData make() {
    GenConfig cfg;
    cfg.num_train = 12;
    cfg.num_test = 12;
    cfg.seed = 21;
    return generate_corpus(cfg);
  }
};

EvalSettings oracle_settings() {
  EvalSettings s;
  s.belief = BeliefMode::oracle;
  s.db = DbMode::oracle;
  s.action = ActionMode::oracle;
  return s;
}

}  // namespace

TEST_CASE("gold replay under every mode matrix cell reproduces gold") {
  World w;
  const DecoderFactory replay = gold_replay_factory(w.vocab, SerializeOptions{});

  for (BeliefMode bm : {BeliefMode::oracle, BeliefMode::generated}) {
    for (DbMode dm : {DbMode::oracle, DbMode::dynamic, DbMode::none}) {
      for (ActionMode am : {ActionMode::generated, ActionMode::oracle}) {
        EvalSettings s;
        s.belief = bm;
        s.db = dm;
        s.action = am;
        CAPTURE(to_string(bm));
        CAPTURE(to_string(dm));
        CAPTURE(to_string(am));

        EvalOutcome out = evaluate_corpus(w.data.test, w.data.ontology,
                                          w.data.db, w.vocab, s, replay);
        CHECK(out.report.joint == doctest::Approx(1.0));
        CHECK(out.report.inform == doctest::Approx(100.0));
        CHECK(out.report.success == doctest::Approx(100.0));
        CHECK(out.report.bleu == doctest::Approx(100.0));
        CHECK(out.report.combined == doctest::Approx(200.0));
        CHECK(out.report.belief_parse_failures == 0);
        CHECK(out.report.truncated_turns == 0);
      }
    }
  }
}

TEST_CASE("replayed turns reproduce gold annotations exactly") {
  World w;
  EvalSettings s;  // generated belief and action, oracle db
  EvalOutcome out = evaluate_corpus(w.data.test, w.data.ontology, w.data.db,
                                    w.vocab, s,
                                    gold_replay_factory(w.vocab, s.serialize));

  std::size_t i = 0;
  for (const Dialogue& d : w.data.test.dialogues) {
    for (const Turn& t : d.turns) {
      const TurnResult& r = out.turn_results[i++];
      CHECK(r.belief == t.belief);
      CHECK(r.actions == t.actions);
      CHECK(r.response_delex == t.response_delex);
      CHECK(r.response_lex == t.response_lex);
      CHECK(r.active_domain == t.active_domain);
      CHECK(r.unresolved.empty());
    }
  }
  CHECK(i == out.turn_results.size());
}

TEST_CASE("db mode controls the db segment") {
  World w;
  const Dialogue& d = w.data.test.dialogues.front();
  GoldReplayDecoder replay(w.vocab, SerializeOptions{}, d.turns[0]);

  TurnInputs in;
  in.context = d.context_at(0);
  in.gold = &d.turns[0];

  Lexicon lexicon(w.data.ontology);
  EvalSettings s = oracle_settings();

  s.db = DbMode::none;
  GoldReplayDecoder r1(w.vocab, SerializeOptions{}, d.turns[0]);
  TurnResult none = run_turn(r1, w.vocab, s, w.data.ontology, w.data.db,
                             lexicon, in);
  CHECK(!none.db.has_value());

  s.db = DbMode::oracle;
  GoldReplayDecoder r2(w.vocab, SerializeOptions{}, d.turns[0]);
  TurnResult oracle = run_turn(r2, w.vocab, s, w.data.ontology, w.data.db,
                               lexicon, in);
  REQUIRE(oracle.db.has_value());
  CHECK(*oracle.db == d.turns[0].db);
}

TEST_CASE("dynamic db reproduces gold summaries from correct beliefs") {
  World w;
  EvalSettings s = oracle_settings();
  s.db = DbMode::dynamic;

  EvalOutcome out = evaluate_corpus(w.data.test, w.data.ontology, w.data.db,
                                    w.vocab, s,
                                    gold_replay_factory(w.vocab, s.serialize));
  std::size_t i = 0;
  for (const Dialogue& d : w.data.test.dialogues) {
    for (const Turn& t : d.turns) {
      const TurnResult& r = out.turn_results[i++];
      REQUIRE(r.db.has_value());
      CHECK(*r.db == t.db);
    }
  }
}

TEST_CASE("offered entity is the first matching row once an offer happens") {
  World w;
  EvalSettings s = oracle_settings();
  EvalOutcome out = evaluate_corpus(w.data.test, w.data.ontology, w.data.db,
                                    w.vocab, s,
                                    gold_replay_factory(w.vocab, s.serialize));

  std::size_t i = 0;
  bool saw_offer = false;
  for (const Dialogue& d : w.data.test.dialogues) {
    for (const Turn& t : d.turns) {
      const TurnResult& r = out.turn_results[i++];
      const DomainSpec& spec = w.data.ontology.at(t.active_domain);
      std::string marker = w.data.ontology.placeholder(t.active_domain,
                                                       spec.identifier);
      if (t.response_delex.find(marker) != std::string::npos) {
        saw_offer = true;
        auto rows = w.data.db.query(t.belief, t.active_domain, w.data.ontology);
        REQUIRE(!rows.empty());
        REQUIRE(r.offered != nullptr);
        CHECK(r.offered->attrs == rows.front()->attrs);
      }
    }
  }
  CHECK(saw_offer);
}

TEST_CASE("new constraints move the active domain, quiet turns keep it") {
  BeliefState prev = {{"train", "day", "monday"}};
  BeliefState same = prev;
  BeliefState grown = {{"hotel", "area", "north"}, {"train", "day", "monday"}};

  CHECK(infer_active_domain(same, prev, "train") == "train");
  CHECK(infer_active_domain(grown, prev, "train") == "hotel");
  CHECK(infer_active_domain(prev, {}, "") == "train");
  CHECK(infer_active_domain({}, {}, "") == "");
}

TEST_CASE("model decoding is deterministic") {
  World w;
  ModelConfig cfg;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.dim = 32;
  cfg.ff = 64;
  cfg.vocab_size = int(w.vocab.size());
  Model model = Model::random_init(cfg, 19);

  EvalSettings s;
  s.db = DbMode::dynamic;
  Corpus two;
  two.dialogues = {w.data.test.dialogues[0], w.data.test.dialogues[1]};

  EvalOutcome a = evaluate_corpus(two, w.data.ontology, w.data.db, w.vocab, s,
                                  model_decoder_factory(model, w.vocab));
  EvalOutcome b = evaluate_corpus(two, w.data.ontology, w.data.db, w.vocab, s,
                                  model_decoder_factory(model, w.vocab));
  REQUIRE(a.turn_results.size() == b.turn_results.size());
  for (std::size_t i = 0; i < a.turn_results.size(); ++i) {
    CHECK(a.turn_results[i].belief_text == b.turn_results[i].belief_text);
    CHECK(a.turn_results[i].response_delex == b.turn_results[i].response_delex);
  }
  CHECK(a.report.to_json() == b.report.to_json());
}

TEST_CASE("stage budgets trip the truncation flag") {
  World w;
  const Dialogue& d = w.data.test.dialogues.front();
  Lexicon lexicon(w.data.ontology);

  ModelConfig cfg;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.dim = 32;
  cfg.ff = 64;
  cfg.vocab_size = int(w.vocab.size());
  Model model = Model::random_init(cfg, 19);
  ModelDecoder decoder(model, w.vocab);

  EvalSettings s;
  s.db = DbMode::dynamic;
  s.max_belief_tokens = 2;
  s.max_action_tokens = 2;
  s.max_response_tokens = 2;

  TurnInputs in;
  in.context = d.context_at(0);
  in.gold = &d.turns[0];

  TurnResult r = run_turn(decoder, w.vocab, s, w.data.ontology, w.data.db,
                          lexicon, in);
  CHECK(r.truncated);
}

TEST_CASE("run manifests record settings and input fingerprints") {
  std::string pa = "/tmp/minitod_engine_" + std::to_string(getpid()) + "_a";
  std::string pb = "/tmp/minitod_engine_" + std::to_string(getpid()) + "_b";
  std::ofstream(pa) << "one";
  std::ofstream(pb) << "two";
  CHECK(file_fingerprint(pa) != file_fingerprint(pb));

  EvalSettings s;
  s.db = DbMode::dynamic;
  std::string manifest =
      run_manifest_json("eval", s, 7, {{"corpus", pa}, {"db", pb}});
  CHECK(manifest.find("\"db_mode\": \"dynamic\"") != std::string::npos);
  CHECK(manifest.find("corpus") != std::string::npos);

  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx",
                (unsigned long long)file_fingerprint(pa));
  CHECK(manifest.find(hex) != std::string::npos);
  std::remove(pa.c_str());
  std::remove(pb.c_str());
}
