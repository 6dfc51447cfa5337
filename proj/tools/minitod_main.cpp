#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "minitod/corpus.hpp"
#include "minitod/database.hpp"
#include "minitod/engine.hpp"
#include "minitod/errors.hpp"
#include "minitod/evaluator.hpp"
#include "minitod/lexicon.hpp"
#include "minitod/model.hpp"
#include "minitod/ontology.hpp"
#include "minitod/text.hpp"
#include "minitod/tokenizer.hpp"

namespace {

using namespace minitod;

struct GenArgs {
  std::string out;
  int train = 500;
  int test = 100;
  uint64_t seed = 1;
};

struct TrainArgs {
  std::string corpus;
  std::string ontology;
  std::string out;
  std::string vocab;
  int layers = 2;
  int heads = 4;
  int dim = 128;
  int ff = 512;
  int max_len = 512;
  int steps = 600;
  int batch = 8;
  double lr = 1e-3;
  int warmup = 100;
  uint64_t seed = 1;
  bool mask_context = false;
  bool no_db = false;
  bool no_end_tokens = false;
  bool quiet = false;
};

struct EvalArgs {
  std::string corpus;
  std::string ontology;
  std::string db;
  std::string checkpoint;
  std::string vocab;
  std::string belief_mode = "generated";
  std::string db_mode = "oracle";
  std::string action_mode = "generated";
  std::string out;
  std::string csv;
  std::string manifest;
  std::string dump;
  bool no_end_tokens = false;
  bool replay_gold = false;
  uint64_t seed = 1;
};

struct CorruptArgs {
  std::string corpus;
  std::string ontology;
  std::string out;
  std::string records;
  std::string noise_type = "t2";
  double rate = 0.1;
  uint64_t seed = 1;
};

struct AuditArgs {
  std::string corpus;
  std::string ontology;
  std::string out;
};

struct ChatArgs {
  std::string ontology;
  std::string db;
  std::string checkpoint;
  std::string vocab;
};

std::string default_vocab_path(const std::string& checkpoint) {
  return checkpoint + ".vocab";
}

int run_gen(const GenArgs& args) {
  GenConfig config;
  config.num_train = args.train;
  config.num_test = args.test;
  config.seed = args.seed;
  GeneratedData data = generate_corpus(config);

  std::filesystem::create_directories(args.out);
  auto path = [&](const char* name) {
    return (std::filesystem::path(args.out) / name).string();
  };
  data.ontology.save(path("ontology.json"));
  data.db.save(path("db.json"));
  save_corpus(data.train, path("train.json"));
  save_corpus(data.test, path("test.json"));
  std::printf("wrote %s: %zu train dialogues (%zu turns), %zu test dialogues "
              "(%zu turns), %zu entities\n",
              args.out.c_str(), data.train.dialogues.size(),
              data.train.total_turns(), data.test.dialogues.size(),
              data.test.total_turns(), data.entities.size());
  return 0;
}

int run_train(const TrainArgs& args) {
  Ontology onto = Ontology::load(args.ontology);
  Corpus corpus = load_corpus(args.corpus, onto);

  SequenceOptions seq_opts;
  seq_opts.serialize.end_tokens = !args.no_end_tokens;
  seq_opts.include_db = !args.no_db;
  std::vector<std::string> sequences = training_sequences(corpus, seq_opts);

  Vocab vocab = Vocab::build(sequences, tok::segment_specials());

  ModelConfig config;
  config.layers = args.layers;
  config.heads = args.heads;
  config.dim = args.dim;
  config.ff = args.ff;
  config.max_len = args.max_len;
  config.vocab_size = vocab.size();

  std::vector<Model::Example> examples = make_training_examples(
      sequences, vocab, config.max_len, args.mask_context);

  Model model = Model::random_init(config, args.seed);

  Model::TrainOptions opts;
  opts.steps = args.steps;
  opts.batch_size = args.batch;
  opts.lr = args.lr;
  opts.warmup = args.warmup;
  opts.seed = args.seed;
  opts.verbose = !args.quiet;
  std::vector<double> curve = model.train(examples, opts);

  model.save(args.out);
  std::string vocab_path =
      args.vocab.empty() ? default_vocab_path(args.out) : args.vocab;
  vocab.save(vocab_path);
  std::printf("trained %d steps on %zu sequences (vocab %zu); final loss %.4f\n",
              args.steps, sequences.size(), vocab.size(),
              curve.empty() ? 0.0 : curve.back());
  std::printf("checkpoint: %s\nvocab: %s\n", args.out.c_str(), vocab_path.c_str());
  return 0;
}

EvalSettings settings_from(const EvalArgs& args) {
  EvalSettings settings;
  settings.belief = belief_mode_from_string(args.belief_mode);
  settings.db = db_mode_from_string(args.db_mode);
  settings.action = action_mode_from_string(args.action_mode);
  settings.serialize.end_tokens = !args.no_end_tokens;
  return settings;
}

int run_eval(const EvalArgs& args) {
  if (args.replay_gold && args.no_end_tokens) {
    throw DataError("gold replay needs segment end markers");
  }
  Ontology onto = Ontology::load(args.ontology);
  Database db = Database::load(args.db, onto);
  Corpus corpus = load_corpus(args.corpus, onto);
  EvalSettings settings = settings_from(args);

  Vocab vocab;
  std::unique_ptr<Model> model;
  if (!args.checkpoint.empty()) {
    model = std::make_unique<Model>(Model::load(args.checkpoint));
    std::string vocab_path =
        args.vocab.empty() ? default_vocab_path(args.checkpoint) : args.vocab;
    vocab = Vocab::load(vocab_path);
  } else if (args.replay_gold) {
    if (!args.vocab.empty()) {
      vocab = Vocab::load(args.vocab);
    } else {
      SequenceOptions seq_opts;
      seq_opts.serialize = settings.serialize;
      seq_opts.include_db = settings.db != DbMode::none;
      vocab = Vocab::build(training_sequences(corpus, seq_opts),
                           tok::segment_specials());
    }
  } else {
    throw DataError("eval needs --checkpoint or --replay-gold");
  }

  DecoderFactory factory =
      args.replay_gold ? gold_replay_factory(vocab, settings.serialize)
                       : model_decoder_factory(*model, vocab);
  EvalOutcome outcome = evaluate_corpus(corpus, onto, db, vocab, settings, factory);

  std::string json = outcome.report.to_json();
  std::printf("%s\n", json.c_str());
  if (!args.out.empty()) write_text_file(args.out, json + "\n");
  if (!args.csv.empty()) {
    write_text_file(args.csv, MetricsReport::csv_header() + "\n" +
                                  outcome.report.csv_row() + "\n");
  }
  if (!args.dump.empty()) {
    std::string lines;
    std::size_t i = 0;
    for (const auto& dialogue : corpus.dialogues) {
      for (std::size_t t = 0; t < dialogue.turns.size(); ++t, ++i) {
        const TurnResult& r = outcome.turn_results[i];
        const Turn& gold = dialogue.turns[t];
        nlohmann::ordered_json j;
        j["dialogue"] = dialogue.id;
        j["turn"] = t;
        j["belief"] = serialize_belief(r.belief);
        j["gold_belief"] = serialize_belief(gold.belief);
        j["actions"] = serialize_actions(r.actions);
        j["gold_actions"] = serialize_actions(gold.actions);
        j["response"] = r.response_delex;
        j["gold_response"] = gold.response_delex;
        if (r.db) j["db"] = serialize_db(*r.db);
        j["active_domain"] = r.active_domain;
        std::string offered_id;
        if (r.offered) {
          const DomainSpec* spec = onto.find(r.offered->domain);
          if (spec && !spec->identifier.empty()) {
            if (const std::string* v = r.offered->get(spec->identifier)) {
              offered_id = *v;
            }
          }
        }
        j["offered"] = offered_id;
        lines += j.dump() + "\n";
      }
    }
    write_text_file(args.dump, lines);
  }
  if (!args.manifest.empty()) {
    std::vector<std::pair<std::string, std::string>> files = {
        {"ontology", args.ontology}, {"db", args.db}, {"corpus", args.corpus}};
    if (!args.checkpoint.empty()) files.emplace_back("checkpoint", args.checkpoint);
    std::string command = args.replay_gold ? "eval --replay-gold" : "eval";
    write_text_file(args.manifest,
                    run_manifest_json(command, settings, args.seed, files) + "\n");
  }
  return 0;
}

int run_corrupt(const CorruptArgs& args) {
  Ontology onto = Ontology::load(args.ontology);
  Corpus corpus = load_corpus(args.corpus, onto);
  NoiseType type = noise_type_from_string(args.noise_type);
  NoiseResult result = inject_noise(corpus, onto, type, args.rate, args.seed);
  save_corpus(result.corpus, args.out);
  std::string records_path =
      args.records.empty() ? args.out + ".records.csv" : args.records;
  save_noise_records(result.records, records_path);
  std::printf("injected %zu %s corruptions across %zu turns; records: %s\n",
              result.records.size(), args.noise_type.c_str(),
              corpus.total_turns(), records_path.c_str());
  return 0;
}

int run_audit(const AuditArgs& args) {
  Ontology onto = Ontology::load(args.ontology);
  Corpus corpus = load_corpus(args.corpus, onto);
  std::vector<AuditFlag> flags = audit_annotations(corpus, onto);
  if (!args.out.empty()) save_audit_flags(flags, args.out);
  std::printf("%zu turns audited, %zu flags\n", corpus.total_turns(), flags.size());
  for (const auto& f : flags) {
    std::printf("%s turn %d [%s] %s-%s '%s': %s\n", f.dialogue_id.c_str(),
                f.turn, to_string(f.type).c_str(), f.domain.c_str(),
                f.slot.c_str(), f.value.c_str(), f.evidence.c_str());
  }
  return 0;
}

int run_chat(const ChatArgs& args) {
  Ontology onto = Ontology::load(args.ontology);
  Database db = Database::load(args.db, onto);
  Model model = Model::load(args.checkpoint);
  std::string vocab_path =
      args.vocab.empty() ? default_vocab_path(args.checkpoint) : args.vocab;
  Vocab vocab = Vocab::load(vocab_path);
  Lexicon lexicon(onto);

  EvalSettings settings;
  settings.db = DbMode::dynamic;

  ModelDecoder decoder(model, vocab);
  std::vector<std::string> users;
  std::vector<std::string> systems;
  BeliefState prev_belief;
  std::string prev_active;

  std::printf("type a message, empty line or ctrl-d to quit\n");
  std::string line;
  while (true) {
    std::printf("user> ");
    std::fflush(stdout);
    if (!std::getline(std::cin, line)) break;
    std::string text = normalize_value(line);
    if (text.empty() || text == "exit" || text == "quit") break;

    users.push_back(text);
    TurnInputs inputs;
    inputs.context = Context{users, systems};
    inputs.prev_belief = prev_belief;
    inputs.prev_active = prev_active;
    TurnResult result =
        run_turn(decoder, vocab, settings, onto, db, lexicon, inputs);

    std::string belief;
    for (const auto& b : result.belief) {
      if (!belief.empty()) belief += " ; ";
      belief += b.domain + " " + b.slot + " = " + b.value;
    }
    std::printf("belief> %s\n", belief.empty() ? "(empty)" : belief.c_str());
    if (result.db) {
      std::printf("db> %d matches, booking %s\n", result.db->count,
                  to_string(result.db->status).c_str());
    }
    std::printf("system> %s\n", result.response_lex.c_str());

    systems.push_back(result.response_lex);
    prev_belief = result.belief;
    prev_active = result.active_domain;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single sequence task oriented dialogue toolkit"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-corpus", "generate a synthetic corpus");
  gen_cmd->add_option("--out", gen.out, "output directory")->required();
  gen_cmd->add_option("--train", gen.train, "training dialogues");
  gen_cmd->add_option("--test", gen.test, "test dialogues");
  gen_cmd->add_option("--seed", gen.seed, "rng seed");

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model on a corpus");
  train_cmd->add_option("--corpus", train.corpus, "training corpus json")->required();
  train_cmd->add_option("--ontology", train.ontology, "ontology json")->required();
  train_cmd->add_option("--out", train.out, "checkpoint path")->required();
  train_cmd->add_option("--vocab", train.vocab, "vocab output path");
  train_cmd->add_option("--layers", train.layers, "transformer layers");
  train_cmd->add_option("--heads", train.heads, "attention heads");
  train_cmd->add_option("--dim", train.dim, "model width");
  train_cmd->add_option("--ff", train.ff, "feed forward width");
  train_cmd->add_option("--max-len", train.max_len, "max sequence length");
  train_cmd->add_option("--steps", train.steps, "optimizer steps");
  train_cmd->add_option("--batch", train.batch, "batch size");
  train_cmd->add_option("--lr", train.lr, "learning rate");
  train_cmd->add_option("--warmup", train.warmup, "linear warmup steps");
  train_cmd->add_option("--seed", train.seed, "rng seed");
  train_cmd->add_flag("--mask-context", train.mask_context,
                      "exclude context positions from the loss");
  train_cmd->add_flag("--no-db", train.no_db, "drop db segments from sequences");
  train_cmd->add_flag("--no-end-tokens", train.no_end_tokens,
                      "drop segment end markers from sequences");
  train_cmd->add_flag("--quiet", train.quiet, "suppress per-step loss output");

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate on a corpus");
  eval_cmd->add_option("--corpus", eval.corpus, "test corpus json")->required();
  eval_cmd->add_option("--ontology", eval.ontology, "ontology json")->required();
  eval_cmd->add_option("--db", eval.db, "entity database json")->required();
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "model checkpoint");
  eval_cmd->add_option("--vocab", eval.vocab, "vocab path");
  eval_cmd->add_option("--belief-mode", eval.belief_mode, "generated|oracle")
      ->check(CLI::IsMember({"generated", "oracle"}));
  eval_cmd->add_option("--db-mode", eval.db_mode, "oracle|dynamic|none")
      ->check(CLI::IsMember({"oracle", "dynamic", "none"}));
  eval_cmd->add_option("--action-mode", eval.action_mode, "generated|oracle")
      ->check(CLI::IsMember({"generated", "oracle"}));
  eval_cmd->add_option("--out", eval.out, "metrics json output");
  eval_cmd->add_option("--csv", eval.csv, "metrics csv output");
  eval_cmd->add_option("--manifest", eval.manifest, "run manifest output");
  eval_cmd->add_option("--dump", eval.dump,
                       "per-turn gold/predicted dump (json lines)");
  eval_cmd->add_option("--seed", eval.seed, "seed recorded in the manifest");
  eval_cmd->add_flag("--no-end-tokens", eval.no_end_tokens,
                     "serialize without segment end markers");
  eval_cmd->add_flag("--replay-gold", eval.replay_gold,
                     "replay gold segments instead of decoding");

  CorruptArgs corrupt;
  CLI::App* corrupt_cmd =
      app.add_subcommand("corrupt", "inject annotation noise into a corpus");
  corrupt_cmd->add_option("--corpus", corrupt.corpus, "input corpus")->required();
  corrupt_cmd->add_option("--ontology", corrupt.ontology, "ontology json")->required();
  corrupt_cmd->add_option("--out", corrupt.out, "corrupted corpus output")->required();
  corrupt_cmd->add_option("--records", corrupt.records, "injection records csv");
  corrupt_cmd->add_option("--noise-type", corrupt.noise_type, "t2|t3|t4")
      ->check(CLI::IsMember({"t2", "t3", "t4"}));
  corrupt_cmd->add_option("--noise-rate", corrupt.rate, "fraction of turns");
  corrupt_cmd->add_option("--seed", corrupt.seed, "rng seed");

  AuditArgs audit;
  CLI::App* audit_cmd =
      app.add_subcommand("audit", "check belief annotations against context");
  audit_cmd->add_option("--corpus", audit.corpus, "corpus json")->required();
  audit_cmd->add_option("--ontology", audit.ontology, "ontology json")->required();
  audit_cmd->add_option("--out", audit.out, "flags csv output");

  ChatArgs chat;
  CLI::App* chat_cmd = app.add_subcommand("chat", "interactive dialogue loop");
  chat_cmd->add_option("--ontology", chat.ontology, "ontology json")->required();
  chat_cmd->add_option("--db", chat.db, "entity database json")->required();
  chat_cmd->add_option("--checkpoint", chat.checkpoint, "model checkpoint")->required();
  chat_cmd->add_option("--vocab", chat.vocab, "vocab path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (gen_cmd->parsed()) return run_gen(gen);
    if (train_cmd->parsed()) return run_train(train);
    if (eval_cmd->parsed()) return run_eval(eval);
    if (corrupt_cmd->parsed()) return run_corrupt(corrupt);
    if (audit_cmd->parsed()) return run_audit(audit);
    if (chat_cmd->parsed()) return run_chat(chat);
  } catch (const minitod::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
