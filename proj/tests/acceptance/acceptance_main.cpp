// Acceptance gate: one pass/fail line per criterion, exit code = number of
// failures. The slow end-to-end criteria train real models, so a full run
// takes roughly half an hour on one CPU core.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "minitod/corpus.hpp"
#include "minitod/database.hpp"
#include "minitod/engine.hpp"
#include "minitod/evaluator.hpp"
#include "minitod/lexicon.hpp"
#include "minitod/model.hpp"
#include "minitod/rng.hpp"
#include "minitod/schema.hpp"
#include "minitod/tokenizer.hpp"

using namespace minitod;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int number, const char* name, const Outcome& outcome) {
  std::printf("[%2d] %s  %s%s%s\n", number, outcome.pass ? "PASS" : "FAIL",
              name, outcome.detail.empty() ? "" : ": ",
              outcome.detail.c_str());
  std::fflush(stdout);
  if (!outcome.pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

std::string format(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Combined-score formula and published-table reconstruction.

Outcome combined_formula() {
  if (std::abs(combined_score(84.4, 70.1, 15.01) - 92.26) > 1e-9 ||
      std::abs(combined_score(85.0, 70.5, 15.23) - 92.98) > 1e-9) {
    return {false, "pinpoint fixtures off"};
  }

  struct Row {
    double inform, success, bleu, printed;
    // Two published cells disagree with the formula applied to their own
    // row; the expected value is the recomputed one and the mismatch is
    // reported as a note.
    double corrected = 0.0;  // 0 = printed value is consistent
  };
  const std::vector<Row> rows = {
      // end-to-end, first benchmark
      {78.1, 63.4, 16.91, 87.66},
      {81.4, 69.7, 16.11, 91.66},
      {84.4, 70.1, 15.01, 92.26},
      // end-to-end, revised benchmark
      {79.3, 65.4, 16.01, 87.36, 88.36},
      {83.4, 67.1, 14.99, 90.24},
      {85.0, 70.5, 15.23, 92.98},
      // special-token ablation grid
      {33.8, 10.6, 4.53, 26.73},
      {54.5, 41.2, 9.48, 57.33},
      {61.9, 52.7, 9.57, 66.87},
      {85.0, 70.5, 15.23, 92.98},
      // oracle settings, first benchmark
      {93.4, 83.2, 17.78, 106.08},
      {92.3, 85.8, 18.61, 107.66},
      {84.0, 72.8, 16.10, 94.50},
      {88.9, 67.1, 16.90, 94.90},
      // oracle settings, revised benchmark
      {92.8, 84.5, 18.90, 107.55},
      {92.6, 86.1, 17.67, 107.20, 107.02},
      {85.1, 73.5, 16.22, 95.52},
      {89.6, 68.6, 15.46, 94.56},
  };

  int corrected = 0;
  for (const Row& r : rows) {
    double got = combined_score(r.inform, r.success, r.bleu);
    double expected = r.corrected > 0 ? r.corrected : r.printed;
    if (std::abs(got - expected) > 0.01 + 1e-12) {
      return {false, format("(%.1f, %.1f, %.2f) -> %.4f, expected %.2f",
                            r.inform, r.success, r.bleu, got, expected)};
    }
    if (r.corrected > 0) ++corrected;
  }
  return {true, format("18 rows within 0.01; %d published cells recomputed "
                       "(87.36 -> 88.36, 107.2 -> 107.02)", corrected)};
}

// ---------------------------------------------------------------------------
// 2. Analytic gradients against central finite differences.

Outcome gradient_check() {
  auto start = std::chrono::steady_clock::now();

  ModelConfig cfg;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.dim = 16;
  cfg.ff = 32;
  cfg.vocab_size = 20;
  cfg.max_len = 32;
  Model model = Model::random_init(cfg, 33);

  Rng rng(91);
  std::vector<Model::Example> batch(2);
  for (auto& ex : batch) {
    int len = 10 + int(rng.below(4));
    for (int i = 0; i < len; ++i) {
      ex.tokens.push_back(int(rng.below(cfg.vocab_size)));
    }
    ex.mask.assign(ex.tokens.size() - 1, 1.0);
    ex.mask[0] = 0.0;
  }

  Params grads;
  model.loss_and_grads(batch, grads);
  std::map<std::string, Eigen::MatrixXd> analytic;
  grads.for_each([&](const std::string& name, Eigen::Ref<Eigen::MatrixXd> g) {
    analytic[name] = g;
  });

  const double h = 1e-5;
  double worst = 0.0;
  std::string worst_block;
  model.params().for_each([&](const std::string& name,
                              Eigen::Ref<Eigen::MatrixXd> w) {
    const Eigen::MatrixXd& g = analytic.at(name);
    for (int probe = 0; probe < 4; ++probe) {
      Eigen::Index r = Eigen::Index(rng.below(std::size_t(w.rows())));
      Eigen::Index c = Eigen::Index(rng.below(std::size_t(w.cols())));
      double keep = w(r, c);
      w(r, c) = keep + h;
      double up = model.loss(batch);
      w(r, c) = keep - h;
      double down = model.loss(batch);
      w(r, c) = keep;

      double fd = (up - down) / (2 * h);
      double an = g(r, c);
      double rel = std::abs(fd - an) / std::max(std::abs(fd) + std::abs(an), 1e-4);
      if (rel > worst) {
        worst = rel;
        worst_block = name;
      }
    }
  });

  double secs = seconds_since(start);
  bool pass = worst <= 1e-4 && secs < 60.0;
  return {pass, format("max rel err %.2e (%s), %.1fs", worst,
                       worst_block.c_str(), secs)};
}

// ---------------------------------------------------------------------------
// 3. Causality of the logits.

Outcome causality() {
  ModelConfig cfg;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.dim = 16;
  cfg.ff = 32;
  cfg.vocab_size = 30;
  cfg.max_len = 32;

  Rng rng(17);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Model model = Model::random_init(cfg, 100 + trial);
    int len = 4 + int(rng.below(17));
    std::vector<int> seq;
    for (int i = 0; i < len; ++i) seq.push_back(int(rng.below(cfg.vocab_size)));

    Eigen::MatrixXd base = model.logits(seq);
    int j = 1 + int(rng.below(std::size_t(len - 1)));
    std::vector<int> bumped = seq;
    bumped[j] = (bumped[j] + 1 + int(rng.below(cfg.vocab_size - 1))) %
                cfg.vocab_size;
    Eigen::MatrixXd moved = model.logits(bumped);

    double diff =
        (moved.topRows(j) - base.topRows(j)).cwiseAbs().maxCoeff();
    worst = std::max(worst, diff);
  }
  return {worst <= 1e-12, format("100 cases, max drift %.3e", worst)};
}

// ---------------------------------------------------------------------------
// 4. Loss calibration and single-sequence memorization.

Outcome loss_calibration() {
  const int vocab = 23;
  Eigen::MatrixXd uniform = Eigen::MatrixXd::Zero(5, vocab);
  std::vector<int> targets = {1, 7, 0, 22, 13};
  double loss = nll_loss(uniform, targets);
  if (std::abs(loss - std::log(double(vocab))) > 1e-9) {
    return {false, format("uniform loss %.12f vs ln(%d)", loss, vocab)};
  }

  Vocab v = Vocab::build({"start a b c d e f g stop"}, tok::segment_specials());
  std::vector<int> ids = v.encode("start a b c d e f g stop");

  ModelConfig cfg;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.dim = 32;
  cfg.ff = 64;
  cfg.vocab_size = int(v.size());
  cfg.max_len = 16;
  Model model = Model::random_init(cfg, 5);

  Model::Example ex;
  ex.tokens = ids;
  Model::TrainOptions opts;
  opts.steps = 300;
  opts.batch_size = 4;
  opts.lr = 3e-3;
  opts.seed = 5;
  model.train({ex, ex, ex, ex}, opts);

  double final_loss = model.loss({ex});
  std::vector<int> decoded = model.greedy_decode({ids[0]}, {}, int(ids.size()) - 1);
  bool exact = std::vector<int>(ids.begin() + 1, ids.end()) == decoded;
  return {final_loss < 0.1 && exact,
          format("overfit loss %.4f, suffix %s", final_loss,
                 exact ? "exact" : "WRONG")};
}

// ---------------------------------------------------------------------------
// 5. Schema round-trips and malformed-input tolerance.

Outcome schema_round_trip() {
  Ontology onto = default_ontology();
  SlotLexicon slots = onto.slot_lexicon();

  std::vector<std::string> domains, acts;
  std::vector<std::pair<std::string, std::string>> slot_values;
  for (const DomainSpec& d : onto.domains) {
    domains.push_back(d.name);
    for (const SlotSpec& s : d.informable) {
      for (const std::string& val : s.values) slot_values.push_back({s.name, val});
    }
  }
  acts = {"inform", "request", "offer", "offerbooked", "bye"};

  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    BeliefState state;
    int n = int(rng.below(6));
    for (int i = 0; i < n; ++i) {
      const auto& [slot, value] = slot_values[rng.below(slot_values.size())];
      state.push_back({domains[rng.below(domains.size())], slot, value});
    }
    BeliefState canon = canonicalize(state);
    ParsedBelief parsed = parse_belief(serialize_belief(canon), slots);
    if (parsed.failed || parsed.state != canon) {
      return {false, format("belief mismatch on trial %d", trial)};
    }

    ActionList actions;
    int m = int(rng.below(4));
    for (int i = 0; i < m; ++i) {
      actions.push_back({domains[rng.below(domains.size())],
                         acts[rng.below(acts.size())],
                         slot_values[rng.below(slot_values.size())].first});
    }
    std::string text = serialize_actions(actions) + " " +
                       serialize_response("ok then .");
    ParsedActionResponse pa = parse_action_response(text);
    if (pa.actions != actions || pa.response != "ok then .") {
      return {false, format("action mismatch on trial %d", trial)};
    }
  }

  std::vector<std::string> soup = {"<|belief|>",  "<|endofbelief|>", ",",
                                   "train",       "hotel",           "day",
                                   "<|action|>",  "<|response|>",    "monday",
                                   "book",        "people",          "<|db|>",
                                   "<unk>",       "leaveat",         "08:15"};
  for (int trial = 0; trial < 1000; ++trial) {
    std::string text;
    int n = int(rng.below(24));
    for (int i = 0; i < n; ++i) {
      text += soup[rng.below(soup.size())];
      text += rng.bernoulli(0.8) ? " " : "";
    }
    parse_belief(text, slots);
    parse_action_response(text);
  }
  return {true, "1000 round-trips exact, 1000 malformed strings tolerated"};
}

// ---------------------------------------------------------------------------
// 6. Database queries equal brute force; anti-monotonicity.

Outcome db_equivalence() {
  GenConfig cfg;
  cfg.num_train = 1;
  cfg.num_test = 1;
  cfg.seed = 13;
  GeneratedData world = generate_corpus(cfg);
  const Ontology& onto = world.ontology;

  Rng rng(29);
  auto random_belief = [&](int max_constraints) {
    BeliefState state;
    int n = int(rng.below(std::size_t(max_constraints + 1)));
    for (int i = 0; i < n; ++i) {
      const DomainSpec& d = onto.domains[rng.below(onto.domains.size())];
      const SlotSpec& s = d.informable[rng.below(d.informable.size())];
      state.push_back({d.name, s.name, s.values[rng.below(s.values.size())]});
    }
    return canonicalize(state);
  };

  auto brute = [&](const BeliefState& belief, const std::string& domain) {
    std::vector<const EntityRow*> out;
    const DomainSpec& spec = onto.at(domain);
    for (const EntityRow& row : world.db.rows(domain)) {
      bool ok = true;
      for (const BeliefTriplet& b : belief) {
        if (b.domain != domain || spec.is_booking(b.slot)) continue;
        const std::string* have = row.get(b.slot);
        if (!have || *have != b.value) ok = false;
      }
      if (ok) out.push_back(&row);
    }
    return out;
  };

  for (int trial = 0; trial < 1000; ++trial) {
    BeliefState belief = random_belief(4);
    const std::string& domain =
        onto.domains[rng.below(onto.domains.size())].name;
    if (world.db.query(belief, domain, onto) != brute(belief, domain)) {
      return {false, format("query mismatch on trial %d", trial)};
    }
  }

  for (int trial = 0; trial < 1000; ++trial) {
    BeliefState base = random_belief(3);
    const DomainSpec& d = onto.domains[rng.below(onto.domains.size())];
    const SlotSpec& s = d.informable[rng.below(d.informable.size())];
    BeliefState more = base;
    more.push_back({d.name, s.name, s.values[rng.below(s.values.size())]});
    more = canonicalize(more);

    auto before = world.db.query(base, d.name, onto);
    auto after = world.db.query(more, d.name, onto);
    for (const EntityRow* row : after) {
      if (std::find(before.begin(), before.end(), row) == before.end()) {
        return {false, format("anti-monotonicity broken on trial %d", trial)};
      }
    }
  }
  return {true, "1000 query + 1000 constraint-addition cases"};
}

// ---------------------------------------------------------------------------
// Shared world for the end-to-end criteria.

struct TrainedRun {
  GeneratedData data;
  Vocab vocab;
  Model model{ModelConfig{.vocab_size = 14}};
  double train_seconds = 0.0;
  MetricsReport report;
};

constexpr int kTrainSteps = 10500;

GeneratedData acceptance_world(uint64_t seed) {
  GenConfig cfg;
  cfg.num_train = 500;
  cfg.num_test = 100;
  cfg.seed = seed;
  return generate_corpus(cfg);
}

MetricsReport eval_generated(const TrainedRun& run, const SerializeOptions& opts) {
  EvalSettings settings;
  settings.belief = BeliefMode::generated;
  settings.db = DbMode::dynamic;
  settings.action = ActionMode::generated;
  settings.serialize = opts;
  EvalOutcome out =
      evaluate_corpus(run.data.test, run.data.ontology, run.data.db, run.vocab,
                      settings, model_decoder_factory(run.model, run.vocab));
  return out.report;
}

TrainedRun train_run(uint64_t seed, bool end_tokens) {
  TrainedRun run;
  run.data = acceptance_world(seed);

  SequenceOptions seq_opts;
  seq_opts.serialize.end_tokens = end_tokens;
  std::vector<std::string> sequences = training_sequences(run.data.train, seq_opts);
  run.vocab = Vocab::build(sequences, tok::segment_specials());

  ModelConfig cfg;
  cfg.vocab_size = int(run.vocab.size());
  std::vector<Model::Example> examples =
      make_training_examples(sequences, run.vocab, cfg.max_len, true);

  run.model = Model::random_init(cfg, seed);
  Model::TrainOptions opts;
  opts.steps = kTrainSteps;
  opts.seed = seed;

  auto start = std::chrono::steady_clock::now();
  run.model.train(examples, opts);
  run.train_seconds = seconds_since(start);

  run.report = eval_generated(run, seq_opts.serialize);
  return run;
}

// ---------------------------------------------------------------------------
// 7. All-oracle replay of the gold corpus.

Outcome oracle_replay(const GeneratedData& world) {
  Vocab vocab = Vocab::build(training_sequences(world.train),
                             tok::segment_specials());
  EvalSettings settings;
  settings.belief = BeliefMode::oracle;
  settings.db = DbMode::oracle;
  settings.action = ActionMode::oracle;

  EvalOutcome out =
      evaluate_corpus(world.test, world.ontology, world.db, vocab, settings,
                      gold_replay_factory(vocab, settings.serialize));
  const MetricsReport& r = out.report;
  bool pass = r.joint == 1.0 && r.inform == 100.0 && r.success == 100.0 &&
              r.bleu == 100.0 && r.combined == 200.0;
  return {pass, format("joint %.4f inform %.1f success %.1f bleu %.2f "
                       "combined %.2f", r.joint, r.inform, r.success, r.bleu,
                       r.combined)};
}

// ---------------------------------------------------------------------------
// 8. End-to-end experiment, two seeds.

Outcome end_to_end(const TrainedRun& first, const TrainedRun& second) {
  auto judge = [](const TrainedRun& run) {
    return run.report.joint >= 0.90 && run.report.combined >= 150.0 &&
           run.train_seconds <= 600.0;
  };
  std::string detail = format(
      "seed 1: joint %.4f combined %.2f train %.0fs | seed 2: joint %.4f "
      "combined %.2f train %.0fs",
      first.report.joint, first.report.combined, first.train_seconds,
      second.report.joint, second.report.combined, second.train_seconds);
  return {judge(first) && judge(second), detail};
}

// ---------------------------------------------------------------------------
// 9. Removing segment end markers hurts.

Outcome end_token_ablation(const TrainedRun& with_tokens) {
  TrainedRun without = train_run(1, false);
  bool pass = without.report.joint < with_tokens.report.joint &&
              without.report.combined < with_tokens.report.combined;
  return {pass, format("with: joint %.4f combined %.2f | without: joint %.4f "
                       "combined %.2f",
                       with_tokens.report.joint, with_tokens.report.combined,
                       without.report.joint, without.report.combined)};
}

// ---------------------------------------------------------------------------
// 10. Noise auditor recall and precision.

Outcome noise_audit(const GeneratedData& world) {
  if (!audit_annotations(world.train, world.ontology).empty()) {
    return {false, "clean corpus raised flags"};
  }

  NoiseResult t2 = inject_noise(world.train, world.ontology, NoiseType::t2,
                                0.1, 41);
  std::set<std::pair<std::string, int>> taken;
  for (const NoiseRecord& r : t2.records) taken.insert({r.dialogue_id, r.turn});
  NoiseResult both = inject_noise(t2.corpus, world.ontology, NoiseType::t4,
                                  0.1, 42, taken);

  std::vector<NoiseRecord> records = t2.records;
  records.insert(records.end(), both.records.begin(), both.records.end());
  std::vector<AuditFlag> flags = audit_annotations(both.corpus, world.ontology);

  auto matches = [](const AuditFlag& f, const NoiseRecord& r) {
    return f.dialogue_id == r.dialogue_id && f.turn == r.turn &&
           f.type == r.type;
  };
  int recalled = 0;
  for (const NoiseRecord& r : records) {
    for (const AuditFlag& f : flags) {
      if (matches(f, r)) {
        ++recalled;
        break;
      }
    }
  }
  int justified = 0;
  for (const AuditFlag& f : flags) {
    for (const NoiseRecord& r : records) {
      if (matches(f, r)) {
        ++justified;
        break;
      }
    }
  }

  double recall = records.empty() ? 0.0 : double(recalled) / records.size();
  double precision = flags.empty() ? 0.0 : double(justified) / flags.size();
  return {recall >= 0.9 && precision >= 0.9,
          format("%zu injected, %zu flags, recall %.3f precision %.3f",
                 records.size(), flags.size(), recall, precision)};
}

// ---------------------------------------------------------------------------
// 11. BLEU fixture and self-BLEU on the test responses.

Outcome bleu_fixture(const GeneratedData& world) {
  // Pooled clipped counts for the two-sentence fixture:
  //   candidate 1 "the cat sat on the mat" vs "the cat sat on a mat"
  //   candidate 2 "there are three trains to ely today"
  //             vs "there are three trains to ely on monday"
  // unigrams 11/13 (5/6 + 6/7, the second "the" clips), bigrams 8/11
  // (3/5 + 5/6), trigrams 6/9 (2/4 + 4/5), 4-grams 4/7 (1/3 + 3/4).
  // c = 13, r = 14, BP = exp(1 - 14/13) = 0.925961078642316.
  // 100 * BP * exp(mean log p_k) = 64.43132520717141.
  std::vector<std::string> candidates = {
      "the cat sat on the mat", "there are three trains to ely today"};
  std::vector<std::string> references = {
      "the cat sat on a mat", "there are three trains to ely on monday"};
  double got = bleu(candidates, references);
  if (std::abs(got - 64.43132520717141) > 1e-9) {
    return {false, format("fixture bleu %.11f", got)};
  }

  std::vector<std::string> responses;
  for (const Dialogue& d : world.test.dialogues) {
    for (const Turn& t : d.turns) responses.push_back(t.response_lex);
  }
  double self = bleu(responses, responses);
  if (self != 100.0) {
    return {false, format("self bleu %.6f on %zu responses", self,
                          responses.size())};
  }
  return {true, format("fixture %.11f, self bleu 100 on %zu responses", got,
                       responses.size())};
}

}  // namespace

int main() {
  std::printf("acceptance suite: eleven criteria, slow ones train real "
              "models\n");
  std::fflush(stdout);

  report(1, "combined-score formula and table reconstruction",
         combined_formula());
  report(2, "analytic gradients match finite differences", gradient_check());
  report(3, "causal masking isolates later tokens", causality());
  report(4, "loss calibration and single-sequence memorization",
         loss_calibration());
  report(5, "schema round-trips and malformed tolerance", schema_round_trip());
  report(6, "db queries equal brute force, anti-monotone", db_equivalence());

  GeneratedData world = acceptance_world(1);
  report(7, "all-oracle replay reproduces gold exactly", oracle_replay(world));
  report(10, "noise auditor recall and precision", noise_audit(world));
  report(11, "bleu fixture and self-bleu", bleu_fixture(world));

  TrainedRun first = train_run(1, true);
  TrainedRun second = train_run(2, true);
  report(8, "end-to-end desk-scale experiment, two seeds",
         end_to_end(first, second));
  report(9, "removing end tokens lowers joint and combined",
         end_token_ablation(first));

  std::printf("%d of 11 criteria failed\n", failures);
  return failures;
}
