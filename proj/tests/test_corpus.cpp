#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <utility>
#include <vector>

#include "minitod/corpus.hpp"
#include "minitod/database.hpp"
#include "minitod/lexicon.hpp"
#include "minitod/tokenizer.hpp"

using namespace minitod;

namespace {

std::string tmp_path(const std::string& stem) {
  return "/tmp/minitod_corpus_" + std::to_string(getpid()) + "_" + stem;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

GeneratedData small_world(uint64_t seed = 7) {
  GenConfig cfg;
  cfg.num_train = 40;
  cfg.num_test = 10;
  cfg.seed = seed;
  return generate_corpus(cfg);
}

bool flag_matches(const AuditFlag& f, const NoiseRecord& r) {
  return f.dialogue_id == r.dialogue_id && f.turn == r.turn && f.type == r.type;
}

}  // namespace

TEST_CASE("identical configs produce byte-identical artifacts") {
  GeneratedData a = small_world();
  GeneratedData b = small_world();

  std::string pa = tmp_path("a.json");
  std::string pb = tmp_path("b.json");
  save_corpus(a.train, pa);
  save_corpus(b.train, pb);
  CHECK(slurp(pa) == slurp(pb));

  save_corpus(a.test, pa);
  save_corpus(b.test, pb);
  CHECK(slurp(pa) == slurp(pb));

  a.db.save(pa);
  b.db.save(pb);
  CHECK(slurp(pa) == slurp(pb));

  a.ontology.save(pa);
  b.ontology.save(pb);
  CHECK(slurp(pa) == slurp(pb));

  GeneratedData c = small_world(8);
  save_corpus(c.train, pb);
  CHECK(slurp(pa) != slurp(pb));

  std::remove(pa.c_str());
  std::remove(pb.c_str());
}

TEST_CASE("saved corpora load back unchanged") {
  GeneratedData g = small_world();
  std::string path = tmp_path("roundtrip.json");
  save_corpus(g.train, path);

  std::vector<std::string> warnings;
  Corpus loaded = load_corpus(path, g.ontology, &warnings);
  CHECK(warnings.empty());
  REQUIRE(loaded.dialogues.size() == g.train.dialogues.size());
  CHECK(loaded.total_turns() == g.train.total_turns());
  CHECK(training_sequences(loaded) == training_sequences(g.train));
  std::remove(path.c_str());
}

TEST_CASE("gold responses round-trip through the lexicon") {
  GeneratedData g = small_world();
  Lexicon lex(g.ontology);

  for (const Dialogue& d : g.train.dialogues) {
    for (const Turn& t : d.turns) {
      std::vector<const EntityRow*> rows;
      if (g.ontology.find(t.active_domain)) {
        rows = g.db.query(t.belief, t.active_domain, g.ontology);
      }
      Lexicon::LexResult filled =
          lex.lexicalize(t.response_delex, t.belief, rows, t.db.count);
      CHECK(filled.unresolved.empty());
      CHECK(filled.text == t.response_lex);

      const EntityRow* offered = rows.empty() ? nullptr : rows.front();
      CHECK(lex.delexicalize(t.response_lex, offered, t.belief) ==
            t.response_delex);
    }
  }
}

TEST_CASE("beliefs are canonical, cumulative, and db summaries derivable") {
  GeneratedData g = small_world();

  for (const Dialogue& d : g.train.dialogues) {
    BeliefState prev;
    for (const Turn& t : d.turns) {
      CHECK(canonicalize(t.belief) == t.belief);
      for (const BeliefTriplet& b : prev) {
        CHECK(std::count(t.belief.begin(), t.belief.end(), b) == 1);
      }
      prev = t.belief;

      REQUIRE(g.ontology.find(t.active_domain) != nullptr);
      auto rows = g.db.query(t.belief, t.active_domain, g.ontology);
      CHECK(t.db.count == int(rows.size()));

      const DomainSpec& spec = g.ontology.at(t.active_domain);
      bool booked = false;
      for (const BeliefTriplet& b : t.belief) {
        if (b.domain == t.active_domain && spec.is_booking(b.slot)) booked = true;
      }
      CHECK(t.db.status == (booked ? BookingStatus::available
                                   : BookingStatus::not_applicable));
    }
  }
}

TEST_CASE("every goal is satisfiable against the store") {
  GeneratedData g = small_world();
  for (const Dialogue& d : g.train.dialogues) {
    for (const auto& [domain, goal] : d.goal.domains) {
      BeliefState all;
      for (const auto& [slot, value] : goal.constraints) {
        all.push_back({domain, slot, value});
      }
      CHECK(!g.db.query(canonicalize(all), domain, g.ontology).empty());
    }
  }
}

TEST_CASE("training sequences keep the segment scaffolding in order") {
  GeneratedData g = small_world();
  std::vector<std::string> seqs = training_sequences(g.train);
  REQUIRE(seqs.size() == g.train.total_turns());

  const std::vector<std::string> order = {
      tok::kContext, tok::kEndOfContext, tok::kBelief,   tok::kEndOfBelief,
      tok::kDb,      tok::kEndOfDb,      tok::kAction,   tok::kEndOfAction,
      tok::kResponse, tok::kEndOfResponse};
  for (const std::string& s : seqs) {
    std::size_t at = 0;
    for (const std::string& marker : order) {
      std::size_t pos = s.find(marker, at);
      REQUIRE(pos != std::string::npos);
      CHECK(s.find(marker, pos + 1) == std::string::npos);
      at = pos + marker.size();
    }
    CHECK(s.rfind(tok::kEndOfResponse) == s.size() - std::string(tok::kEndOfResponse).size());
  }

  SequenceOptions no_db;
  no_db.include_db = false;
  for (const std::string& s : training_sequences(g.train, no_db)) {
    CHECK(s.find(tok::kDb) == std::string::npos);
    CHECK(s.find(tok::kEndOfDb) == std::string::npos);
  }

  SequenceOptions bare;
  bare.serialize.end_tokens = false;
  for (const std::string& s : training_sequences(g.train, bare)) {
    CHECK(s.find(tok::kEndOfBelief) == std::string::npos);
    CHECK(s.find(tok::kEndOfResponse) == std::string::npos);
  }
}

TEST_CASE("clean corpora audit clean") {
  GeneratedData g = small_world();
  CHECK(audit_annotations(g.train, g.ontology).empty());
  CHECK(audit_annotations(g.test, g.ontology).empty());
}

TEST_CASE("ambiguity noise cannot be injected") {
  GeneratedData g = small_world();
  CHECK_THROWS(inject_noise(g.train, g.ontology, NoiseType::t1, 0.1, 3));
}

TEST_CASE("injected noise surfaces with high recall and precision") {
  GeneratedData g = small_world();

  for (NoiseType type : {NoiseType::t2, NoiseType::t3, NoiseType::t4}) {
    CAPTURE(to_string(type));
    NoiseResult noised = inject_noise(g.train, g.ontology, type, 0.15, 11);
    REQUIRE(!noised.records.empty());

    std::vector<AuditFlag> flags = audit_annotations(noised.corpus, g.ontology);
    int hit = 0;
    for (const NoiseRecord& r : noised.records) {
      for (const AuditFlag& f : flags) {
        if (flag_matches(f, r)) {
          ++hit;
          break;
        }
      }
    }
    int justified = 0;
    for (const AuditFlag& f : flags) {
      for (const NoiseRecord& r : noised.records) {
        if (flag_matches(f, r)) {
          ++justified;
          break;
        }
      }
    }
    double recall = double(hit) / double(noised.records.size());
    double precision = flags.empty() ? 0.0 : double(justified) / double(flags.size());
    CAPTURE(noised.records.size());
    CAPTURE(flags.size());
    CHECK(recall >= 0.9);
    CHECK(precision >= 0.9);
  }
}

TEST_CASE("noise injection is deterministic and respects exclusions") {
  GeneratedData g = small_world();
  NoiseResult a = inject_noise(g.train, g.ontology, NoiseType::t2, 0.1, 5);
  NoiseResult b = inject_noise(g.train, g.ontology, NoiseType::t2, 0.1, 5);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].dialogue_id == b.records[i].dialogue_id);
    CHECK(a.records[i].turn == b.records[i].turn);
    CHECK(a.records[i].original == b.records[i].original);
  }

  std::set<std::pair<std::string, int>> exclude;
  for (const NoiseRecord& r : a.records) {
    exclude.insert({r.dialogue_id, r.turn});
  }
  NoiseResult c = inject_noise(g.train, g.ontology, NoiseType::t3, 0.1, 5, exclude);
  for (const NoiseRecord& r : c.records) {
    CHECK(exclude.count({r.dialogue_id, r.turn}) == 0);
  }
}
