#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "minitod/evaluator.hpp"

using namespace minitod;

namespace {

Goal train_goal(std::vector<std::pair<std::string, std::string>> constraints,
                std::vector<std::string> requested) {
  Goal g;
  GoalDomain d;
  d.constraints = std::move(constraints);
  d.requested = std::move(requested);
  g.domains.emplace_back("train", std::move(d));
  return g;
}

}  // namespace

TEST_CASE("joint goal accuracy compares canonical sets per turn") {
  std::vector<BeliefState> gold = {
      {{"train", "destination", "ely"}, {"train", "day", "monday"}},
      {{"train", "destination", "ely"}},
      {},
  };
  std::vector<BeliefState> pred = {
      // same set, different order and a duplicate
      {{"train", "day", "monday"},
       {"train", "destination", "ely"},
       {"train", "day", "monday"}},
      {{"train", "destination", "norwich"}},
      {},
  };
  CHECK(joint_goal_accuracy(pred, gold) == doctest::Approx(2.0 / 3.0));
  CHECK(joint_goal_accuracy({}, {}) == 0.0);
  CHECK_THROWS(joint_goal_accuracy(pred, {}));
}

TEST_CASE("bleu of a corpus against itself is 100") {
  std::vector<std::string> texts = {"the train leaves at 08:15 .",
                                    "there are many options today ."};
  CHECK(bleu(texts, texts) == doctest::Approx(100.0));
}

TEST_CASE("bleu matches a hand-computed fixture") {
  // Pooled clipped counts: unigrams 11/13 (candidate 1 matches 5 of 6, the
  // second "the" clips away; candidate 2 matches 6 of 7), bigrams 8/11 (3/5
  // and 5/6), trigrams 6/9 (2/4 and 4/5), 4-grams 4/7 (1/3 and 3/4).
  // c = 13, r = 14, BP = exp(1 - 14/13) = 0.925961078642316.
  // 100 * BP * exp(mean log p_k) = 64.43132520717141.
  std::vector<std::string> cand = {"the cat sat on the mat",
                                   "there are three trains to ely today"};
  std::vector<std::string> ref = {"the cat sat on a mat",
                                  "there are three trains to ely on monday"};
  CHECK(bleu(cand, ref) == doctest::Approx(64.43132520717141).epsilon(1e-9));
}

TEST_CASE("short corpora drop unattested n-gram orders instead of zeroing") {
  // Two-token texts have no trigrams or 4-grams; the geometric mean runs
  // over orders 1 and 2 only.
  std::vector<std::string> cand = {"hello there"};
  std::vector<std::string> ref = {"hello there"};
  CHECK(bleu(cand, ref) == doctest::Approx(100.0));

  // An attested order with zero matches still zeroes the whole score.
  std::vector<std::string> c2 = {"a b c d"};
  std::vector<std::string> r2 = {"a x c x"};
  CHECK(bleu(c2, r2) == doctest::Approx(0.0));
}

TEST_CASE("brevity penalty punishes short candidates only") {
  std::vector<std::string> shorter = {"the cat sat"};
  std::vector<std::string> ref = {"the cat sat on the mat"};
  // p1 = p2 = p3 = 1, order 4 unattested, c = 3, r = 6, BP = exp(1 - 2).
  CHECK(bleu(shorter, ref) ==
        doctest::Approx(100.0 * std::exp(-1.0)).epsilon(1e-9));

  std::vector<std::string> longer = {"the cat sat on the mat tonight"};
  // No penalty when the candidate is longer: p1 = 6/7, p2 = 5/6, p3 = 4/5,
  // p4 = 3/4.
  double want = 100.0 * std::exp((std::log(6.0 / 7.0) + std::log(5.0 / 6.0) +
                                  std::log(4.0 / 5.0) + std::log(3.0 / 4.0)) /
                                 4.0);
  CHECK(bleu(longer, ref) == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("bleu validates parallel inputs") {
  CHECK_THROWS(bleu({"a"}, {}));
  CHECK(bleu({}, {}) == 0.0);
}

TEST_CASE("inform needs a constraint-satisfying offer, success adds requests") {
  EntityRow row;
  row.domain = "train";
  row.attrs = {{"id", "tr0001"},
               {"destination", "ely"},
               {"day", "monday"},
               {"price", "10.10 gbp"}};

  Goal goal = train_goal({{"destination", "ely"}, {"day", "monday"}},
                         {"price"});

  DialogueResult full;
  full.dialogue_id = "d1";
  full.goal = &goal;
  full.offered["train"] = &row;
  full.system_responses = {"tr0001 costs 10.10 gbp ."};

  DialogueResult no_request = full;
  no_request.dialogue_id = "d2";
  no_request.system_responses = {"tr0001 is a perfect match ."};

  DialogueResult wrong_entity = full;
  wrong_entity.dialogue_id = "d3";
  EntityRow other = row;
  other.attrs[1].second = "norwich";
  wrong_entity.offered["train"] = &other;

  DialogueResult no_offer = full;
  no_offer.dialogue_id = "d4";
  no_offer.offered.clear();

  InformSuccess one = inform_success({full});
  CHECK(one.inform == doctest::Approx(100.0));
  CHECK(one.success == doctest::Approx(100.0));

  InformSuccess two = inform_success({full, no_request});
  CHECK(two.inform == doctest::Approx(100.0));
  CHECK(two.success == doctest::Approx(50.0));

  InformSuccess three = inform_success({full, wrong_entity, no_offer});
  CHECK(three.domains_evaluated == 3);
  CHECK(three.inform == doctest::Approx(100.0 / 3.0));
  CHECK(three.success == doctest::Approx(100.0 / 3.0));
}

TEST_CASE("requested values may appear in any turn and match whole tokens") {
  EntityRow row;
  row.domain = "train";
  row.attrs = {{"id", "tr0001"}, {"destination", "ely"},
               {"duration", "17 minutes"}};
  Goal goal = train_goal({{"destination", "ely"}}, {"duration"});

  DialogueResult spread;
  spread.dialogue_id = "d1";
  spread.goal = &goal;
  spread.offered["train"] = &row;
  spread.system_responses = {"tr0001 goes to ely .",
                             "the trip takes 17 minutes exactly ."};
  CHECK(inform_success({spread}).success == doctest::Approx(100.0));

  // "170 minutes" must not satisfy a request for "17 minutes".
  DialogueResult partial = spread;
  partial.system_responses = {"the trip takes 170 minutes ."};
  CHECK(inform_success({partial}).success == doctest::Approx(0.0));
}

TEST_CASE("goal domains without constraints or requests are skipped") {
  Goal empty_goal;
  DialogueResult r;
  r.dialogue_id = "d1";
  r.goal = &empty_goal;
  InformSuccess out = inform_success({r});
  CHECK(out.domains_evaluated == 0);
  CHECK(out.inform == 0.0);
  CHECK(out.success == 0.0);
}

TEST_CASE("combined score weighs task completion over fluency") {
  CHECK(combined_score(100.0, 100.0, 100.0) == doctest::Approx(200.0));
  CHECK(combined_score(80.0, 60.0, 50.0) ==
        doctest::Approx(50.0 + 0.5 * (80.0 + 60.0)));
  CHECK(combined_score(0.0, 0.0, 0.0) == 0.0);
}

TEST_CASE("metrics report serializes to json and csv") {
  MetricsReport m;
  m.joint = 0.5;
  m.inform = 75.0;
  m.success = 50.0;
  m.bleu = 42.0;
  m.combined = combined_score(m.inform, m.success, m.bleu);
  m.turns = 10;
  m.dialogues = 3;
  std::string j = m.to_json();
  CHECK(j.find("\"joint_goal_accuracy\": 0.5") != std::string::npos);
  CHECK(j.find("\"combined\": 104.5") != std::string::npos);
  std::string header = MetricsReport::csv_header();
  std::string row = m.csv_row();
  CHECK(std::count(header.begin(), header.end(), ',') ==
        std::count(row.begin(), row.end(), ','));
  CHECK(row.find("104.5") != std::string::npos);
}
