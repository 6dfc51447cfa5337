#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "minitod/corpus.hpp"
#include "minitod/database.hpp"
#include "minitod/lexicon.hpp"
#include "minitod/ontology.hpp"
#include "minitod/rng.hpp"
#include "minitod/text.hpp"

namespace minitod {
namespace {

const std::vector<std::string> kDestinations = {"ely", "norwich", "stansted",
                                                "broxbourne", "ipswich"};
const std::vector<std::string> kDepartures = {"cambridge", "peterborough",
                                              "leicester", "stevenage",
                                              "birmingham"};
const std::vector<std::string> kDays = {"monday",   "tuesday", "wednesday",
                                        "thursday", "friday",  "saturday",
                                        "sunday"};
const std::vector<std::string> kLeaveTimes = {"08:15", "09:30", "10:45",
                                              "11:15", "13:30", "15:45",
                                              "17:15", "19:30"};
// Parallel to kLeaveTimes; disjoint from it so departure and arrival times
// never share surface strings.
const std::vector<std::string> kArriveTimes = {"09:07", "10:22", "11:37",
                                               "12:07", "14:22", "16:37",
                                               "18:07", "20:22"};
const std::vector<std::string> kPrices = {"10.10 gbp", "13.28 gbp", "16.50 gbp",
                                          "17.60 gbp", "23.60 gbp", "30.24 gbp"};
const std::vector<std::string> kDurations = {"17 minutes", "29 minutes",
                                             "45 minutes", "51 minutes",
                                             "60 minutes", "79 minutes",
                                             "88 minutes"};
const std::vector<std::string> kPeople = {"two", "three", "four", "five",
                                          "six",  "seven", "eight"};
const std::vector<std::string> kAreas = {"north", "south", "east", "west",
                                         "centre"};
const std::vector<std::string> kPriceRanges = {"cheap", "moderate", "expensive"};
const std::vector<std::string> kHotelTypes = {"hotel", "guesthouse"};
const std::vector<std::string> kStays = {"1 night", "2 nights", "3 nights",
                                         "4 nights", "5 nights"};
const std::vector<std::string> kHotelNames = {
    "alpha lodge",     "acorn house",        "gonville resthouse",
    "warkworth place", "kirkwood corner",    "avalon rooms",
    "hamilton retreat", "leverton inn",      "arbury villa",
    "carolina homestead", "aylesbray den",   "finches hideaway",
    "lensfield quarters", "sleeperz cabins", "worth annex",
    "bridge keep"};
const std::vector<std::string> kStreets = {"mill",    "tenison", "chesterton",
                                           "histon",  "norfolk", "regent",
                                           "milton",  "newmarket"};
const std::vector<std::string> kStreetSuffixes = {"road", "street", "lane"};

constexpr int kTrainCount = 25;
constexpr int kHotelCount = 16;

std::vector<EntityRow> make_entities(Rng& rng) {
  std::vector<EntityRow> rows;
  std::set<std::string> used_ids;
  for (int i = 0; i < kTrainCount; ++i) {
    std::string id;
    do {
      id = "tr";
      for (int k = 0; k < 4; ++k) id += char('0' + rng.below(10));
    } while (!used_ids.insert(id).second);
    std::size_t slot = rng.below(kLeaveTimes.size());
    EntityRow row;
    row.domain = "train";
    row.attrs = {{"id", id},
                 {"destination", rng.pick(kDestinations)},
                 {"departure", rng.pick(kDepartures)},
                 {"day", rng.pick(kDays)},
                 {"leaveat", kLeaveTimes[slot]},
                 {"arriveby", kArriveTimes[slot]},
                 {"price", rng.pick(kPrices)},
                 {"duration", rng.pick(kDurations)}};
    rows.push_back(std::move(row));
  }

  std::vector<std::string> names = kHotelNames;
  rng.shuffle(names);
  std::set<std::string> used_phones;
  for (int i = 0; i < kHotelCount; ++i) {
    std::string phone;
    do {
      phone = "01223";
      for (int k = 0; k < 6; ++k) phone += char('0' + rng.below(10));
    } while (!used_phones.insert(phone).second);
    std::string address = std::to_string(1 + rng.below(99)) + " " +
                          rng.pick(kStreets) + " " + rng.pick(kStreetSuffixes);
    std::string postcode = "cb";
    postcode += char('1' + rng.below(9));
    postcode += char('1' + rng.below(9));
    postcode += char('a' + rng.below(26));
    postcode += char('a' + rng.below(26));
    EntityRow row;
    row.domain = "hotel";
    row.attrs = {{"name", names[i]},
                 {"area", rng.pick(kAreas)},
                 {"pricerange", rng.pick(kPriceRanges)},
                 {"type", rng.pick(kHotelTypes)},
                 {"phone", phone},
                 {"address", address},
                 {"postcode", postcode}};
    rows.push_back(std::move(row));
  }
  return rows;
}

struct DomainGoalDraft {
  std::string domain;
  std::vector<std::pair<std::string, std::string>> constraints;  // slot order fixed
  std::vector<std::string> requested;
  std::vector<std::pair<std::string, std::string>> booking;
};

DomainGoalDraft sample_train_goal(Rng& rng, const std::vector<EntityRow>& entities) {
  std::vector<const EntityRow*> trains;
  for (const auto& row : entities) {
    if (row.domain == "train") trains.push_back(&row);
  }
  const EntityRow& e = *rng.pick(trains);
  DomainGoalDraft g;
  g.domain = "train";
  // destination and day are always constrained: the system policy requests
  // exactly the missing ones, so the set it may ask about has to be fixed.
  // Optional extras are only ever volunteered in the opener.
  g.constraints.emplace_back("destination", *e.get("destination"));
  g.constraints.emplace_back("day", *e.get("day"));
  if (rng.bernoulli(0.4)) g.constraints.emplace_back("leaveat", *e.get("leaveat"));
  if (rng.bernoulli(0.4)) g.constraints.emplace_back("departure", *e.get("departure"));
  if (rng.bernoulli(0.4)) g.requested.push_back("price");
  if (rng.bernoulli(0.4)) g.requested.push_back("duration");
  if (rng.bernoulli(0.55)) g.booking.emplace_back("book people", rng.pick(kPeople));
  return g;
}

DomainGoalDraft sample_hotel_goal(Rng& rng, const std::vector<EntityRow>& entities) {
  std::vector<const EntityRow*> hotels;
  for (const auto& row : entities) {
    if (row.domain == "hotel") hotels.push_back(&row);
  }
  const EntityRow& e = *rng.pick(hotels);
  DomainGoalDraft g;
  g.domain = "hotel";
  // type and area are always constrained so the system can request any
  // missing one; pricerange is optional and appears only in the opener.
  g.constraints.emplace_back("type", *e.get("type"));
  g.constraints.emplace_back("area", *e.get("area"));
  if (rng.bernoulli(0.6)) g.constraints.emplace_back("pricerange", *e.get("pricerange"));
  std::vector<std::string> wants;
  for (const char* slot : {"phone", "address", "postcode"}) {
    if (rng.bernoulli(0.35)) wants.push_back(slot);
  }
  if (wants.size() > 2) wants.resize(2);
  g.requested = std::move(wants);
  if (rng.bernoulli(0.55)) {
    g.booking.emplace_back("book day", rng.pick(kDays));
    g.booking.emplace_back("book stay", rng.pick(kStays));
  }
  return g;
}

const std::string* find_pair(const std::vector<std::pair<std::string, std::string>>& v,
                             const std::string& key) {
  for (const auto& [k, val] : v) {
    if (k == key) return &val;
  }
  return nullptr;
}

std::string article_for(const std::string& word) {
  return (!word.empty() && std::string("aeiou").find(word[0]) != std::string::npos)
             ? "an"
             : "a";
}

struct ScriptedTurn {
  std::string user;
  std::vector<BeliefTriplet> uttered;  // constraints introduced by this user turn
  std::string response_delex;
  ActionList actions;
};

class DialogueScript {
 public:
  DialogueScript(Rng& rng, const Ontology& onto, const Database& db,
                 const Lexicon& lexicon)
      : rng_(rng), onto_(onto), db_(db), lexicon_(lexicon) {}

  Dialogue build(const std::string& id, const std::vector<DomainGoalDraft>& goals) {
    Dialogue d;
    d.id = id;
    for (const auto& g : goals) {
      GoalDomain gd;
      gd.constraints = g.constraints;
      gd.requested = g.requested;
      gd.booking = g.booking;
      d.goal.domains.emplace_back(g.domain, std::move(gd));
    }

    belief_.clear();
    booked_.clear();
    for (std::size_t gi = 0; gi < goals.size(); ++gi) {
      run_domain(d, goals[gi], gi > 0);
    }
    ScriptedTurn bye;
    bye.user = rng_.pick(std::vector<std::string>{
        "thank you , that is all", "thanks , goodbye",
        "that is everything , thank you"});
    bye.response_delex = "you are welcome . goodbye .";
    bye.actions = {{"general", "bye", "none"}};
    commit(d, bye, goals.back().domain);
    return d;
  }

 private:
  void run_domain(Dialogue& d, const DomainGoalDraft& g, bool follow_up) {
    ScriptedTurn opener = make_opener(g, follow_up);
    finish_user_turn(d, opener, g);
    while (!pending_.empty()) {
      ScriptedTurn t = make_slot_answer(g, pending_.front());
      finish_user_turn(d, t, g);
    }
    if (!g.requested.empty()) {
      ScriptedTurn t = make_request_turn(g);
      finish_user_turn(d, t, g);
    }
    if (!g.booking.empty()) {
      ScriptedTurn t = make_booking_turn(g);
      booked_.insert(g.domain);
      t.response_delex = g.domain == "train"
                             ? "booking was successful . your tickets are at the station ."
                             : "booking was successful . enjoy your stay .";
      t.actions = {{g.domain, "offerbooked", "none"}};
      commit(d, t, g.domain);
    }
  }

  // The opener always volunteers the optional constraints; only slots the
  // system knows how to request (train destination/day, hotel type/area) may
  // be withheld. That keeps the request-or-offer choice a pure function of
  // the belief state: request the first missing requestable-by-policy slot,
  // offer once there is none.
  ScriptedTurn make_opener(const DomainGoalDraft& g, bool follow_up) {
    ScriptedTurn t;
    pending_.clear();
    if (g.domain == "train") {
      const std::string& dest = *find_pair(g.constraints, "destination");
      const std::string& day = *find_pair(g.constraints, "day");
      bool use_dest = rng_.bernoulli(0.7);
      bool use_day = rng_.bernoulli(0.5);
      if (!use_dest && !use_day) use_dest = true;

      std::string phrase = "a train";
      if (use_dest) {
        phrase += " to " + dest;
        t.uttered.push_back({"train", "destination", dest});
      }
      if (const std::string* dep = find_pair(g.constraints, "departure")) {
        phrase += " from " + *dep;
        t.uttered.push_back({"train", "departure", *dep});
      }
      if (const std::string* lv = find_pair(g.constraints, "leaveat")) {
        phrase += " leaving at " + *lv;
        t.uttered.push_back({"train", "leaveat", *lv});
      }
      if (use_day) {
        phrase += " on " + day;
        t.uttered.push_back({"train", "day", day});
      }
      if (follow_up) {
        t.user = "i am also looking for " + phrase;
      } else {
        t.user = rng_.pick(std::vector<std::string>{
            "i need " + phrase, "i am looking for " + phrase,
            "hello , i want to take " + phrase});
      }
      for (const char* slot : {"destination", "day"}) {
        if (!uttered_has(t, slot)) pending_.push_back(slot);
      }
    } else {
      const std::string& type = *find_pair(g.constraints, "type");
      const std::string& area = *find_pair(g.constraints, "area");
      const std::string* price = find_pair(g.constraints, "pricerange");
      bool use_type = rng_.bernoulli(0.5);
      bool use_area = rng_.bernoulli(0.5);
      if (!price && !use_type && !use_area) use_type = true;

      std::string noun = use_type ? type : "place to stay";
      std::string np;
      if (price) {
        np = article_for(*price) + " " + *price + " " + noun;
        t.uttered.push_back({"hotel", "pricerange", *price});
      } else {
        np = article_for(noun) + " " + noun;
      }
      if (use_type) t.uttered.push_back({"hotel", "type", type});
      if (use_area) {
        np += " in the " + area;
        t.uttered.push_back({"hotel", "area", area});
      }
      if (follow_up) {
        t.user = "i am also looking for " + np;
      } else {
        t.user = rng_.pick(std::vector<std::string>{
            "i need " + np, "i am looking for " + np, "can you find me " + np});
      }
      for (const char* slot : {"type", "area"}) {
        if (!uttered_has(t, slot)) pending_.push_back(slot);
      }
    }
    return t;
  }

  bool uttered_has(const ScriptedTurn& t, const std::string& slot) const {
    for (const auto& b : t.uttered) {
      if (b.slot == slot) return true;
    }
    return false;
  }

  ScriptedTurn make_slot_answer(const DomainGoalDraft& g, std::string slot) {
    ScriptedTurn t;
    const std::string& v = *find_pair(g.constraints, slot);
    if (slot == "destination") {
      t.user = rng_.pick(std::vector<std::string>{"i am going to " + v,
                                                  "to " + v + " please"});
    } else if (slot == "day") {
      t.user = rng_.pick(std::vector<std::string>{"i will travel on " + v,
                                                  "on " + v + " please"});
    } else if (slot == "area") {
      t.user = rng_.pick(std::vector<std::string>{"the " + v + " please",
                                                  "somewhere in the " + v});
    } else if (slot == "type") {
      t.user = rng_.pick(std::vector<std::string>{
          article_for(v) + " " + v + " please", "i would prefer " +
                                                article_for(v) + " " + v});
    } else {
      throw std::logic_error("make_slot_answer: unhandled slot " + slot);
    }
    t.uttered.push_back({g.domain, slot, v});
    pending_.erase(pending_.begin());
    return t;
  }

  ScriptedTurn make_request_turn(const DomainGoalDraft& g) {
    ScriptedTurn t;
    if (g.domain == "train") {
      bool price = std::count(g.requested.begin(), g.requested.end(), "price") > 0;
      bool dur = std::count(g.requested.begin(), g.requested.end(), "duration") > 0;
      if (price && dur) {
        t.user = "how much is the ticket and how long is the journey ?";
        t.response_delex =
            "the ticket costs [value_price] and the journey takes [value_duration] .";
        t.actions = {{"train", "inform", "price"}, {"train", "inform", "duration"}};
      } else if (price) {
        t.user = "how much is the ticket ?";
        t.response_delex = "the ticket costs [value_price] .";
        t.actions = {{"train", "inform", "price"}};
      } else {
        t.user = "how long is the journey ?";
        t.response_delex = "the journey takes [value_duration] .";
        t.actions = {{"train", "inform", "duration"}};
      }
    } else {
      static const std::map<std::string, std::pair<std::string, std::string>> kAsk = {
          {"phone", {"phone number", "the phone number is [hotel_phone] ."}},
          {"address", {"address", "the address is [hotel_address] ."}},
          {"postcode", {"postcode", "the postcode is [hotel_postcode] ."}}};
      if (g.requested.size() == 2) {
        const auto& a = kAsk.at(g.requested[0]);
        const auto& b = kAsk.at(g.requested[1]);
        t.user = "what is the " + a.first + " and the " + b.first + " ?";
        t.response_delex = a.second + " " + b.second;
        t.actions = {{"hotel", "inform", g.requested[0]},
                     {"hotel", "inform", g.requested[1]}};
      } else {
        const auto& a = kAsk.at(g.requested[0]);
        t.user = "what is the " + a.first + " ?";
        t.response_delex = a.second;
        t.actions = {{"hotel", "inform", g.requested[0]}};
      }
    }
    return t;
  }

  ScriptedTurn make_booking_turn(const DomainGoalDraft& g) {
    ScriptedTurn t;
    if (g.domain == "train") {
      const std::string& people = *find_pair(g.booking, "book people");
      t.user = rng_.pick(std::vector<std::string>{
          "please book " + people + " tickets", "i need " + people + " tickets"});
      t.uttered.push_back({"train", "book people", people});
    } else {
      const std::string& stay = *find_pair(g.booking, "book stay");
      const std::string& day = *find_pair(g.booking, "book day");
      t.user = rng_.pick(std::vector<std::string>{
          "please book it for " + stay + " starting on " + day,
          "can you book it for " + stay + " from " + day + " ?"});
      t.uttered.push_back({"hotel", "book day", day});
      t.uttered.push_back({"hotel", "book stay", stay});
    }
    return t;
  }

  // Fills in the system side for constraint-gathering turns (request or
  // offer), then records the finished turn.
  void finish_user_turn(Dialogue& d, ScriptedTurn& t, const DomainGoalDraft& g) {
    if (t.response_delex.empty()) {
      if (!pending_.empty()) {
        t.response_delex = request_response(g.domain, pending_.front());
        t.actions = {{g.domain, "request", pending_.front()}};
      } else {
        make_offer(t, g);
      }
    }
    commit(d, t, g.domain);
  }

  std::string request_response(const std::string& domain, const std::string& slot) {
    if (domain == "train") {
      if (slot == "destination") return "where are you headed ?";
      if (slot == "day") return "what day will you travel ?";
    } else {
      if (slot == "type") return "what type of lodging are you looking for ?";
      if (slot == "area") return "which part of town do you prefer ?";
    }
    throw std::logic_error("request_response: unhandled slot " + slot);
  }

  void make_offer(ScriptedTurn& t, const DomainGoalDraft& g) {
    BeliefState next = belief_;
    for (const auto& b : t.uttered) next.push_back(b);
    next = canonicalize(next);
    auto rows = db_.query(next, g.domain, onto_);
    if (rows.empty()) {
      throw std::logic_error("make_offer: goal has no matching entity");
    }
    bool plural = rows.size() > 1;
    if (g.domain == "train") {
      t.response_delex = plural
          ? "there are [value_count] trains matching your request . [train_id] "
            "arrives by [value_arriveby] . shall i book it ?"
          : "[train_id] is a perfect match . it arrives by [value_arriveby] . "
            "shall i book it ?";
      t.actions.clear();
      if (plural) t.actions.push_back({"train", "inform", "choice"});
      t.actions.push_back({"train", "offer", "id"});
      t.actions.push_back({"train", "inform", "arriveby"});
    } else {
      t.response_delex = plural
          ? "i found [value_count] matching places . i recommend [hotel_name] . "
            "shall i book it ?"
          : "[hotel_name] is a perfect match . shall i book it ?";
      t.actions.clear();
      if (plural) t.actions.push_back({"hotel", "inform", "choice"});
      t.actions.push_back({"hotel", "offer", "name"});
    }
  }

  void commit(Dialogue& d, const ScriptedTurn& t, const std::string& domain) {
    for (const auto& b : t.uttered) belief_.push_back(b);
    belief_ = canonicalize(belief_);

    Turn turn;
    turn.user = t.user;
    turn.belief = belief_;
    turn.actions = t.actions;
    turn.response_delex = t.response_delex;
    turn.active_domain = domain;

    auto rows = db_.query(belief_, domain, onto_);
    turn.db.count = int(rows.size());
    turn.db.status = booked_.count(domain) ? BookingStatus::available
                                           : BookingStatus::not_applicable;

    Lexicon::LexResult lex = lexicon_.lexicalize(turn.response_delex, belief_,
                                                 rows, turn.db.count);
    if (!lex.unresolved.empty()) {
      throw std::logic_error("generator produced unresolvable response: " +
                             turn.response_delex);
    }
    turn.response_lex = lex.text;
    d.turns.push_back(std::move(turn));
  }

  Rng& rng_;
  const Ontology& onto_;
  const Database& db_;
  const Lexicon& lexicon_;
  BeliefState belief_;
  std::vector<std::string> pending_;
  std::set<std::string> booked_;
};

Corpus make_split(Rng& rng, const Ontology& onto, const Database& db,
                  const Lexicon& lexicon, const std::vector<EntityRow>& entities,
                  int count, int id_offset) {
  Corpus corpus;
  DialogueScript script(rng, onto, db, lexicon);
  for (int i = 0; i < count; ++i) {
    std::vector<DomainGoalDraft> goals;
    if (rng.bernoulli(0.6)) {
      goals.push_back(rng.bernoulli(0.5) ? sample_train_goal(rng, entities)
                                         : sample_hotel_goal(rng, entities));
    } else {
      DomainGoalDraft train = sample_train_goal(rng, entities);
      DomainGoalDraft hotel = sample_hotel_goal(rng, entities);
      // A shared day across domains exercises duplicate belief values.
      if (const std::string* day = find_pair(train.constraints, "day");
          day && !hotel.booking.empty()) {
        for (auto& [slot, value] : hotel.booking) {
          if (slot == "book day") value = *day;
        }
      }
      if (rng.bernoulli(0.5)) {
        goals.push_back(std::move(train));
        goals.push_back(std::move(hotel));
      } else {
        goals.push_back(std::move(hotel));
        goals.push_back(std::move(train));
      }
    }
    char id[16];
    std::snprintf(id, sizeof(id), "dlg%04d", id_offset + i);
    corpus.dialogues.push_back(script.build(id, goals));
  }
  return corpus;
}

}  // namespace

Ontology default_ontology() {
  Ontology onto;

  DomainSpec train;
  train.name = "train";
  train.informable = {{"destination", kDestinations},
                      {"departure", kDepartures},
                      {"day", kDays},
                      {"leaveat", kLeaveTimes},
                      {"book people", kPeople}};
  train.booking = {"book people"};
  train.requestable = {"id", "arriveby", "price", "duration"};
  train.attr_order = {"id",      "destination", "departure", "day",
                      "leaveat", "arriveby",    "price",     "duration"};
  train.placeholders = {{"id", "[train_id]"},
                        {"destination", "[value_destination]"},
                        {"departure", "[value_departure]"},
                        {"day", "[value_day]"},
                        {"leaveat", "[value_leaveat]"},
                        {"arriveby", "[value_arriveby]"},
                        {"price", "[value_price]"},
                        {"duration", "[value_duration]"},
                        {"book people", "[value_people]"}};
  train.identifier = "id";
  onto.domains.push_back(std::move(train));

  DomainSpec hotel;
  hotel.name = "hotel";
  hotel.informable = {{"area", kAreas},
                      {"pricerange", kPriceRanges},
                      {"type", kHotelTypes},
                      {"book day", kDays},
                      {"book stay", kStays}};
  hotel.booking = {"book day", "book stay"};
  hotel.requestable = {"name", "phone", "address", "postcode"};
  hotel.attr_order = {"name", "area",    "pricerange", "type",
                      "phone", "address", "postcode"};
  hotel.placeholders = {{"name", "[hotel_name]"},
                        {"area", "[value_area]"},
                        {"pricerange", "[value_pricerange]"},
                        {"type", "[value_type]"},
                        {"phone", "[hotel_phone]"},
                        {"address", "[hotel_address]"},
                        {"postcode", "[hotel_postcode]"},
                        {"book day", "[value_bookday]"},
                        {"book stay", "[value_stay]"}};
  hotel.identifier = "name";
  onto.domains.push_back(std::move(hotel));

  onto.validate();
  return onto;
}

GeneratedData generate_corpus(const GenConfig& config) {
  GeneratedData data;
  data.ontology = default_ontology();

  Rng rng(config.seed);
  data.entities = make_entities(rng);
  data.db = Database::from_rows(data.entities, data.ontology);
  Lexicon lexicon(data.ontology);

  data.train = make_split(rng, data.ontology, data.db, lexicon, data.entities,
                          config.num_train, 0);
  data.test = make_split(rng, data.ontology, data.db, lexicon, data.entities,
                         config.num_test, config.num_train);
  return data;
}

}  // namespace minitod
