#include "minitod/corpus.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "minitod/errors.hpp"
#include "minitod/text.hpp"

namespace minitod {

using ordered_json = nlohmann::ordered_json;

const GoalDomain* Goal::find(const std::string& domain) const {
  for (const auto& [name, gd] : domains) {
    if (name == domain) return &gd;
  }
  return nullptr;
}

Context Dialogue::context_at(std::size_t turn) const {
  if (turn >= turns.size()) {
    throw std::out_of_range("context_at: turn index out of range");
  }
  Context ctx;
  for (std::size_t i = 0; i <= turn; ++i) {
    ctx.user.push_back(turns[i].user);
    if (i < turn) ctx.system.push_back(turns[i].response_lex);
  }
  return ctx;
}

std::size_t Corpus::total_turns() const {
  std::size_t n = 0;
  for (const auto& d : dialogues) n += d.turns.size();
  return n;
}

namespace {

ordered_json goal_to_json(const Goal& goal) {
  ordered_json j = ordered_json::object();
  for (const auto& [domain, gd] : goal.domains) {
    ordered_json dj;
    dj["constraints"] = ordered_json::object();
    for (const auto& [slot, value] : gd.constraints) dj["constraints"][slot] = value;
    dj["requested"] = gd.requested;
    dj["booking"] = ordered_json::object();
    for (const auto& [slot, value] : gd.booking) dj["booking"][slot] = value;
    j[domain] = std::move(dj);
  }
  return j;
}

ordered_json turn_to_json(const Turn& t) {
  ordered_json j;
  j["user"] = t.user;
  ordered_json belief = ordered_json::array();
  for (const auto& b : t.belief) {
    belief.push_back(ordered_json::array({b.domain, b.slot, b.value}));
  }
  j["belief"] = std::move(belief);
  j["db"] = {{"count", t.db.count}, {"status", to_string(t.db.status)}};
  ordered_json actions = ordered_json::array();
  for (const auto& a : t.actions) {
    actions.push_back(ordered_json::array({a.domain, a.act, a.slot}));
  }
  j["actions"] = std::move(actions);
  j["response_delex"] = t.response_delex;
  j["response_lex"] = t.response_lex;
  j["active_domain"] = t.active_domain;
  return j;
}

const ordered_json& require(const ordered_json& j, const char* key,
                            const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw DataError("corpus: missing field '" + std::string(key) + "' in " + where);
  }
  return *it;
}

std::string require_string(const ordered_json& j, const char* key,
                           const std::string& where) {
  const auto& v = require(j, key, where);
  if (!v.is_string()) {
    throw DataError("corpus: field '" + std::string(key) + "' in " + where +
                    " is not a string");
  }
  return v.get<std::string>();
}

std::vector<std::string> triplet_from_json(const ordered_json& j,
                                           const std::string& where) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_string() ||
      !j[1].is_string() || !j[2].is_string()) {
    throw DataError("corpus: expected [domain, slot, value] triplet in " + where);
  }
  return {j[0].get<std::string>(), j[1].get<std::string>(), j[2].get<std::string>()};
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::string& path) {
  ordered_json root;
  root["dialogues"] = ordered_json::array();
  for (const auto& d : corpus.dialogues) {
    ordered_json dj;
    dj["id"] = d.id;
    dj["goal"] = goal_to_json(d.goal);
    dj["turns"] = ordered_json::array();
    for (const auto& t : d.turns) dj["turns"].push_back(turn_to_json(t));
    root["dialogues"].push_back(std::move(dj));
  }
  write_text_file(path, root.dump(2) + "\n");
}

Corpus load_corpus(const std::string& path, const Ontology& ontology,
                   std::vector<std::string>* warnings) {
  ordered_json root;
  try {
    root = ordered_json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("corpus: cannot parse " + path + ": " + e.what());
  }
  auto warn = [&](const std::string& msg) {
    if (warnings) warnings->push_back(msg);
  };
  auto check_slot = [&](const std::string& domain, const std::string& slot,
                        const std::string& where) {
    const DomainSpec* spec = ontology.find(domain);
    if (!spec) {
      warn("unknown domain '" + domain + "' in " + where);
      return;
    }
    if (!spec->find_informable(slot)) {
      warn("unknown slot '" + domain + "-" + slot + "' in " + where);
    }
  };

  Corpus corpus;
  const auto& dialogues = require(root, "dialogues", "corpus root");
  if (!dialogues.is_array()) throw DataError("corpus: 'dialogues' is not an array");
  for (const auto& dj : dialogues) {
    Dialogue d;
    d.id = require_string(dj, "id", "dialogue");
    const std::string where = "dialogue " + d.id;

    const auto& gj = require(dj, "goal", where);
    if (!gj.is_object()) throw DataError("corpus: goal is not an object in " + where);
    for (const auto& [domain, body] : gj.items()) {
      GoalDomain gd;
      if (auto it = body.find("constraints"); it != body.end()) {
        for (const auto& [slot, value] : it->items()) {
          gd.constraints.emplace_back(slot, normalize_value(value.get<std::string>()));
          check_slot(domain, slot, where + " goal");
        }
      }
      if (auto it = body.find("requested"); it != body.end()) {
        for (const auto& r : *it) gd.requested.push_back(r.get<std::string>());
      }
      if (auto it = body.find("booking"); it != body.end()) {
        for (const auto& [slot, value] : it->items()) {
          gd.booking.emplace_back(slot, normalize_value(value.get<std::string>()));
          check_slot(domain, slot, where + " goal");
        }
      }
      d.goal.domains.emplace_back(domain, std::move(gd));
    }

    const auto& turns = require(dj, "turns", where);
    if (!turns.is_array()) throw DataError("corpus: turns is not an array in " + where);
    int index = 0;
    for (const auto& tj : turns) {
      const std::string twhere = where + " turn " + std::to_string(index);
      Turn t;
      t.user = normalize_value(require_string(tj, "user", twhere));
      if (t.user.empty()) throw DataError("corpus: empty user utterance in " + twhere);
      for (const auto& bj : require(tj, "belief", twhere)) {
        auto parts = triplet_from_json(bj, twhere);
        BeliefTriplet b{parts[0], parts[1], normalize_value(parts[2])};
        if (b.value.empty()) throw DataError("corpus: empty belief value in " + twhere);
        check_slot(b.domain, b.slot, twhere);
        t.belief.push_back(std::move(b));
      }
      t.belief = canonicalize(t.belief);
      const auto& db = require(tj, "db", twhere);
      const auto& count = require(db, "count", twhere + " db");
      if (!count.is_number_integer() || count.get<int>() < 0) {
        throw DataError("corpus: db count must be a non-negative integer in " + twhere);
      }
      t.db.count = count.get<int>();
      t.db.status = booking_status_from_string(require_string(db, "status", twhere + " db"));
      for (const auto& aj : require(tj, "actions", twhere)) {
        auto parts = triplet_from_json(aj, twhere);
        t.actions.push_back({parts[0], parts[1], parts[2]});
      }
      t.response_delex = normalize_value(require_string(tj, "response_delex", twhere));
      t.response_lex = normalize_value(require_string(tj, "response_lex", twhere));
      if (t.response_delex.empty() || t.response_lex.empty()) {
        throw DataError("corpus: empty system response in " + twhere);
      }
      t.active_domain = require_string(tj, "active_domain", twhere);
      d.turns.push_back(std::move(t));
      ++index;
    }
    if (d.turns.empty()) throw DataError("corpus: dialogue without turns: " + d.id);
    corpus.dialogues.push_back(std::move(d));
  }
  return corpus;
}

std::vector<std::string> training_sequences(const Corpus& corpus,
                                            const SequenceOptions& opts) {
  std::vector<std::string> out;
  out.reserve(corpus.total_turns());
  for (const auto& d : corpus.dialogues) {
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
      const Turn& turn = d.turns[t];
      std::optional<std::string> db;
      if (opts.include_db) db = serialize_db(turn.db);
      out.push_back(serialize_training_sequence(d.context_at(t), turn.belief, db,
                                                turn.actions, turn.response_delex,
                                                opts.serialize));
    }
  }
  return out;
}

std::string to_string(NoiseType t) {
  switch (t) {
    case NoiseType::t1: return "t1";
    case NoiseType::t2: return "t2";
    case NoiseType::t3: return "t3";
    case NoiseType::t4: return "t4";
  }
  throw std::invalid_argument("to_string: bad NoiseType");
}

NoiseType noise_type_from_string(const std::string& s) {
  if (s == "t1") return NoiseType::t1;
  if (s == "t2") return NoiseType::t2;
  if (s == "t3") return NoiseType::t3;
  if (s == "t4") return NoiseType::t4;
  throw DataError("unknown noise type: " + s);
}

namespace {

std::string csv_safe(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (c == ',' || c == '\n') c = ';';
  }
  return out;
}

}  // namespace

void save_noise_records(const std::vector<NoiseRecord>& records,
                        const std::string& path) {
  std::string out =
      "dialogue_id,turn,type,orig_domain,orig_slot,orig_value,"
      "new_domain,new_slot,new_value\n";
  for (const auto& r : records) {
    out += csv_safe(r.dialogue_id) + "," + std::to_string(r.turn) + "," +
           to_string(r.type) + "," + csv_safe(r.original.domain) + "," +
           csv_safe(r.original.slot) + "," + csv_safe(r.original.value) + "," +
           csv_safe(r.corrupted.domain) + "," + csv_safe(r.corrupted.slot) + "," +
           csv_safe(r.corrupted.value) + "\n";
  }
  write_text_file(path, out);
}

void save_audit_flags(const std::vector<AuditFlag>& flags,
                      const std::string& path) {
  std::string out = "dialogue_id,turn,type,domain,slot,value,evidence\n";
  for (const auto& f : flags) {
    out += csv_safe(f.dialogue_id) + "," + std::to_string(f.turn) + "," +
           to_string(f.type) + "," + csv_safe(f.domain) + "," + csv_safe(f.slot) +
           "," + csv_safe(f.value) + "," + csv_safe(f.evidence) + "\n";
  }
  write_text_file(path, out);
}

}  // namespace minitod
