#include "minitod/ontology.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"
#include "minitod/errors.hpp"
#include "minitod/text.hpp"

namespace minitod {

using json = nlohmann::ordered_json;

const SlotSpec* DomainSpec::find_informable(const std::string& slot) const {
  for (const auto& s : informable) {
    if (s.name == slot) return &s;
  }
  return nullptr;
}

bool DomainSpec::is_booking(const std::string& slot) const {
  return std::find(booking.begin(), booking.end(), slot) != booking.end();
}

const DomainSpec* Ontology::find(const std::string& domain) const {
  for (const auto& d : domains) {
    if (d.name == domain) return &d;
  }
  return nullptr;
}

const DomainSpec& Ontology::at(const std::string& domain) const {
  const DomainSpec* d = find(domain);
  if (!d) throw DataError("unknown domain: " + domain);
  return *d;
}

SlotLexicon Ontology::slot_lexicon() const {
  SlotLexicon lex;
  std::set<std::string> seen;
  for (const auto& d : domains) {
    for (const auto& s : d.informable) {
      if (seen.insert(s.name).second) lex.slot_names.push_back(s.name);
    }
  }
  return lex;
}

std::string Ontology::placeholder(const std::string& domain,
                                  const std::string& slot) const {
  const DomainSpec* d = find(domain);
  if (!d) return "";
  auto it = d->placeholders.find(slot);
  return it == d->placeholders.end() ? "" : it->second;
}

void Ontology::validate() const {
  std::set<std::string> domain_names;
  for (const auto& d : domains) {
    if (!domain_names.insert(d.name).second) {
      throw DataError("duplicate domain: " + d.name);
    }
    std::set<std::string> slot_names;
    for (const auto& s : d.informable) {
      if (!slot_names.insert(s.name).second) {
        throw DataError("duplicate slot " + s.name + " in domain " + d.name);
      }
      if (s.values.empty()) {
        throw DataError("empty value set for " + d.name + " " + s.name);
      }
    }
    for (const auto& b : d.booking) {
      if (!slot_names.count(b)) {
        throw DataError("booking slot " + b + " not informable in " + d.name);
      }
    }
    if (!d.identifier.empty() &&
        std::find(d.attr_order.begin(), d.attr_order.end(), d.identifier) ==
            d.attr_order.end()) {
      throw DataError("identifier " + d.identifier + " not an attribute of " +
                      d.name);
    }
    for (const auto& [slot, marker] : d.placeholders) {
      if (marker.size() < 3 || marker.front() != '[' || marker.back() != ']') {
        throw DataError("placeholder for " + d.name + " " + slot +
                        " must be bracketed: " + marker);
      }
    }
  }
}

void Ontology::save(const std::string& path) const {
  json root;
  root["domains"] = json::array();
  for (const auto& d : domains) {
    json jd;
    jd["name"] = d.name;
    jd["informable"] = json::array();
    for (const auto& s : d.informable) {
      jd["informable"].push_back({{"slot", s.name}, {"values", s.values}});
    }
    jd["booking"] = d.booking;
    jd["requestable"] = d.requestable;
    jd["attr_order"] = d.attr_order;
    jd["placeholders"] = d.placeholders;
    jd["identifier"] = d.identifier;
    root["domains"].push_back(jd);
  }
  write_text_file(path, root.dump(2) + "\n");
}

Ontology Ontology::load(const std::string& path) {
  json root;
  try {
    root = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw DataError("ontology " + path + ": " + e.what());
  }
  Ontology o;
  try {
    for (const auto& jd : root.at("domains")) {
      DomainSpec d;
      d.name = jd.at("name").get<std::string>();
      for (const auto& js : jd.at("informable")) {
        SlotSpec s;
        s.name = js.at("slot").get<std::string>();
        for (const auto& v : js.at("values")) {
          s.values.push_back(normalize_value(v.get<std::string>()));
        }
        d.informable.push_back(std::move(s));
      }
      d.booking = jd.value("booking", std::vector<std::string>{});
      d.requestable = jd.value("requestable", std::vector<std::string>{});
      d.attr_order = jd.value("attr_order", std::vector<std::string>{});
      if (jd.contains("placeholders")) {
        for (const auto& [k, v] : jd.at("placeholders").items()) {
          d.placeholders[k] = v.get<std::string>();
        }
      }
      d.identifier = jd.value("identifier", std::string{});
      o.domains.push_back(std::move(d));
    }
  } catch (const json::exception& e) {
    throw DataError("ontology " + path + ": " + e.what());
  }
  o.validate();
  return o;
}

}  // namespace minitod
