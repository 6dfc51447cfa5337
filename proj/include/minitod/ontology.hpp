#pragma once

#include <map>
#include <string>
#include <vector>

#include "minitod/schema.hpp"

namespace minitod {

// Closed value set for one user-constrainable slot.
struct SlotSpec {
  std::string name;
  std::vector<std::string> values;
};

struct DomainSpec {
  std::string name;
  std::vector<SlotSpec> informable;       // belief slots, booking ones included
  std::vector<std::string> booking;       // informable slots excluded from DB matching
  std::vector<std::string> requestable;   // open-valued entity attributes
  std::vector<std::string> attr_order;    // canonical entity attribute order
  std::map<std::string, std::string> placeholders;  // slot/attr -> "[marker]"
  std::string identifier;                 // attribute that names an offered entity

  const SlotSpec* find_informable(const std::string& slot) const;
  bool is_booking(const std::string& slot) const;
};

struct Ontology {
  std::vector<DomainSpec> domains;

  const DomainSpec* find(const std::string& domain) const;
  const DomainSpec& at(const std::string& domain) const;  // throws DataError
  SlotLexicon slot_lexicon() const;
  std::string placeholder(const std::string& domain,
                          const std::string& slot) const;  // "" when unmapped

  // Structural checks: non-empty value sets, booking/identifier/placeholder
  // names all resolve, no duplicate slot names within a domain.
  void validate() const;

  void save(const std::string& path) const;
  static Ontology load(const std::string& path);
};

}  // namespace minitod
