#pragma once

#include <map>
#include <string>
#include <vector>

#include "minitod/ontology.hpp"
#include "minitod/schema.hpp"

namespace minitod {

struct EntityRow {
  std::string domain;
  std::vector<std::pair<std::string, std::string>> attrs;  // canonical order

  const std::string* get(const std::string& attr) const;
};

enum class BookingStatus { available, not_available, not_applicable };

std::string to_string(BookingStatus s);
BookingStatus booking_status_from_string(const std::string& s);

// Match-count summary serialized into the sequence: counts above three
// collapse into the shared "many" bucket.
struct DbSummary {
  int count = 0;
  BookingStatus status = BookingStatus::not_applicable;

  auto operator<=>(const DbSummary&) const = default;
};

std::string bucket_token(int count);
std::string serialize_db(const DbSummary& summary,
                         const SerializeOptions& opts = {});

// In-memory entity store. Values are normalized (case and whitespace) at
// construction so queries reduce to string equality.
class Database {
 public:
  Database() = default;
  static Database from_rows(std::vector<EntityRow> rows,
                            const Ontology& ontology);
  static Database load(const std::string& path, const Ontology& ontology);
  void save(const std::string& path) const;

  const std::vector<EntityRow>& rows(const std::string& domain) const;
  std::size_t total_rows() const;

  // Rows of `domain` satisfying every non-booking constraint of that domain
  // in `belief`, in store order. Constraints on attributes a row lacks fail.
  std::vector<const EntityRow*> query(const BeliefState& belief,
                                      const std::string& domain,
                                      const Ontology& ontology) const;

 private:
  std::map<std::string, std::vector<EntityRow>> by_domain_;
};

}  // namespace minitod
