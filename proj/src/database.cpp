#include "minitod/database.hpp"

#include <algorithm>

#include "json.hpp"
#include "minitod/errors.hpp"
#include "minitod/text.hpp"
#include "minitod/tokenizer.hpp"

namespace minitod {

using json = nlohmann::ordered_json;

const std::string* EntityRow::get(const std::string& attr) const {
  for (const auto& [k, v] : attrs) {
    if (k == attr) return &v;
  }
  return nullptr;
}

std::string to_string(BookingStatus s) {
  switch (s) {
    case BookingStatus::available: return "available";
    case BookingStatus::not_available: return "not_available";
    case BookingStatus::not_applicable: return "not_applicable";
  }
  return "not_applicable";
}

BookingStatus booking_status_from_string(const std::string& s) {
  if (s == "available") return BookingStatus::available;
  if (s == "not_available") return BookingStatus::not_available;
  if (s == "not_applicable") return BookingStatus::not_applicable;
  throw DataError("unknown booking status: " + s);
}

std::string bucket_token(int count) {
  if (count < 0) throw std::invalid_argument("negative match count");
  if (count <= 3) return std::to_string(count);
  return "many";
}

std::string serialize_db(const DbSummary& summary, const SerializeOptions& opts) {
  std::string out = tok::kDb;
  out += " " + bucket_token(summary.count) + " " + to_string(summary.status);
  if (opts.end_tokens) out += std::string(" ") + tok::kEndOfDb;
  return out;
}

Database Database::from_rows(std::vector<EntityRow> rows,
                             const Ontology& ontology) {
  Database db;
  for (auto& row : rows) {
    const DomainSpec* d = ontology.find(row.domain);
    if (!d) throw DataError("entity row for unknown domain: " + row.domain);
    for (auto& [attr, value] : row.attrs) {
      if (std::find(d->attr_order.begin(), d->attr_order.end(), attr) ==
          d->attr_order.end()) {
        throw DataError("unknown attribute " + attr + " in domain " +
                        row.domain);
      }
      value = normalize_value(value);
    }
    db.by_domain_[row.domain].push_back(std::move(row));
  }
  return db;
}

Database Database::load(const std::string& path, const Ontology& ontology) {
  json root;
  try {
    root = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw DataError("database " + path + ": " + e.what());
  }
  std::vector<EntityRow> rows;
  try {
    for (const auto& [domain, jrows] : root.items()) {
      for (const auto& jr : jrows) {
        EntityRow row;
        row.domain = domain;
        for (const auto& [attr, value] : jr.items()) {
          row.attrs.emplace_back(attr, value.get<std::string>());
        }
        rows.push_back(std::move(row));
      }
    }
  } catch (const json::exception& e) {
    throw DataError("database " + path + ": " + e.what());
  }
  return from_rows(std::move(rows), ontology);
}

void Database::save(const std::string& path) const {
  json root;
  for (const auto& [domain, rows] : by_domain_) {
    json jrows = json::array();
    for (const auto& row : rows) {
      json jr;
      for (const auto& [attr, value] : row.attrs) jr[attr] = value;
      jrows.push_back(jr);
    }
    root[domain] = jrows;
  }
  write_text_file(path, root.dump(2) + "\n");
}

const std::vector<EntityRow>& Database::rows(const std::string& domain) const {
  static const std::vector<EntityRow> empty;
  auto it = by_domain_.find(domain);
  return it == by_domain_.end() ? empty : it->second;
}

std::size_t Database::total_rows() const {
  std::size_t n = 0;
  for (const auto& [_, rows] : by_domain_) n += rows.size();
  return n;
}

std::vector<const EntityRow*> Database::query(const BeliefState& belief,
                                              const std::string& domain,
                                              const Ontology& ontology) const {
  const DomainSpec* spec = ontology.find(domain);
  std::vector<std::pair<std::string, std::string>> constraints;
  for (const auto& t : belief) {
    if (t.domain != domain) continue;
    if (spec && spec->is_booking(t.slot)) continue;
    constraints.emplace_back(t.slot, normalize_value(t.value));
  }
  std::vector<const EntityRow*> out;
  for (const auto& row : rows(domain)) {
    bool ok = true;
    for (const auto& [slot, value] : constraints) {
      const std::string* attr = row.get(slot);
      if (!attr || *attr != value) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(&row);
  }
  return out;
}

}  // namespace minitod
