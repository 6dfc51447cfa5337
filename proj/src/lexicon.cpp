#include "minitod/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "minitod/text.hpp"

namespace minitod {

bool is_placeholder(const std::string& token) {
  return token.size() >= 3 && token.front() == '[' && token.back() == ']';
}

namespace {

bool all_digits(const std::string& s, std::size_t from, std::size_t to) {
  if (from >= to) return false;
  for (std::size_t i = from; i < to; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

bool looks_like_time(const std::string& s) {
  std::size_t colon = s.find(':');
  if (colon == std::string::npos) return false;
  return all_digits(s, 0, colon) && colon <= 2 &&
         all_digits(s, colon + 1, s.size()) && s.size() - colon - 1 == 2;
}

bool looks_like_price(const std::string& s) {
  std::size_t dot = s.find('.');
  if (dot == std::string::npos) return false;
  return all_digits(s, 0, dot) && all_digits(s, dot + 1, s.size());
}

bool looks_like_count(const std::string& s) { return all_digits(s, 0, s.size()); }

struct Candidate {
  std::vector<std::string> value;
  std::string marker;
};

}  // namespace

std::string Lexicon::delexicalize(const std::string& response,
                                  const EntityRow* row,
                                  const BeliefState& belief) const {
  std::vector<Candidate> candidates;
  if (row) {
    const DomainSpec* spec = ontology_->find(row->domain);
    if (spec) {
      for (const auto& attr : spec->attr_order) {
        const std::string* value = row->get(attr);
        auto ph = spec->placeholders.find(attr);
        if (!value || value->empty() || ph == spec->placeholders.end()) continue;
        candidates.push_back({split_ws(*value), ph->second});
      }
    }
  }
  for (const auto& t : canonicalize(belief)) {
    std::string marker = ontology_->placeholder(t.domain, t.slot);
    if (marker.empty() || t.value.empty()) continue;
    candidates.push_back({split_ws(normalize_value(t.value)), marker});
  }
  // Longest value first so "stansted airport" wins over "stansted"; ties keep
  // entity attributes ahead of belief values.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return a.value.size() > b.value.size();
                   });

  auto tokens = split_ws(response);
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    if (is_placeholder(tokens[i])) {
      out.push_back(tokens[i]);
      ++i;
      continue;
    }
    const Candidate* hit = nullptr;
    for (const auto& c : candidates) {
      if (i + c.value.size() > tokens.size()) continue;
      if (std::equal(c.value.begin(), c.value.end(), tokens.begin() + i)) {
        hit = &c;
        break;
      }
    }
    if (hit) {
      out.push_back(hit->marker);
      i += hit->value.size();
      continue;
    }
    if (looks_like_time(tokens[i])) {
      out.push_back("[value_time]");
    } else if (looks_like_price(tokens[i])) {
      out.push_back("[value_price]");
    } else if (looks_like_count(tokens[i])) {
      out.push_back(kCountMarker);
    } else {
      out.push_back(tokens[i]);
    }
    ++i;
  }
  return join(out);
}

Lexicon::LexResult Lexicon::lexicalize(const std::string& delex,
                                       const BeliefState& belief,
                                       const std::vector<const EntityRow*>& rows,
                                       int summary_count) const {
  std::map<std::string, std::vector<std::string>> values;
  if (!rows.empty() && rows[0]) {
    const EntityRow& row = *rows[0];
    const DomainSpec* spec = ontology_->find(row.domain);
    if (spec) {
      for (const auto& attr : spec->attr_order) {
        const std::string* value = row.get(attr);
        auto ph = spec->placeholders.find(attr);
        if (!value || value->empty() || ph == spec->placeholders.end()) continue;
        values[ph->second].push_back(*value);
      }
    }
  }
  for (const auto& t : canonicalize(belief)) {
    std::string marker = ontology_->placeholder(t.domain, t.slot);
    if (!marker.empty() && !t.value.empty()) {
      values[marker].push_back(normalize_value(t.value));
    }
  }
  if (summary_count >= 0) {
    values[kCountMarker].push_back(std::to_string(summary_count));
  }

  LexResult result;
  std::map<std::string, std::size_t> occurrence;
  std::vector<std::string> out;
  for (const auto& token : split_ws(delex)) {
    if (!is_placeholder(token)) {
      out.push_back(token);
      continue;
    }
    auto it = values.find(token);
    if (it == values.end() || it->second.empty()) {
      result.unresolved.push_back(token);
      out.push_back(token);
      continue;
    }
    std::size_t k = occurrence[token]++;
    out.push_back(it->second[std::min(k, it->second.size() - 1)]);
  }
  result.text = join(out);
  return result;
}

}  // namespace minitod
