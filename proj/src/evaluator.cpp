#include "minitod/evaluator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "minitod/text.hpp"

namespace minitod {

double joint_goal_accuracy(const std::vector<BeliefState>& predicted,
                           const std::vector<BeliefState>& gold) {
  if (predicted.size() != gold.size()) {
    throw std::invalid_argument("joint_goal_accuracy: size mismatch");
  }
  if (predicted.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (canonicalize(predicted[i]) == canonicalize(gold[i])) ++hits;
  }
  return double(hits) / double(predicted.size());
}

InformSuccess inform_success(const std::vector<DialogueResult>& results) {
  int evaluated = 0;
  int informed = 0;
  int succeeded = 0;

  for (const auto& r : results) {
    if (!r.goal) continue;
    std::vector<std::vector<std::string>> responses;
    responses.reserve(r.system_responses.size());
    for (const auto& s : r.system_responses) responses.push_back(split_ws(s));

    for (const auto& [domain, gd] : r.goal->domains) {
      if (gd.constraints.empty() && gd.requested.empty()) continue;
      ++evaluated;

      const EntityRow* offer = nullptr;
      if (auto it = r.offered.find(domain); it != r.offered.end()) {
        offer = it->second;
      }
      bool ok = offer != nullptr;
      if (ok) {
        for (const auto& [slot, value] : gd.constraints) {
          const std::string* have = offer->get(slot);
          if (!have || *have != normalize_value(value)) {
            ok = false;
            break;
          }
        }
      }
      if (!ok) continue;
      ++informed;

      bool success = true;
      for (const auto& slot : gd.requested) {
        const std::string* value = offer->get(slot);
        if (!value) {
          success = false;
          break;
        }
        std::vector<std::string> needle = split_ws(*value);
        bool mentioned = false;
        for (const auto& resp : responses) {
          if (contains_subseq(resp, needle)) {
            mentioned = true;
            break;
          }
        }
        if (!mentioned) {
          success = false;
          break;
        }
      }
      if (success) ++succeeded;
    }
  }

  InformSuccess out;
  out.domains_evaluated = evaluated;
  if (evaluated > 0) {
    out.inform = 100.0 * double(informed) / double(evaluated);
    out.success = 100.0 * double(succeeded) / double(evaluated);
  }
  return out;
}

namespace {

std::map<std::string, int> ngram_counts(const std::vector<std::string>& tokens,
                                        std::size_t n) {
  std::map<std::string, int> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t k = 1; k < n; ++k) key += "\x1f" + tokens[i + k];
    ++counts[key];
  }
  return counts;
}

}  // namespace

double bleu(const std::vector<std::string>& candidates,
            const std::vector<std::string>& references) {
  if (candidates.size() != references.size()) {
    throw std::invalid_argument("bleu: size mismatch");
  }
  constexpr std::size_t kMaxOrder = 4;
  std::array<long long, kMaxOrder> matches{};
  std::array<long long, kMaxOrder> totals{};
  long long cand_len = 0;
  long long ref_len = 0;

  for (std::size_t i = 0; i < candidates.size(); ++i) {
    std::vector<std::string> cand = split_ws(candidates[i]);
    std::vector<std::string> ref = split_ws(references[i]);
    cand_len += (long long)cand.size();
    ref_len += (long long)ref.size();
    for (std::size_t n = 1; n <= kMaxOrder; ++n) {
      auto cand_counts = ngram_counts(cand, n);
      if (cand_counts.empty()) continue;
      auto ref_counts = ngram_counts(ref, n);
      for (const auto& [gram, count] : cand_counts) {
        totals[n - 1] += count;
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) {
          matches[n - 1] += std::min(count, it->second);
        }
      }
    }
  }

  if (cand_len == 0) return 0.0;
  double log_sum = 0.0;
  int orders = 0;
  for (std::size_t n = 0; n < kMaxOrder; ++n) {
    if (totals[n] == 0) continue;
    if (matches[n] == 0) return 0.0;
    log_sum += std::log(double(matches[n]) / double(totals[n]));
    ++orders;
  }
  if (orders == 0) return 0.0;
  double brevity = cand_len >= ref_len
                       ? 1.0
                       : std::exp(1.0 - double(ref_len) / double(cand_len));
  return 100.0 * brevity * std::exp(log_sum / double(orders));
}

double combined_score(double inform, double success, double bleu_score) {
  return bleu_score + 0.5 * (inform + success);
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["joint_goal_accuracy"] = joint;
  j["inform"] = inform;
  j["success"] = success;
  j["bleu"] = bleu;
  j["combined"] = combined;
  j["turns"] = turns;
  j["dialogues"] = dialogues;
  j["belief_parse_failures"] = belief_parse_failures;
  j["truncated_turns"] = truncated_turns;
  j["unresolved_placeholders"] = unresolved_placeholders;
  return j.dump(2);
}

std::string MetricsReport::csv_header() {
  return "joint_goal_accuracy,inform,success,bleu,combined,turns,dialogues,"
         "belief_parse_failures,truncated_turns,unresolved_placeholders";
}

std::string MetricsReport::csv_row() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.6f,%.2f,%.2f,%.2f,%.2f,%d,%d,%d,%d,%d",
                joint, inform, success, bleu, combined, turns, dialogues,
                belief_parse_failures, truncated_turns, unresolved_placeholders);
  return buf;
}

}  // namespace minitod
