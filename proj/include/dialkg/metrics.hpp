#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dialkg/adapters/chat.hpp"
#include "dialkg/graph_store.hpp"

namespace dialkg {

struct BatchReport;

enum class Support { FullySupported, PartiallySupported, NotSupported };
std::string_view to_string(Support s);
Support support_from_string(std::string_view s);

/// Per-id judgments: support level for additions, justification for deprecations.
struct Judgments {
  std::map<std::string, Support> additions;
  std::map<std::string, bool> deprecations;

  json to_json() const;
  static Judgments from_json(const json& j);
};

/// nullopt renders as "N/A".
struct MetricResult {
  std::optional<double> delta_precision;
  std::optional<double> dhp;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;

  json to_json() const;
};

// Only FullySupported counts. nullopt for no additions; MissingJudgment for an unjudged id.
std::optional<double> delta_precision(const std::vector<std::string>& additions, const Judgments& j);
// nullopt exactly when there are no deprecations.
std::optional<double> dhp(const std::vector<std::string>& deprecated_ids, const Judgments& j);

MetricResult score_report(const BatchReport& report, const Judgments& j);

struct TripleKey {
  std::string head;
  std::string relation;
  std::string tail;

  auto operator<=>(const TripleKey&) const = default;
};

using TripleMatcher = std::function<bool(const TripleKey& predicted, const TripleKey& gold)>;

// Case-folded, trimmed, relation label normalized.
bool exact_match(const TripleKey& predicted, const TripleKey& gold);

/// P over predicted, R over gold, F1 their harmonic mean. No predictions gives
/// P = N/A and R = 0; no gold gives R = N/A and F1 = N/A; F1 = 0 whenever R = 0.
MetricResult static_prf(const std::vector<TripleKey>& predicted, const std::vector<TripleKey>& gold,
                        const TripleMatcher& matcher = exact_match);

/// Judges each addition and deprecation of `report` against its stored evidence.
/// Throws JudgeUnavailable when the judge cannot be reached.
Judgments auto_judge(const BatchReport& report, const GraphState& graph, const ChatClient& judge);

}  // namespace dialkg
