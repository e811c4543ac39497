#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dialkg/adapters/chat.hpp"
#include "dialkg/adapters/embedding.hpp"
#include "dialkg/graph_store.hpp"
#include "dialkg/mkb.hpp"
#include "dialkg/normalization.hpp"

namespace dialkg {

enum class Decision { Accepted, Rejected };

struct Verdict {
  Decision decision = Decision::Accepted;
  std::string reason_code;
  std::string rationale;
  // Accepted without a schema check because no schema matched.
  bool route_to_induction = false;

  static Verdict accept(std::string rationale = {}) { return {Decision::Accepted, {}, std::move(rationale), false}; }
  static Verdict reject(std::string code, std::string rationale) {
    return {Decision::Rejected, std::move(code), std::move(rationale), false};
  }
  bool accepted() const { return decision == Decision::Accepted; }
};

/// A fact after entity resolution, before integration.
struct FactCandidate {
  std::string head;  // entity id
  std::string head_name;
  std::string head_type;
  std::string relation;
  Tail tail;
  std::string tail_name;  // surface form (literal value for literals)
  std::string tail_type;
  Evidence evidence;

  std::string edge_id() const { return make_edge_id(head, relation, tail); }
};

json to_json(const FactCandidate& c);

/// Rejected only when the evidence directly contradicts the candidate; silence
/// is accepted. Throws JudgeUnavailable when the judge cannot be reached.
Verdict verify_evidence(const json& candidate, const std::string& evidence_text, const ChatClient& judge);

struct LogicConfig {
  std::set<std::string> irreflexive = {"ancestor_of", "part_of", "parent_of", "succeeded_by"};
  std::set<std::string> asymmetric = {"ancestor_of", "part_of", "parent_of", "succeeded_by"};
};

// True when `actual` meets `constraint`; unknown types on either side pass.
bool type_satisfies(const std::string& actual, const std::string& constraint);

/// General consistency always; schema constraints only after cold start.
/// Facts accepted through `admit` take part in later inverse checks.
class LogicChecker {
 public:
  LogicChecker(const MetaKnowledgeBase& mkb, const GraphState& graph, BatchIndex batch, const LogicConfig& cfg);

  Verdict check(const FactCandidate& c) const;
  Verdict check(const CanonicalEvent& e) const;
  void admit(const FactCandidate& c);

 private:
  bool is_irreflexive(const std::string& rel) const;
  bool is_asymmetric(const std::string& rel) const;

  const MetaKnowledgeBase& mkb_;
  const GraphState& graph_;
  BatchIndex batch_;
  std::set<std::string> irreflexive_;
  std::set<std::string> asymmetric_;
  std::set<std::string> batch_edges_;
};

enum class Intent { Informational, Evolutionary };
std::string_view to_string(Intent i);

struct IntentLabel {
  Intent intent = Intent::Informational;
  std::vector<std::string> triggers_matched;
  std::vector<std::string> targeted_entity_ids;
  bool judge_unavailable = false;
  std::string rationale;
};

inline const std::set<std::string> kDefaultIntentLexicon = {"deprecate", "remove", "replace"};

/// Lexicon hit on the trigger lemma short-circuits to Evolutionary; otherwise the
/// judge decides. An unreachable judge yields Informational with a warning flag.
IntentLabel classify_intent(const CanonicalEvent& e, const ChatClient& judge,
                            const std::set<std::string>& lexicon = kDefaultIntentLexicon);

// Entities whose state the event changes: the "target" binding, else every entity binding.
std::vector<std::string> targeted_entities(const CanonicalEvent& e);

/// Property changed by an evolutionary trigger and the facts that describe the new state.
struct StateTransition {
  std::string property = "status";
  std::string value;
  std::string successor_relation;  // e.g. replaced_by
  std::string successor_role;      // role holding the successor entity
};

StateTransition state_transition(std::string_view trigger_lemma);

struct SuccessorFact {
  std::string head;
  std::string relation;
  Tail tail;
  std::string tail_name;
};

std::vector<SuccessorFact> successor_facts(const CanonicalEvent& e, const IntentLabel& intent);

inline constexpr double kDefaultTargetThreshold = 0.8;

/// Active edges of G_{k-1} incident to the targeted entities whose relation is
/// close to the transitioned property, skipping edges equal to a successor fact.
std::vector<Deprecation> resolve_deprecation_targets(const CanonicalEvent& e, const IntentLabel& intent,
                                                     const GraphState& previous, const Embedder& embedder,
                                                     double tau_target = kDefaultTargetThreshold);

}  // namespace dialkg
