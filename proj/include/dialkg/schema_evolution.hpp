#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "dialkg/adapters/chat.hpp"
#include "dialkg/adapters/embedding.hpp"
#include "dialkg/graph_store.hpp"
#include "dialkg/mkb.hpp"
#include "dialkg/normalization.hpp"

namespace dialkg {

struct InductionConfig {
  std::size_t theta = 3;
  double tau_coherence = 0.80;
  double tau_cluster = 0.85;
  double required_role_ratio = 0.8;

  void validate() const;  // throws ConfigError
};

class SchemaEvaluator {
 public:
  virtual ~SchemaEvaluator() = default;
  virtual bool evaluate(const Schema& candidate, const std::vector<json>& examples) const = 0;
};

class ChatSchemaEvaluator final : public SchemaEvaluator {
 public:
  explicit ChatSchemaEvaluator(const ChatClient& chat) : chat_(chat) {}
  bool evaluate(const Schema& candidate, const std::vector<json>& examples) const override;

 private:
  const ChatClient& chat_;
};

class FixedEvaluator final : public SchemaEvaluator {
 public:
  explicit FixedEvaluator(bool verdict) : verdict_(verdict) {}
  bool evaluate(const Schema&, const std::vector<json>&) const override { return verdict_; }

 private:
  bool verdict_;
};

/// A verified triple as seen by relation induction.
struct RelationMember {
  std::string id;  // edge id
  std::string relation;
  std::string head;
  std::string tail;
  std::string head_type;
  std::string tail_type;
};

/// A verified event as seen by event induction.
struct EventMember {
  std::string id;  // event id
  std::string trigger_lemma;
  std::string event_type;
  std::map<std::string, std::string> role_types;
};

json to_json(const RelationMember& m);
json to_json(const EventMember& m);

/// Every cluster formed in one induction round, each ending Promoted, Pending
/// or Rejected (merged into an existing schema), plus the pool entries it consumed.
struct InductionOutcome {
  std::vector<SchemaProposal> proposals;
  std::vector<std::string> consumed;
  std::vector<std::pair<std::string, std::size_t>> support_bumps;  // schema id, extra support

  std::vector<SchemaProposal> promoted() const;
  std::vector<SchemaProposal> pending() const;
};

// Majority label; a tie, or no information, falls back to "Entity".
std::string majority_type(const std::vector<std::string>& types);

/// Pending relation proposals in `mkb` re-enter with their members. Reads `mkb` only.
InductionOutcome induce_relation_schemas(const std::vector<RelationMember>& verified, const MetaKnowledgeBase& mkb,
                                         const Embedder& embedder, const SchemaEvaluator& evaluator,
                                         const InductionConfig& cfg, BatchIndex batch);

InductionOutcome induce_event_schemas(const std::vector<EventMember>& verified, const MetaKnowledgeBase& mkb,
                                      const Embedder& embedder, const SchemaEvaluator& evaluator,
                                      const InductionConfig& cfg, BatchIndex batch);

/// Registers promoted schemas, stashes the remaining proposals and drops consumed
/// pool entries. Returns the ids of newly registered schemas.
std::vector<std::string> apply_induction(MetaKnowledgeBase& mkb, const InductionOutcome& outcome);

struct RelationalizedEvent {
  EntityNode node;
  std::vector<FactEdge> facts;
};

inline const std::string kTypeRelation = "rdf:type";
inline const std::string kTimeRelation = "has_time";
inline const std::string kEventEntityType = "Event";

/// One event node plus rdf:type, one has_<role> fact per binding and has_time
/// when a time is known. Throws MissingRequiredRole when `schema` requires an
/// unbound role.
RelationalizedEvent relationalize_event(const CanonicalEvent& e, BatchIndex batch, const EventSchema* schema = nullptr);

/// Inverse of relationalize_event.
struct EventRecord {
  std::string event_id;
  std::string trigger;
  std::string event_type;
  std::map<std::string, std::string> roles;
  std::string time;

  bool operator==(const EventRecord&) const = default;
};
EventRecord parse_back(const EntityNode& node, const std::vector<FactEdge>& facts);

/// Refreshes profiles of the non-event entities touched by `facts`: aliases are
/// unioned, literal-valued facts become key attributes, the embedding is the mean
/// of the alias embeddings.
void update_entity_profiles(const std::vector<FactEdge>& facts, const std::map<std::string, EntityNode>& nodes,
                            const std::map<std::string, std::set<std::string>>& batch_aliases,
                            const std::map<std::string, std::set<std::string>>& parents, MetaKnowledgeBase& mkb,
                            const Embedder& embedder, BatchIndex batch);

}  // namespace dialkg
