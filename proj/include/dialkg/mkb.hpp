#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dialkg/adapters/embedding.hpp"
#include "dialkg/common.hpp"

namespace dialkg {

struct EntityProfile {
  std::string entity_id;
  std::string canonical_name;
  std::set<std::string> aliases;
  std::string entity_type;
  std::map<std::string, std::string> key_attributes;
  BatchIndex last_updated_batch = 0;
  Embedding embedding;
  // Broader entities named by Hierarchy verdicts; typing metadata only.
  std::set<std::string> parents;

  bool operator==(const EntityProfile&) const = default;
};

struct RelationProperties {
  bool symmetric = false;
  bool anti_symmetric = false;
  bool irreflexive = false;
  std::optional<std::string> inverse_of;

  bool operator==(const RelationProperties&) const = default;
};

struct RelationSchema {
  std::string schema_id;
  std::string relation_label;
  std::string domain_type;
  std::string range_type;
  RelationProperties properties;
  std::size_t support_count = 0;
  Embedding embedding;

  bool operator==(const RelationSchema&) const = default;
};

struct RoleSpec {
  std::string name;
  std::string type;
  bool required = false;

  bool operator==(const RoleSpec&) const = default;
};

struct EventSchema {
  std::string schema_id;
  std::string event_type;
  std::set<std::string> trigger_lemmas;
  std::vector<RoleSpec> roles;
  std::size_t support_count = 0;
  Embedding embedding;

  const RoleSpec* role(std::string_view name) const;
  bool operator==(const EventSchema&) const = default;
};

using Schema = std::variant<RelationSchema, EventSchema>;

const std::string& schema_id(const Schema& s);
// Relation label or event type.
const std::string& schema_label(const Schema& s);

enum class ProposalStatus { Pending, Promoted, Rejected };
std::string_view to_string(ProposalStatus s);

struct SchemaProposal {
  std::string proposal_id;
  Schema candidate;
  std::size_t support_count = 0;
  double coherence = 0.0;
  ProposalStatus status = ProposalStatus::Pending;
  std::vector<std::string> member_instances;
  // Per-member features needed to re-cluster the proposal later, parallel to member_instances.
  std::vector<json> member_data;
  std::string reason;
  BatchIndex updated_batch = 0;

  bool operator==(const SchemaProposal&) const = default;
};

/// An event registered for cross-batch alignment.
struct IndexedEvent {
  std::string event_id;
  std::string trigger;
  std::string event_type;
  std::map<std::string, std::string> roles;  // role -> entity id or literal
  std::optional<TimeInterval> time;
  Embedding trigger_embedding;
  BatchIndex batch = 0;

  bool operator==(const IndexedEvent&) const = default;
};

struct EventMatchWeights {
  double trigger = 0.5;
  double arguments = 0.3;
  double time = 0.2;
};

/// Time compatibility term: 1 when both known and overlapping, 0.5 when either
/// is unknown, nullopt when both are known and disjoint (hard gate).
std::optional<double> time_compatibility(const std::optional<TimeInterval>& a, const std::optional<TimeInterval>& b);

/// Jaccard overlap of two argument sets; two empty sets count as identical.
double argument_overlap(const std::set<std::string>& a, const std::set<std::string>& b);

struct ScoredId {
  std::string id;
  double score = 0.0;

  bool operator==(const ScoredId&) const = default;
};

/// Nearest-neighbour lookup over keyed embeddings. Results are ordered by
/// descending cosine with ties broken by ascending key.
class VectorIndex {
 public:
  virtual ~VectorIndex() = default;
  virtual void upsert(const std::string& key, const Embedding& e) = 0;
  virtual void erase(const std::string& key) = 0;
  virtual std::vector<ScoredId> search(const Embedding& query, std::size_t k) const = 0;
  virtual std::size_t size() const = 0;
  virtual std::size_t dimension() const = 0;
};

class ExactCosineIndex final : public VectorIndex {
 public:
  explicit ExactCosineIndex(std::size_t dimension) : dimension_(dimension) {}
  void upsert(const std::string& key, const Embedding& e) override;
  void erase(const std::string& key) override { items_.erase(key); }
  std::vector<ScoredId> search(const Embedding& query, std::size_t k) const override;
  std::size_t size() const override { return items_.size(); }
  std::size_t dimension() const override { return dimension_; }

 private:
  std::size_t dimension_;
  std::map<std::string, Embedding> items_;
};

struct ScoredSchema {
  Schema schema;
  double score = 0.0;
};

struct ScoredProfile {
  EntityProfile profile;
  double score = 0.0;
};

inline constexpr std::size_t kDefaultRetrievalK = 30;

/// Entity profiles, promoted schemas, the proposal pool and the event index.
/// Reads are concurrent; writes are serialized and visible to the next read.
class MetaKnowledgeBase {
 public:
  explicit MetaKnowledgeBase(std::size_t dimension = HashingEmbedder::kDefaultDimension);
  MetaKnowledgeBase(const MetaKnowledgeBase& other);
  MetaKnowledgeBase& operator=(const MetaKnowledgeBase& other);

  std::size_t dimension() const { return dimension_; }

  std::vector<ScoredSchema> retrieve_schemas(const Embedding& query, std::size_t k = kDefaultRetrievalK) const;
  // Top-n profiles by cosine to `query`; callers embed the mention name.
  std::vector<ScoredProfile> match_entity(const Embedding& query, std::size_t n) const;
  std::vector<ScoredId> match_event(const Embedding& trigger, const std::set<std::string>& key_args,
                                    const std::optional<TimeInterval>& window,
                                    const EventMatchWeights& weights = {}) const;

  void upsert_entity_profile(const EntityProfile& profile);
  // Requires a Promoted proposal; throws DuplicateSchemaLabel on a label clash.
  std::string register_schema(const SchemaProposal& proposal);
  // Adds or replaces the proposal with the same id.
  void stash_proposal(const SchemaProposal& proposal);
  void erase_proposal(const std::string& proposal_id);
  void bump_support(const std::string& schema_id, std::size_t by);
  void mark_relation_properties(const std::string& schema_id, const RelationProperties& props);
  void register_event(const IndexedEvent& event);

  std::optional<EntityProfile> profile(const std::string& entity_id) const;
  std::vector<EntityProfile> profiles() const;
  std::vector<RelationSchema> relation_schemas() const;
  std::vector<EventSchema> event_schemas() const;
  std::optional<RelationSchema> relation_schema_by_label(std::string_view label) const;
  std::optional<EventSchema> event_schema_by_type(std::string_view type) const;
  std::vector<SchemaProposal> proposals() const;
  std::vector<IndexedEvent> events() const;
  std::optional<IndexedEvent> event(const std::string& event_id) const;
  std::size_t schema_count() const;

  std::string snapshot() const;
  static MetaKnowledgeBase restore(std::string_view bytes);

  bool operator==(const MetaKnowledgeBase& other) const { return snapshot() == other.snapshot(); }

 private:
  void check_dim(const Embedding& e) const;
  void rebuild_indexes();

  std::size_t dimension_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, EntityProfile> profiles_;
  std::map<std::string, RelationSchema> relations_;
  std::map<std::string, EventSchema> event_schemas_;
  std::map<std::string, SchemaProposal> proposals_;
  std::map<std::string, IndexedEvent> events_;
  std::unique_ptr<VectorIndex> schema_index_;
  std::unique_ptr<VectorIndex> profile_index_;
};

json to_json(const Schema& s);
Schema schema_from_json(const json& j);
json to_json(const EntityProfile& p);

}  // namespace dialkg
