#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dialkg/adapters/chat.hpp"
#include "dialkg/adapters/embedding.hpp"
#include "dialkg/common.hpp"
#include "dialkg/extraction.hpp"
#include "dialkg/mkb.hpp"

namespace dialkg {

/// A distinct surface form seen in the batch with its typing clues.
struct Mention {
  std::string text;
  std::vector<std::string> type_hints;
  std::vector<std::string> contexts;  // source sentences
};

// Distinct mentions from both tracks, ordered by surface text.
std::vector<Mention> collect_mentions(const std::vector<TripleCandidate>& triples,
                                      const std::vector<EventCandidate>& events);

enum class PairVerdict { Merge, Hierarchy, Separate };

struct PairDecision {
  PairVerdict verdict = PairVerdict::Separate;
  std::string parent;  // for Hierarchy: the broader mention
};

struct AlignDecision {
  std::optional<std::string> reuse_id;  // nullopt = CreateNew
};

/// LLM-facing decisions used by normalization. All calls may throw BackendUnavailable.
class EntityJudge {
 public:
  virtual ~EntityJudge() = default;
  virtual std::string infer_type(const Mention& m) const = 0;
  virtual PairDecision adjudicate(const std::string& a, const std::string& b, const std::string& type) const = 0;
  virtual AlignDecision align(const std::string& canonical, const std::vector<std::string>& members,
                              const std::string& type, const std::vector<EntityProfile>& candidates) const = 0;
};

class EventJudge {
 public:
  virtual ~EventJudge() = default;
  virtual bool same_event(const json& a, const json& b) const = 0;
};

class ChatEntityJudge final : public EntityJudge {
 public:
  explicit ChatEntityJudge(const ChatClient& chat) : chat_(chat) {}
  std::string infer_type(const Mention& m) const override;
  PairDecision adjudicate(const std::string& a, const std::string& b, const std::string& type) const override;
  AlignDecision align(const std::string& canonical, const std::vector<std::string>& members, const std::string& type,
                      const std::vector<EntityProfile>& candidates) const override;

 private:
  const ChatClient& chat_;
};

class ChatEventJudge final : public EventJudge {
 public:
  explicit ChatEventJudge(const ChatClient& chat) : chat_(chat) {}
  bool same_event(const json& a, const json& b) const override;

 private:
  const ChatClient& chat_;
};

inline constexpr double kDefaultClusterThreshold = 0.85;

struct MentionCluster {
  std::vector<std::string> members;  // sorted
  Embedding centroid;
  std::string inferred_type;
  std::string canonical_mention;
};

struct HierarchyLink {
  std::string child;
  std::string parent;

  auto operator<=>(const HierarchyLink&) const = default;
};

struct EntityIntraResult {
  std::vector<MentionCluster> clusters;     // ordered by canonical mention
  std::map<std::string, std::string> literals;  // literal-typed mentions, surface -> surface
  std::vector<HierarchyLink> hierarchy;
  std::map<std::string, std::string> types;  // every mention -> inferred type
  std::size_t adjudications = 0;
};

/// Types every mention, drops literals, then merges same-type pairs whose
/// cosine reaches `tau` and that the judge calls Merge (transitive closure).
EntityIntraResult normalize_entities_intra(const std::vector<Mention>& mentions, const Embedder& embedder,
                                           const EntityJudge& judge, double tau = kDefaultClusterThreshold);

// Longest member, ties broken lexicographically.
std::string canonical_mention(const std::vector<std::string>& members);

struct EntityAssignment {
  std::string entity_id;
  bool reused = false;
};

struct CrossAlignOptions {
  bool enabled = true;  // false at cold start or with cross-batch coreference disabled
  std::size_t candidates = 5;
  BatchIndex batch = 0;
};

/// One entity id per cluster (parallel to `clusters`). Reuse requires a judge
/// confirmation of a retrieved profile; new ids are "ent:<slug>", suffixed with
/// "~<batch>" (and a counter) when the id is already taken.
std::vector<EntityAssignment> align_entities_cross(const std::vector<MentionCluster>& clusters,
                                                   const MetaKnowledgeBase& mkb, const Embedder& embedder,
                                                   const EntityJudge& judge, const CrossAlignOptions& opts,
                                                   const std::function<bool(const std::string&)>& id_taken);

/// Event argument after entity resolution.
struct ResolvedArg {
  std::string value;  // entity id, or literal text
  bool literal = false;
  std::string type;
  std::string mention;

  bool operator==(const ResolvedArg&) const = default;
};

struct EventMention {
  std::string trigger;
  std::string event_type;
  std::map<std::string, ResolvedArg> roles;
  std::optional<TimeInterval> time;
  std::string time_text;
  Evidence evidence;
};

struct CanonicalEvent {
  std::string event_id;
  std::string trigger;
  std::string event_type;
  std::map<std::string, ResolvedArg> roles;
  std::optional<TimeInterval> time;
  std::string time_text;
  std::vector<Evidence> evidence;
  std::vector<std::size_t> members;  // indices into the intra input
  std::vector<std::string> role_conflicts;
  std::optional<std::string> aligned_to;  // existing event id when aligned across batches
};

json to_json(const CanonicalEvent& e);

struct EventSimilarityConfig {
  EventMatchWeights weights;
  double threshold = 0.8;
};

/// Weighted trigger/argument/time similarity; nullopt when times are disjoint
/// or a shared role has different fillers.
std::optional<double> event_similarity(const EventMention& a, const EventMention& b, const Embedder& embedder,
                                       const EventMatchWeights& w);

/// Pairs above threshold confirmed by the judge are merged; role bindings are
/// unioned and any disagreement is recorded in role_conflicts.
std::vector<CanonicalEvent> normalize_events_intra(const std::vector<EventMention>& events, const Embedder& embedder,
                                                   const EventJudge& judge, const EventSimilarityConfig& cfg = {});

/// Aligns each event to an indexed event when score >= threshold, times are
/// compatible and no role binding contradicts. Disabled options leave events as is.
void align_events_cross(std::vector<CanonicalEvent>& events, const MetaKnowledgeBase& mkb, const Embedder& embedder,
                        const EventSimilarityConfig& cfg, bool enabled);

}  // namespace dialkg
