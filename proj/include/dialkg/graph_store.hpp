#pragma once

#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dialkg/common.hpp"

namespace dialkg {

enum class EdgeStatus { Active, Deprecated };

std::string_view to_string(EdgeStatus s);

/// Object of a fact: either another entity node or a literal value.
struct Tail {
  enum class Kind { Entity, Literal };
  Kind kind = Kind::Entity;
  std::string value;

  static Tail entity(std::string id) { return {Kind::Entity, std::move(id)}; }
  static Tail literal(std::string v) { return {Kind::Literal, std::move(v)}; }
  bool is_entity() const { return kind == Kind::Entity; }

  auto operator<=>(const Tail&) const = default;
};

struct EntityNode {
  std::string entity_id;
  std::string canonical_name;
  std::string entity_type;
  BatchIndex created_at_batch = 0;

  bool operator==(const EntityNode&) const = default;
};

struct FactEdge {
  std::string edge_id;
  std::string head;
  std::string relation;
  Tail tail;
  EdgeStatus status = EdgeStatus::Active;
  std::vector<Evidence> evidence;
  BatchIndex created_at_batch = 0;
  std::optional<BatchIndex> deprecated_at_batch;
  std::optional<Evidence> deprecation_evidence;

  bool operator==(const FactEdge&) const = default;
};

/// Deterministic id over (head, normalized relation, tail).
std::string make_edge_id(std::string_view head, std::string_view relation, const Tail& tail);

/// Builds an Active edge with its id filled in.
FactEdge make_fact(std::string head, std::string relation, Tail tail, std::vector<Evidence> evidence,
                   BatchIndex batch);

struct Deprecation {
  std::string edge_id;
  Evidence evidence;

  bool operator==(const Deprecation&) const = default;
};

/// Extra evidence for an edge that is already Active (idempotent re-assertion).
struct Reaffirmation {
  std::string edge_id;
  std::vector<Evidence> evidence;

  bool operator==(const Reaffirmation&) const = default;
};

struct KnowledgeIncrement {
  BatchIndex batch_index = 0;
  std::vector<EntityNode> new_entities;
  std::vector<FactEdge> new_facts;
  std::vector<Deprecation> deprecations;
  std::vector<Reaffirmation> reaffirmations;

  bool empty() const {
    return new_entities.empty() && new_facts.empty() && deprecations.empty() && reaffirmations.empty();
  }
};

struct DeprecationRecord {
  BatchIndex batch_index = 0;
  std::string edge_id;
  Evidence evidence;

  bool operator==(const DeprecationRecord&) const = default;
};

struct GraphState {
  BatchIndex batch_index = kNoBatch;
  std::map<std::string, EntityNode> entities;
  std::map<std::string, FactEdge> edges;
  std::vector<DeprecationRecord> deprecation_log;

  bool operator==(const GraphState&) const = default;

  std::size_t active_edge_count() const;
};

// Increment rejections. All of them abort the whole increment.
class IncrementRejected : public Error {
 public:
  using Error::Error;
};
class UnknownDeprecationTarget : public IncrementRejected {
 public:
  using IncrementRejected::IncrementRejected;
};
class DanglingEntityReference : public IncrementRejected {
 public:
  using IncrementRejected::IncrementRejected;
};
// Internally inconsistent increment (same edge added and deprecated, duplicates, ...).
class ConflictingIncrement : public DanglingEntityReference {
 public:
  using DanglingEntityReference::DanglingEntityReference;
};
class BatchIndexMismatch : public IncrementRejected {
 public:
  using IncrementRejected::IncrementRejected;
};

class InjectedFault : public Error {
 public:
  using Error::Error;
};

/// Named places inside increment application where a test can force a failure.
enum class FaultPoint {
  Validate,
  EntityInsert,
  EdgeInsert,
  EvidenceMerge,
  StatusFlip,
  LogAppend,
  BatchIndex,
  Commit,
};

inline constexpr FaultPoint kAllFaultPoints[] = {
    FaultPoint::Validate,  FaultPoint::EntityInsert, FaultPoint::EdgeInsert, FaultPoint::EvidenceMerge,
    FaultPoint::StatusFlip, FaultPoint::LogAppend,   FaultPoint::BatchIndex, FaultPoint::Commit,
};

std::string_view to_string(FaultPoint p);

/// Throws InjectedFault on the (skip+1)-th visit of `point`.
struct FaultInjector {
  FaultPoint point = FaultPoint::Commit;
  std::size_t skip = 0;
  std::size_t visits = 0;

  void visit(FaultPoint p);
};

/// Throws an IncrementRejected subclass when `inc` cannot be applied to `state`.
void validate_increment(const GraphState& state, const KnowledgeIncrement& inc);

/// V_k = V_{k-1} ∪ V+, Active(E_k) = (Active(E_{k-1}) \ E↓) ∪ E+. Storage is
/// append-only; deprecated edges keep their evidence. Returns a new state and
/// leaves `state` untouched.
GraphState apply_increment(const GraphState& state, const KnowledgeIncrement& inc,
                           FaultInjector* faults = nullptr);

/// Active edges with `entity_id` as head or tail, ordered by edge_id.
std::vector<FactEdge> active_facts(const GraphState& state, std::string_view entity_id);

/// Line-delimited JSON, keys sorted, records sorted by id. Deterministic.
std::string snapshot(const GraphState& state);
GraphState restore(std::string_view bytes);

json to_json(const EntityNode& n);
json to_json(const FactEdge& e);

/// Thread-safe holder: readers share, a single writer applies increments in
/// place with an undo journal so readers never see partial state.
class GraphStore {
 public:
  GraphStore() = default;
  explicit GraphStore(GraphState initial) : state_(std::move(initial)) {}

  void apply(const KnowledgeIncrement& inc, FaultInjector* faults = nullptr);

  GraphState state() const;
  BatchIndex batch_index() const;
  std::vector<FactEdge> active_facts(std::string_view entity_id) const;
  std::string snapshot() const;

  template <class F>
  auto read(F&& fn) const {
    std::shared_lock lock(mutex_);
    return std::invoke(std::forward<F>(fn), std::as_const(state_));
  }

 private:
  mutable std::shared_mutex mutex_;
  GraphState state_;
};

}  // namespace dialkg
