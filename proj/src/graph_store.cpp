#include "dialkg/graph_store.hpp"

#include <algorithm>
#include <mutex>
#include <set>
#include <sstream>

#include "dialkg/text.hpp"

namespace dialkg {

namespace {

constexpr std::string_view kFormat = "dialkg-graph/1";

std::string_view to_string(Tail::Kind k) { return k == Tail::Kind::Entity ? "entity" : "literal"; }

// Undo journal for in-place application. Each entry restores one mutation.
class Journal {
 public:
  explicit Journal(GraphState& s) : s_(s), batch_(s.batch_index), log_size_(s.deprecation_log.size()) {}

  void inserted_entity(const std::string& id) { entities_.push_back(id); }
  void inserted_edge(const std::string& id) { edges_.push_back(id); }
  void touched_edge(const FactEdge& before) { saved_.push_back(before); }

  void rollback() noexcept {
    // Undo in reverse order so an edge touched twice ends at its oldest image.
    for (auto it = saved_.rbegin(); it != saved_.rend(); ++it) s_.edges[it->edge_id] = *it;
    for (const auto& id : edges_) s_.edges.erase(id);
    for (const auto& id : entities_) s_.entities.erase(id);
    s_.deprecation_log.resize(log_size_);
    s_.batch_index = batch_;
  }

 private:
  GraphState& s_;
  BatchIndex batch_;
  std::size_t log_size_;
  std::vector<std::string> entities_;
  std::vector<std::string> edges_;
  std::vector<FactEdge> saved_;
};

void visit(FaultInjector* f, FaultPoint p) {
  if (f) f->visit(p);
}

void merge_evidence(std::vector<Evidence>& into, const std::vector<Evidence>& extra) {
  for (const auto& e : extra) {
    if (std::find(into.begin(), into.end(), e) == into.end()) into.push_back(e);
  }
}

void apply_in_place(GraphState& s, const KnowledgeIncrement& inc, FaultInjector* faults) {
  visit(faults, FaultPoint::Validate);
  validate_increment(s, inc);

  Journal journal(s);
  try {
    for (const auto& n : inc.new_entities) {
      s.entities.emplace(n.entity_id, n);
      journal.inserted_entity(n.entity_id);
      visit(faults, FaultPoint::EntityInsert);
    }
    for (const auto& e : inc.new_facts) {
      FactEdge stored = e;
      stored.status = EdgeStatus::Active;
      stored.created_at_batch = inc.batch_index;
      s.edges.emplace(stored.edge_id, std::move(stored));
      journal.inserted_edge(e.edge_id);
      visit(faults, FaultPoint::EdgeInsert);
    }
    for (const auto& r : inc.reaffirmations) {
      auto& edge = s.edges.at(r.edge_id);
      journal.touched_edge(edge);
      merge_evidence(edge.evidence, r.evidence);
      visit(faults, FaultPoint::EvidenceMerge);
    }
    for (const auto& d : inc.deprecations) {
      auto& edge = s.edges.at(d.edge_id);
      journal.touched_edge(edge);
      edge.status = EdgeStatus::Deprecated;
      edge.deprecated_at_batch = inc.batch_index;
      edge.deprecation_evidence = d.evidence;
      visit(faults, FaultPoint::StatusFlip);
    }
    for (const auto& d : inc.deprecations) {
      s.deprecation_log.push_back({inc.batch_index, d.edge_id, d.evidence});
      visit(faults, FaultPoint::LogAppend);
    }
    s.batch_index = inc.batch_index;
    visit(faults, FaultPoint::BatchIndex);
    visit(faults, FaultPoint::Commit);
  } catch (...) {
    journal.rollback();
    throw;
  }
}

json sorted_evidence(const std::vector<Evidence>& ev) {
  json arr = json::array();
  for (const auto& e : ev) arr.push_back(to_json(e));
  return arr;
}

template <class T>
T get_field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw CorruptSnapshot(std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace

std::string_view to_string(EdgeStatus s) { return s == EdgeStatus::Active ? "Active" : "Deprecated"; }

std::string_view to_string(FaultPoint p) {
  switch (p) {
    case FaultPoint::Validate: return "validate";
    case FaultPoint::EntityInsert: return "entity_insert";
    case FaultPoint::EdgeInsert: return "edge_insert";
    case FaultPoint::EvidenceMerge: return "evidence_merge";
    case FaultPoint::StatusFlip: return "status_flip";
    case FaultPoint::LogAppend: return "log_append";
    case FaultPoint::BatchIndex: return "batch_index";
    case FaultPoint::Commit: return "commit";
  }
  return "?";
}

void FaultInjector::visit(FaultPoint p) {
  if (p != point) return;
  if (visits++ == skip) throw InjectedFault("injected fault at " + std::string(to_string(p)));
}

std::string make_edge_id(std::string_view head, std::string_view relation, const Tail& tail) {
  std::string key;
  key.append(head).append(1, '\x1f');
  key.append(text::normalize_relation_label(relation)).append(1, '\x1f');
  key.append(to_string(tail.kind)).append(1, '\x1f');
  key.append(tail.value);
  return "f:" + hex64(fnv1a64(key));
}

FactEdge make_fact(std::string head, std::string relation, Tail tail, std::vector<Evidence> evidence,
                   BatchIndex batch) {
  FactEdge e;
  e.edge_id = make_edge_id(head, relation, tail);
  e.head = std::move(head);
  e.relation = std::move(relation);
  e.tail = std::move(tail);
  e.evidence = std::move(evidence);
  e.created_at_batch = batch;
  return e;
}

std::size_t GraphState::active_edge_count() const {
  return static_cast<std::size_t>(std::count_if(edges.begin(), edges.end(), [](const auto& kv) {
    return kv.second.status == EdgeStatus::Active;
  }));
}

void validate_increment(const GraphState& s, const KnowledgeIncrement& inc) {
  if (inc.batch_index != s.batch_index + 1) {
    throw BatchIndexMismatch("increment for batch " + std::to_string(inc.batch_index) + " applied to state at " +
                             std::to_string(s.batch_index));
  }
  std::set<std::string> fresh_entities;
  for (const auto& n : inc.new_entities) {
    if (n.entity_id.empty()) throw ConflictingIncrement("entity with empty id");
    if (s.entities.contains(n.entity_id) || !fresh_entities.insert(n.entity_id).second) {
      throw ConflictingIncrement("entity '" + n.entity_id + "' already exists");
    }
  }
  auto known = [&](const std::string& id) { return s.entities.contains(id) || fresh_entities.contains(id); };

  std::set<std::string> added;
  for (const auto& e : inc.new_facts) {
    if (e.edge_id != make_edge_id(e.head, e.relation, e.tail)) {
      throw ConflictingIncrement("edge id does not match its content: " + e.edge_id);
    }
    if (e.status != EdgeStatus::Active) throw ConflictingIncrement("new fact must be Active: " + e.edge_id);
    if (e.evidence.empty()) throw ConflictingIncrement("new fact without evidence: " + e.edge_id);
    if (s.edges.contains(e.edge_id) || !added.insert(e.edge_id).second) {
      throw ConflictingIncrement("edge '" + e.edge_id + "' already stored or duplicated");
    }
    if (!known(e.head)) throw DanglingEntityReference("unknown head '" + e.head + "' in " + e.edge_id);
    if (e.tail.is_entity() && !known(e.tail.value)) {
      throw DanglingEntityReference("unknown tail '" + e.tail.value + "' in " + e.edge_id);
    }
  }

  std::set<std::string> deprecated;
  for (const auto& d : inc.deprecations) {
    if (added.contains(d.edge_id)) {
      throw ConflictingIncrement("edge '" + d.edge_id + "' both added and deprecated");
    }
    auto it = s.edges.find(d.edge_id);
    if (it == s.edges.end() || it->second.status != EdgeStatus::Active) {
      throw UnknownDeprecationTarget("no Active edge '" + d.edge_id + "'");
    }
    if (!deprecated.insert(d.edge_id).second) {
      throw ConflictingIncrement("edge '" + d.edge_id + "' deprecated twice");
    }
  }
  for (const auto& r : inc.reaffirmations) {
    auto it = s.edges.find(r.edge_id);
    if (it == s.edges.end() || it->second.status != EdgeStatus::Active) {
      throw ConflictingIncrement("reaffirmed edge '" + r.edge_id + "' is not Active");
    }
    if (deprecated.contains(r.edge_id)) {
      throw ConflictingIncrement("edge '" + r.edge_id + "' both reaffirmed and deprecated");
    }
  }
}

GraphState apply_increment(const GraphState& state, const KnowledgeIncrement& inc, FaultInjector* faults) {
  GraphState next = state;
  apply_in_place(next, inc, faults);
  return next;
}

std::vector<FactEdge> active_facts(const GraphState& s, std::string_view entity_id) {
  std::vector<FactEdge> out;
  for (const auto& [id, e] : s.edges) {
    if (e.status != EdgeStatus::Active) continue;
    if (e.head == entity_id || (e.tail.is_entity() && e.tail.value == entity_id)) out.push_back(e);
  }
  return out;
}

json to_json(const EntityNode& n) {
  return {{"record", "entity"},
          {"entity_id", n.entity_id},
          {"canonical_name", n.canonical_name},
          {"entity_type", n.entity_type},
          {"created_at_batch", n.created_at_batch}};
}

json to_json(const FactEdge& e) {
  json j = {{"record", "edge"},
            {"edge_id", e.edge_id},
            {"head", e.head},
            {"relation", e.relation},
            {"tail", e.tail.value},
            {"tail_kind", to_string(e.tail.kind)},
            {"status", to_string(e.status)},
            {"created_at_batch", e.created_at_batch},
            {"evidence", sorted_evidence(e.evidence)}};
  if (e.deprecated_at_batch) j["deprecated_at_batch"] = *e.deprecated_at_batch;
  if (e.deprecation_evidence) j["deprecation_evidence"] = to_json(*e.deprecation_evidence);
  return j;
}

std::string snapshot(const GraphState& s) {
  std::string out;
  json header = {{"record", "header"},
                 {"format", kFormat},
                 {"batch_index", s.batch_index},
                 {"entities", s.entities.size()},
                 {"edges", s.edges.size()},
                 {"deprecation_log", s.deprecation_log.size()}};
  out += header.dump() + '\n';
  for (const auto& [id, n] : s.entities) out += to_json(n).dump() + '\n';
  for (const auto& [id, e] : s.edges) out += to_json(e).dump() + '\n';
  std::size_t seq = 0;
  for (const auto& r : s.deprecation_log) {
    json j = {{"record", "deprecation"},
              {"seq", seq++},
              {"batch_index", r.batch_index},
              {"edge_id", r.edge_id},
              {"evidence", to_json(r.evidence)}};
    out += j.dump() + '\n';
  }
  return out;
}

GraphState restore(std::string_view bytes) {
  std::vector<json> records;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    auto nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) throw CorruptSnapshot("snapshot ends without a newline");
    auto line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    try {
      records.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw CorruptSnapshot(std::string("unparseable record: ") + e.what());
    }
  }
  if (records.empty()) throw CorruptSnapshot("empty snapshot");
  const json& h = records.front();
  if (!h.is_object() || h.value("record", "") != "header" || h.value("format", "") != kFormat) {
    throw CorruptSnapshot("missing or unknown snapshot header");
  }
  const auto n_ent = get_field<std::size_t>(h, "entities");
  const auto n_edge = get_field<std::size_t>(h, "edges");
  const auto n_log = get_field<std::size_t>(h, "deprecation_log");
  if (records.size() != 1 + n_ent + n_edge + n_log) throw CorruptSnapshot("record count does not match header");

  GraphState s;
  s.batch_index = get_field<BatchIndex>(h, "batch_index");
  std::size_t i = 1;
  for (; i < 1 + n_ent; ++i) {
    const json& j = records[i];
    if (j.value("record", "") != "entity") throw CorruptSnapshot("expected entity record");
    EntityNode n{get_field<std::string>(j, "entity_id"), get_field<std::string>(j, "canonical_name"),
                 get_field<std::string>(j, "entity_type"), get_field<BatchIndex>(j, "created_at_batch")};
    if (!s.entities.emplace(n.entity_id, n).second) throw CorruptSnapshot("duplicate entity " + n.entity_id);
  }
  for (; i < 1 + n_ent + n_edge; ++i) {
    const json& j = records[i];
    if (j.value("record", "") != "edge") throw CorruptSnapshot("expected edge record");
    FactEdge e;
    e.edge_id = get_field<std::string>(j, "edge_id");
    e.head = get_field<std::string>(j, "head");
    e.relation = get_field<std::string>(j, "relation");
    const auto kind = get_field<std::string>(j, "tail_kind");
    if (kind != "entity" && kind != "literal") throw CorruptSnapshot("bad tail_kind");
    e.tail = Tail{kind == "entity" ? Tail::Kind::Entity : Tail::Kind::Literal, get_field<std::string>(j, "tail")};
    const auto status = get_field<std::string>(j, "status");
    if (status != "Active" && status != "Deprecated") throw CorruptSnapshot("bad status");
    e.status = status == "Active" ? EdgeStatus::Active : EdgeStatus::Deprecated;
    e.created_at_batch = get_field<BatchIndex>(j, "created_at_batch");
    try {
      for (const auto& ev : j.at("evidence")) e.evidence.push_back(evidence_from_json(ev));
      if (j.contains("deprecated_at_batch")) e.deprecated_at_batch = j.at("deprecated_at_batch").get<BatchIndex>();
      if (j.contains("deprecation_evidence")) e.deprecation_evidence = evidence_from_json(j.at("deprecation_evidence"));
    } catch (const json::exception& ex) {
      throw CorruptSnapshot(std::string("bad edge record: ") + ex.what());
    }
    if ((e.status == EdgeStatus::Deprecated) != e.deprecated_at_batch.has_value()) {
      throw CorruptSnapshot("status and deprecated_at_batch disagree for " + e.edge_id);
    }
    if (e.evidence.empty()) throw CorruptSnapshot("edge without evidence: " + e.edge_id);
    if (!s.edges.emplace(e.edge_id, e).second) throw CorruptSnapshot("duplicate edge " + e.edge_id);
  }
  for (; i < records.size(); ++i) {
    const json& j = records[i];
    if (j.value("record", "") != "deprecation") throw CorruptSnapshot("expected deprecation record");
    DeprecationRecord r;
    r.batch_index = get_field<BatchIndex>(j, "batch_index");
    r.edge_id = get_field<std::string>(j, "edge_id");
    try {
      r.evidence = evidence_from_json(j.at("evidence"));
    } catch (const json::exception& ex) {
      throw CorruptSnapshot(std::string("bad deprecation record: ") + ex.what());
    }
    s.deprecation_log.push_back(std::move(r));
  }
  return s;
}

void GraphStore::apply(const KnowledgeIncrement& inc, FaultInjector* faults) {
  std::unique_lock lock(mutex_);
  apply_in_place(state_, inc, faults);
}

GraphState GraphStore::state() const {
  std::shared_lock lock(mutex_);
  return state_;
}

BatchIndex GraphStore::batch_index() const {
  std::shared_lock lock(mutex_);
  return state_.batch_index;
}

std::vector<FactEdge> GraphStore::active_facts(std::string_view entity_id) const {
  std::shared_lock lock(mutex_);
  return dialkg::active_facts(state_, entity_id);
}

std::string GraphStore::snapshot() const {
  std::shared_lock lock(mutex_);
  return dialkg::snapshot(state_);
}

}  // namespace dialkg
