#include "dialkg/mkb.hpp"

#include <algorithm>
#include <mutex>

namespace dialkg {

namespace {

constexpr std::string_view kFormat = "dialkg-mkb/1";

template <class Map>
auto values_of(const Map& m) {
  std::vector<typename Map::mapped_type> out;
  out.reserve(m.size());
  for (const auto& [k, v] : m) out.push_back(v);
  return out;
}

json to_json(const RelationProperties& p) {
  json j = {{"symmetric", p.symmetric}, {"anti_symmetric", p.anti_symmetric}, {"irreflexive", p.irreflexive}};
  if (p.inverse_of) j["inverse_of"] = *p.inverse_of;
  return j;
}

RelationProperties properties_from_json(const json& j) {
  RelationProperties p;
  p.symmetric = j.at("symmetric").get<bool>();
  p.anti_symmetric = j.at("anti_symmetric").get<bool>();
  p.irreflexive = j.at("irreflexive").get<bool>();
  if (j.contains("inverse_of")) p.inverse_of = j.at("inverse_of").get<std::string>();
  return p;
}

json to_json(const SchemaProposal& p) {
  return {{"record", "proposal"},
          {"proposal_id", p.proposal_id},
          {"candidate", to_json(p.candidate)},
          {"support_count", p.support_count},
          {"coherence", p.coherence},
          {"status", to_string(p.status)},
          {"member_instances", p.member_instances},
          {"member_data", p.member_data},
          {"reason", p.reason},
          {"updated_batch", p.updated_batch}};
}

SchemaProposal proposal_from_json(const json& j) {
  SchemaProposal p;
  p.proposal_id = j.at("proposal_id").get<std::string>();
  p.candidate = schema_from_json(j.at("candidate"));
  p.support_count = j.at("support_count").get<std::size_t>();
  p.coherence = j.at("coherence").get<double>();
  const auto st = j.at("status").get<std::string>();
  if (st == "Pending") p.status = ProposalStatus::Pending;
  else if (st == "Promoted") p.status = ProposalStatus::Promoted;
  else if (st == "Rejected") p.status = ProposalStatus::Rejected;
  else throw CorruptSnapshot("bad proposal status " + st);
  p.member_instances = j.at("member_instances").get<std::vector<std::string>>();
  p.member_data = j.at("member_data").get<std::vector<json>>();
  p.reason = j.at("reason").get<std::string>();
  p.updated_batch = j.at("updated_batch").get<BatchIndex>();
  return p;
}

json to_json(const IndexedEvent& e) {
  json j = {{"record", "event"},
            {"event_id", e.event_id},
            {"trigger", e.trigger},
            {"event_type", e.event_type},
            {"roles", e.roles},
            {"trigger_embedding", to_json(e.trigger_embedding)},
            {"batch", e.batch}};
  if (e.time) j["time"] = e.time->to_string();
  return j;
}

IndexedEvent event_from_json(const json& j) {
  IndexedEvent e;
  e.event_id = j.at("event_id").get<std::string>();
  e.trigger = j.at("trigger").get<std::string>();
  e.event_type = j.at("event_type").get<std::string>();
  e.roles = j.at("roles").get<std::map<std::string, std::string>>();
  e.trigger_embedding = embedding_from_json(j.at("trigger_embedding"));
  e.batch = j.at("batch").get<BatchIndex>();
  if (j.contains("time")) {
    e.time = TimeInterval::parse(j.at("time").get<std::string>());
    if (!e.time) throw CorruptSnapshot("bad event time");
  }
  return e;
}

EntityProfile profile_from_json(const json& j) {
  EntityProfile p;
  p.entity_id = j.at("entity_id").get<std::string>();
  p.canonical_name = j.at("canonical_name").get<std::string>();
  p.aliases = j.at("aliases").get<std::set<std::string>>();
  p.entity_type = j.at("entity_type").get<std::string>();
  p.key_attributes = j.at("key_attributes").get<std::map<std::string, std::string>>();
  p.last_updated_batch = j.at("last_updated_batch").get<BatchIndex>();
  p.embedding = embedding_from_json(j.at("embedding"));
  p.parents = j.at("parents").get<std::set<std::string>>();
  return p;
}

}  // namespace

const RoleSpec* EventSchema::role(std::string_view name) const {
  for (const auto& r : roles) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

const std::string& schema_id(const Schema& s) {
  return std::visit([](const auto& x) -> const std::string& { return x.schema_id; }, s);
}

const std::string& schema_label(const Schema& s) {
  if (const auto* r = std::get_if<RelationSchema>(&s)) return r->relation_label;
  return std::get<EventSchema>(s).event_type;
}

std::string_view to_string(ProposalStatus s) {
  switch (s) {
    case ProposalStatus::Pending: return "Pending";
    case ProposalStatus::Promoted: return "Promoted";
    case ProposalStatus::Rejected: return "Rejected";
  }
  return "?";
}

std::optional<double> time_compatibility(const std::optional<TimeInterval>& a, const std::optional<TimeInterval>& b) {
  if (!a || !b) return 0.5;
  if (!a->overlaps(*b)) return std::nullopt;
  return 1.0;
}

double argument_overlap(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

void ExactCosineIndex::upsert(const std::string& key, const Embedding& e) {
  if (e.dimension() != dimension_) throw DimensionMismatch("index dimension mismatch for " + key);
  items_.insert_or_assign(key, e);
}

std::vector<ScoredId> ExactCosineIndex::search(const Embedding& query, std::size_t k) const {
  if (query.dimension() != dimension_) throw DimensionMismatch("query dimension mismatch");
  std::vector<ScoredId> all;
  all.reserve(items_.size());
  for (const auto& [key, e] : items_) all.push_back({key, cosine(query, e)});
  const auto n = std::min(k, all.size());
  auto by_rank = [](const ScoredId& a, const ScoredId& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), by_rank);
  all.resize(n);
  return all;
}

MetaKnowledgeBase::MetaKnowledgeBase(std::size_t dimension)
    : dimension_(dimension),
      schema_index_(std::make_unique<ExactCosineIndex>(dimension)),
      profile_index_(std::make_unique<ExactCosineIndex>(dimension)) {}

MetaKnowledgeBase::MetaKnowledgeBase(const MetaKnowledgeBase& other) : MetaKnowledgeBase(other.dimension_) {
  *this = other;
}

MetaKnowledgeBase& MetaKnowledgeBase::operator=(const MetaKnowledgeBase& other) {
  if (this == &other) return *this;
  std::unique_lock lock(mutex_, std::defer_lock);
  std::shared_lock other_lock(other.mutex_, std::defer_lock);
  std::lock(lock, other_lock);
  dimension_ = other.dimension_;
  profiles_ = other.profiles_;
  relations_ = other.relations_;
  event_schemas_ = other.event_schemas_;
  proposals_ = other.proposals_;
  events_ = other.events_;
  rebuild_indexes();
  return *this;
}

void MetaKnowledgeBase::check_dim(const Embedding& e) const {
  if (e.dimension() != dimension_) {
    throw DimensionMismatch("expected dimension " + std::to_string(dimension_) + ", got " +
                            std::to_string(e.dimension()));
  }
}

void MetaKnowledgeBase::rebuild_indexes() {
  schema_index_ = std::make_unique<ExactCosineIndex>(dimension_);
  profile_index_ = std::make_unique<ExactCosineIndex>(dimension_);
  for (const auto& [id, s] : relations_) schema_index_->upsert(id, s.embedding);
  for (const auto& [id, s] : event_schemas_) schema_index_->upsert(id, s.embedding);
  for (const auto& [id, p] : profiles_) profile_index_->upsert(id, p.embedding);
}

std::vector<ScoredSchema> MetaKnowledgeBase::retrieve_schemas(const Embedding& query, std::size_t k) const {
  check_dim(query);
  std::shared_lock lock(mutex_);
  std::vector<ScoredSchema> out;
  for (const auto& hit : schema_index_->search(query, k)) {
    if (auto it = relations_.find(hit.id); it != relations_.end()) {
      out.push_back({it->second, hit.score});
    } else {
      out.push_back({event_schemas_.at(hit.id), hit.score});
    }
  }
  return out;
}

std::vector<ScoredProfile> MetaKnowledgeBase::match_entity(const Embedding& query, std::size_t n) const {
  check_dim(query);
  std::shared_lock lock(mutex_);
  std::vector<ScoredProfile> out;
  for (const auto& hit : profile_index_->search(query, n)) out.push_back({profiles_.at(hit.id), hit.score});
  return out;
}

std::vector<ScoredId> MetaKnowledgeBase::match_event(const Embedding& trigger, const std::set<std::string>& key_args,
                                                     const std::optional<TimeInterval>& window,
                                                     const EventMatchWeights& w) const {
  check_dim(trigger);
  std::shared_lock lock(mutex_);
  std::vector<ScoredId> out;
  for (const auto& [id, e] : events_) {
    auto t = time_compatibility(window, e.time);
    if (!t) continue;
    std::set<std::string> args;
    for (const auto& [role, value] : e.roles) args.insert(value);
    const double score =
        w.trigger * cosine(trigger, e.trigger_embedding) + w.arguments * argument_overlap(key_args, args) + w.time * *t;
    out.push_back({id, score});
  }
  std::sort(out.begin(), out.end(), [](const ScoredId& a, const ScoredId& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  return out;
}

void MetaKnowledgeBase::upsert_entity_profile(const EntityProfile& incoming) {
  check_dim(incoming.embedding);
  std::unique_lock lock(mutex_);
  auto [it, fresh] = profiles_.try_emplace(incoming.entity_id, incoming);
  EntityProfile& p = it->second;
  if (!fresh) {
    const bool newer = incoming.last_updated_batch >= p.last_updated_batch;
    p.aliases.insert(incoming.aliases.begin(), incoming.aliases.end());
    p.parents.insert(incoming.parents.begin(), incoming.parents.end());
    for (const auto& [k, v] : incoming.key_attributes) {
      if (newer || !p.key_attributes.contains(k)) p.key_attributes[k] = v;
    }
    if (newer) {
      p.canonical_name = incoming.canonical_name;
      p.entity_type = incoming.entity_type;
      p.embedding = incoming.embedding;
      p.last_updated_batch = incoming.last_updated_batch;
    }
  }
  p.aliases.insert(p.canonical_name);
  profile_index_->upsert(p.entity_id, p.embedding);
}

std::string MetaKnowledgeBase::register_schema(const SchemaProposal& proposal) {
  if (proposal.status != ProposalStatus::Promoted) throw Error("only Promoted proposals can be registered");
  std::unique_lock lock(mutex_);
  if (const auto* r = std::get_if<RelationSchema>(&proposal.candidate)) {
    check_dim(r->embedding);
    for (const auto& [id, s] : relations_) {
      if (s.relation_label == r->relation_label) throw DuplicateSchemaLabel("relation '" + r->relation_label + "'");
    }
    RelationSchema s = *r;
    if (s.schema_id.empty()) s.schema_id = "rs:" + s.relation_label;
    if (relations_.contains(s.schema_id) || event_schemas_.contains(s.schema_id)) {
      throw DuplicateSchemaLabel("schema id '" + s.schema_id + "'");
    }
    schema_index_->upsert(s.schema_id, s.embedding);
    relations_.emplace(s.schema_id, s);
    return s.schema_id;
  }
  const auto& e = std::get<EventSchema>(proposal.candidate);
  check_dim(e.embedding);
  if (e.roles.empty() || std::none_of(e.roles.begin(), e.roles.end(), [](const RoleSpec& r) { return r.required; })) {
    throw Error("event schema '" + e.event_type + "' needs at least one required role");
  }
  for (const auto& [id, s] : event_schemas_) {
    if (s.event_type == e.event_type) throw DuplicateSchemaLabel("event type '" + e.event_type + "'");
  }
  EventSchema s = e;
  if (s.schema_id.empty()) s.schema_id = "es:" + s.event_type;
  if (relations_.contains(s.schema_id) || event_schemas_.contains(s.schema_id)) {
    throw DuplicateSchemaLabel("schema id '" + s.schema_id + "'");
  }
  schema_index_->upsert(s.schema_id, s.embedding);
  event_schemas_.emplace(s.schema_id, s);
  return s.schema_id;
}

void MetaKnowledgeBase::stash_proposal(const SchemaProposal& proposal) {
  std::unique_lock lock(mutex_);
  proposals_.insert_or_assign(proposal.proposal_id, proposal);
}

void MetaKnowledgeBase::erase_proposal(const std::string& proposal_id) {
  std::unique_lock lock(mutex_);
  proposals_.erase(proposal_id);
}

void MetaKnowledgeBase::bump_support(const std::string& id, std::size_t by) {
  std::unique_lock lock(mutex_);
  if (auto it = relations_.find(id); it != relations_.end()) {
    it->second.support_count += by;
  } else if (auto et = event_schemas_.find(id); et != event_schemas_.end()) {
    et->second.support_count += by;
  }
}

void MetaKnowledgeBase::mark_relation_properties(const std::string& id, const RelationProperties& props) {
  std::unique_lock lock(mutex_);
  if (auto it = relations_.find(id); it != relations_.end()) it->second.properties = props;
}

void MetaKnowledgeBase::register_event(const IndexedEvent& event) {
  check_dim(event.trigger_embedding);
  std::unique_lock lock(mutex_);
  events_.insert_or_assign(event.event_id, event);
}

std::optional<EntityProfile> MetaKnowledgeBase::profile(const std::string& id) const {
  std::shared_lock lock(mutex_);
  if (auto it = profiles_.find(id); it != profiles_.end()) return it->second;
  return std::nullopt;
}

std::vector<EntityProfile> MetaKnowledgeBase::profiles() const {
  std::shared_lock lock(mutex_);
  return values_of(profiles_);
}

std::vector<RelationSchema> MetaKnowledgeBase::relation_schemas() const {
  std::shared_lock lock(mutex_);
  return values_of(relations_);
}

std::vector<EventSchema> MetaKnowledgeBase::event_schemas() const {
  std::shared_lock lock(mutex_);
  return values_of(event_schemas_);
}

std::optional<RelationSchema> MetaKnowledgeBase::relation_schema_by_label(std::string_view label) const {
  std::shared_lock lock(mutex_);
  for (const auto& [id, s] : relations_) {
    if (s.relation_label == label) return s;
  }
  return std::nullopt;
}

std::optional<EventSchema> MetaKnowledgeBase::event_schema_by_type(std::string_view type) const {
  std::shared_lock lock(mutex_);
  for (const auto& [id, s] : event_schemas_) {
    if (s.event_type == type) return s;
  }
  return std::nullopt;
}

std::vector<SchemaProposal> MetaKnowledgeBase::proposals() const {
  std::shared_lock lock(mutex_);
  return values_of(proposals_);
}

std::vector<IndexedEvent> MetaKnowledgeBase::events() const {
  std::shared_lock lock(mutex_);
  return values_of(events_);
}

std::optional<IndexedEvent> MetaKnowledgeBase::event(const std::string& id) const {
  std::shared_lock lock(mutex_);
  if (auto it = events_.find(id); it != events_.end()) return it->second;
  return std::nullopt;
}

std::size_t MetaKnowledgeBase::schema_count() const {
  std::shared_lock lock(mutex_);
  return relations_.size() + event_schemas_.size();
}

json to_json(const Schema& s) {
  if (const auto* r = std::get_if<RelationSchema>(&s)) {
    return {{"kind", "relation"},
            {"schema_id", r->schema_id},
            {"label", r->relation_label},
            {"domain", r->domain_type},
            {"range", r->range_type},
            {"properties", to_json(r->properties)},
            {"support_count", r->support_count},
            {"embedding", to_json(r->embedding)}};
  }
  const auto& e = std::get<EventSchema>(s);
  json roles = json::array();
  for (const auto& r : e.roles) roles.push_back({{"name", r.name}, {"type", r.type}, {"required", r.required}});
  return {{"kind", "event"},
          {"schema_id", e.schema_id},
          {"event_type", e.event_type},
          {"trigger_lemmas", e.trigger_lemmas},
          {"roles", roles},
          {"support_count", e.support_count},
          {"embedding", to_json(e.embedding)}};
}

Schema schema_from_json(const json& j) {
  if (j.at("kind") == "relation") {
    RelationSchema r;
    r.schema_id = j.at("schema_id").get<std::string>();
    r.relation_label = j.at("label").get<std::string>();
    r.domain_type = j.at("domain").get<std::string>();
    r.range_type = j.at("range").get<std::string>();
    r.properties = properties_from_json(j.at("properties"));
    r.support_count = j.at("support_count").get<std::size_t>();
    r.embedding = embedding_from_json(j.at("embedding"));
    return r;
  }
  EventSchema e;
  e.schema_id = j.at("schema_id").get<std::string>();
  e.event_type = j.at("event_type").get<std::string>();
  e.trigger_lemmas = j.at("trigger_lemmas").get<std::set<std::string>>();
  for (const auto& r : j.at("roles")) {
    e.roles.push_back({r.at("name").get<std::string>(), r.at("type").get<std::string>(), r.at("required").get<bool>()});
  }
  e.support_count = j.at("support_count").get<std::size_t>();
  e.embedding = embedding_from_json(j.at("embedding"));
  return e;
}

json to_json(const EntityProfile& p) {
  return {{"record", "profile"},
          {"entity_id", p.entity_id},
          {"canonical_name", p.canonical_name},
          {"aliases", p.aliases},
          {"entity_type", p.entity_type},
          {"key_attributes", p.key_attributes},
          {"last_updated_batch", p.last_updated_batch},
          {"embedding", to_json(p.embedding)},
          {"parents", p.parents}};
}

std::string MetaKnowledgeBase::snapshot() const {
  std::shared_lock lock(mutex_);
  std::string out;
  json header = {{"record", "header"},
                 {"format", kFormat},
                 {"dimension", dimension_},
                 {"profiles", profiles_.size()},
                 {"relation_schemas", relations_.size()},
                 {"event_schemas", event_schemas_.size()},
                 {"proposals", proposals_.size()},
                 {"events", events_.size()}};
  out += header.dump() + '\n';
  for (const auto& [id, p] : profiles_) out += to_json(p).dump() + '\n';
  for (const auto& [id, s] : relations_) {
    json j = to_json(Schema{s});
    j["record"] = "relation_schema";
    out += j.dump() + '\n';
  }
  for (const auto& [id, s] : event_schemas_) {
    json j = to_json(Schema{s});
    j["record"] = "event_schema";
    out += j.dump() + '\n';
  }
  for (const auto& [id, p] : proposals_) out += to_json(p).dump() + '\n';
  for (const auto& [id, e] : events_) out += to_json(e).dump() + '\n';
  return out;
}

MetaKnowledgeBase MetaKnowledgeBase::restore(std::string_view bytes) {
  std::vector<json> records;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    auto nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) throw CorruptSnapshot("MKB snapshot ends without a newline");
    auto line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    try {
      records.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw CorruptSnapshot(std::string("unparseable MKB record: ") + e.what());
    }
  }
  if (records.empty() || records.front().value("record", "") != "header" ||
      records.front().value("format", "") != kFormat) {
    throw CorruptSnapshot("missing or unknown MKB header");
  }
  try {
    const json& h = records.front();
    MetaKnowledgeBase m(h.at("dimension").get<std::size_t>());
    const std::size_t expected = 1 + h.at("profiles").get<std::size_t>() + h.at("relation_schemas").get<std::size_t>() +
                                 h.at("event_schemas").get<std::size_t>() + h.at("proposals").get<std::size_t>() +
                                 h.at("events").get<std::size_t>();
    if (records.size() != expected) throw CorruptSnapshot("MKB record count does not match header");
    for (std::size_t i = 1; i < records.size(); ++i) {
      const json& j = records[i];
      const auto kind = j.at("record").get<std::string>();
      if (kind == "profile") {
        auto p = profile_from_json(j);
        m.profiles_.emplace(p.entity_id, std::move(p));
      } else if (kind == "relation_schema") {
        auto s = std::get<RelationSchema>(schema_from_json(j));
        m.relations_.emplace(s.schema_id, std::move(s));
      } else if (kind == "event_schema") {
        auto s = std::get<EventSchema>(schema_from_json(j));
        m.event_schemas_.emplace(s.schema_id, std::move(s));
      } else if (kind == "proposal") {
        auto p = proposal_from_json(j);
        m.proposals_.emplace(p.proposal_id, std::move(p));
      } else if (kind == "event") {
        auto e = event_from_json(j);
        m.events_.emplace(e.event_id, std::move(e));
      } else {
        throw CorruptSnapshot("unknown MKB record kind " + kind);
      }
    }
    m.rebuild_indexes();
    return m;
  } catch (const json::exception& e) {
    throw CorruptSnapshot(std::string("bad MKB record: ") + e.what());
  } catch (const std::bad_variant_access&) {
    throw CorruptSnapshot("MKB schema record of the wrong kind");
  }
}

}  // namespace dialkg
