#include "dialkg/schema_evolution.hpp"

#include <algorithm>
#include <numeric>

#include "dialkg/adapters/prompts.hpp"
#include "dialkg/text.hpp"

namespace dialkg {

namespace {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Keys grouped by single-link similarity; each group lists key indices.
std::vector<std::vector<std::size_t>> single_link(const std::vector<Embedding>& emb, double tau, UnionFind& uf) {
  for (std::size_t i = 0; i < emb.size(); ++i) {
    for (std::size_t j = i + 1; j < emb.size(); ++j) {
      if (cosine(emb[i], emb[j]) >= tau) uf.unite(i, j);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < emb.size(); ++i) groups[uf.find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [root, g] : groups) out.push_back(std::move(g));
  return out;
}

// Mean pairwise cosine over members, computed from per-key multiplicities.
double coherence(const std::vector<std::size_t>& keys, const std::vector<std::size_t>& counts,
                 const std::vector<Embedding>& emb) {
  std::size_t n = 0;
  for (auto k : keys) n += counts[k];
  if (n < 2) return 1.0;
  double sum = 0.0;
  for (std::size_t a = 0; a < keys.size(); ++a) {
    const double ca = static_cast<double>(counts[keys[a]]);
    sum += ca * (ca - 1) / 2.0;
    for (std::size_t b = a + 1; b < keys.size(); ++b) {
      sum += ca * static_cast<double>(counts[keys[b]]) * cosine(emb[keys[a]], emb[keys[b]]);
    }
  }
  return sum / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

// Most frequent value, ties to the lexicographically smallest.
std::string majority_label(const std::vector<std::string>& values) {
  std::map<std::string, std::size_t> counts;
  for (const auto& v : values) ++counts[v];
  std::string best;
  std::size_t best_n = 0;
  for (const auto& [v, n] : counts) {
    if (n > best_n) {
      best = v;
      best_n = n;
    }
  }
  return best;
}

json schema_for_judge(const Schema& s) {
  json j = to_json(s);
  j.erase("embedding");
  return j;
}

RelationMember relation_member_from_json(const json& j) {
  return {j.at("id"), j.at("relation"), j.at("head"), j.at("tail"), j.at("head_type"), j.at("tail_type")};
}

EventMember event_member_from_json(const json& j) {
  return {j.at("id"), j.at("trigger_lemma"), j.at("event_type"), j.at("role_types").get<std::map<std::string, std::string>>()};
}

template <typename Member, typename FromJson>
std::vector<Member> with_pending(const std::vector<Member>& verified, const MetaKnowledgeBase& mkb, const char* prefix,
                                 FromJson from_json, std::vector<std::string>& consumed) {
  std::vector<Member> out;
  std::set<std::string> seen;
  for (const auto& p : mkb.proposals()) {
    if (p.status != ProposalStatus::Pending || !p.proposal_id.starts_with(prefix)) continue;
    consumed.push_back(p.proposal_id);
    for (const auto& d : p.member_data) {
      auto m = from_json(d);
      if (seen.insert(m.id).second) out.push_back(std::move(m));
    }
  }
  for (const auto& m : verified) {
    if (seen.insert(m.id).second) out.push_back(m);
  }
  return out;
}

// Shared gate: support, coherence, then the evaluator.
void gate(SchemaProposal& p, const std::vector<json>& examples, const SchemaEvaluator& evaluator,
          const InductionConfig& cfg) {
  if (p.support_count < cfg.theta) {
    p.status = ProposalStatus::Pending;
    p.reason = "below_support";
  } else if (p.coherence < cfg.tau_coherence) {
    p.status = ProposalStatus::Pending;
    p.reason = "low_coherence";
  } else if (!evaluator.evaluate(p.candidate, examples)) {
    p.status = ProposalStatus::Pending;
    p.reason = "evaluator_rejected";
  } else {
    p.status = ProposalStatus::Promoted;
    p.reason = "promoted";
  }
}

}  // namespace

void InductionConfig::validate() const {
  if (theta < 1) throw ConfigError("theta must be at least 1");
  for (double t : {tau_coherence, tau_cluster, required_role_ratio}) {
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("induction thresholds must lie in [0, 1]");
  }
}

bool ChatSchemaEvaluator::evaluate(const Schema& candidate, const std::vector<json>& examples) const {
  std::string lines;
  for (const auto& e : examples) lines += e.dump() + "\n";
  const json out = chat_.call(prompts::make_request(
      prompts::kEvaluateSchema, {{"schema", schema_for_judge(candidate).dump()}, {"examples", lines}}, kJudgeTemperature));
  return out.at("pass").get<bool>();
}

json to_json(const RelationMember& m) {
  return {{"id", m.id},     {"relation", m.relation},   {"head", m.head},
          {"tail", m.tail}, {"head_type", m.head_type}, {"tail_type", m.tail_type}};
}

json to_json(const EventMember& m) {
  return {{"id", m.id}, {"trigger_lemma", m.trigger_lemma}, {"event_type", m.event_type}, {"role_types", m.role_types}};
}

std::vector<SchemaProposal> InductionOutcome::promoted() const {
  std::vector<SchemaProposal> out;
  for (const auto& p : proposals) {
    if (p.status == ProposalStatus::Promoted) out.push_back(p);
  }
  return out;
}

std::vector<SchemaProposal> InductionOutcome::pending() const {
  std::vector<SchemaProposal> out;
  for (const auto& p : proposals) {
    if (p.status == ProposalStatus::Pending) out.push_back(p);
  }
  return out;
}

std::string majority_type(const std::vector<std::string>& types) {
  std::map<std::string, std::size_t> counts;
  for (const auto& t : types) ++counts[t.empty() ? "Entity" : t];
  std::string best = "Entity";
  std::size_t best_n = 0;
  bool tie = false;
  for (const auto& [t, n] : counts) {
    if (n > best_n) {
      best = t;
      best_n = n;
      tie = false;
    } else if (n == best_n) {
      tie = true;
    }
  }
  return tie ? "Entity" : best;
}

InductionOutcome induce_relation_schemas(const std::vector<RelationMember>& verified, const MetaKnowledgeBase& mkb,
                                         const Embedder& embedder, const SchemaEvaluator& evaluator,
                                         const InductionConfig& cfg, BatchIndex batch) {
  InductionOutcome out;
  const auto members = with_pending(verified, mkb, "prop:rel:", relation_member_from_json, out.consumed);
  if (members.empty()) return out;

  std::vector<std::string> keys;
  std::map<std::string, std::size_t> key_index;
  std::vector<std::size_t> member_key;
  for (const auto& m : members) {
    auto k = text::relation_key(m.relation);
    auto [it, fresh] = key_index.emplace(k, keys.size());
    if (fresh) keys.push_back(k);
    member_key.push_back(it->second);
  }
  std::vector<std::size_t> counts(keys.size(), 0);
  for (auto k : member_key) ++counts[k];
  const auto emb = embedder.embed(keys);
  UnionFind uf(keys.size());
  const auto groups = single_link(emb, cfg.tau_cluster, uf);

  std::map<std::string, std::string> existing;  // relation key -> schema id
  for (const auto& s : mkb.relation_schemas()) existing.emplace(text::relation_key(s.relation_label), s.schema_id);

  for (const auto& g : groups) {
    std::vector<const RelationMember*> ms;
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (uf.find(member_key[i]) == uf.find(g.front())) ms.push_back(&members[i]);
    }
    std::vector<std::string> labels, domains, ranges;
    std::set<std::pair<std::string, std::string>> pairs;
    for (const auto* m : ms) {
      labels.push_back(text::normalize_relation_label(m->relation));
      domains.push_back(m->head_type);
      ranges.push_back(m->tail_type);
      pairs.emplace(m->head, m->tail);
    }
    std::size_t both_ways = 0;
    for (const auto& [h, t] : pairs) both_ways += (h != t && pairs.contains({t, h})) ? 1 : 0;

    RelationSchema rs;
    rs.relation_label = majority_label(labels);
    rs.schema_id = "rs:" + rs.relation_label;
    rs.domain_type = majority_type(domains);
    rs.range_type = majority_type(ranges);
    rs.properties.symmetric = both_ways >= 2;
    rs.support_count = ms.size();
    rs.embedding = embedder.embed_one(text::relation_key(rs.relation_label));

    SchemaProposal p;
    p.proposal_id = "prop:rel:" + rs.relation_label;
    p.support_count = ms.size();
    p.coherence = coherence(g, counts, emb);
    p.updated_batch = batch;
    std::vector<json> examples;
    for (const auto* m : ms) {
      p.member_instances.push_back(m->id);
      p.member_data.push_back(to_json(*m));
      examples.push_back({{"head", m->head}, {"relation", m->relation}, {"tail", m->tail}});
    }
    p.candidate = rs;

    std::optional<std::string> merged;
    for (auto k : g) {
      if (auto it = existing.find(keys[k]); it != existing.end()) {
        merged = it->second;
        break;
      }
    }
    if (merged) {
      p.status = ProposalStatus::Rejected;
      p.reason = "merged_into_existing:" + *merged;
      out.support_bumps.emplace_back(*merged, ms.size());
    } else {
      gate(p, examples, evaluator, cfg);
    }
    out.proposals.push_back(std::move(p));
  }
  return out;
}

InductionOutcome induce_event_schemas(const std::vector<EventMember>& verified, const MetaKnowledgeBase& mkb,
                                      const Embedder& embedder, const SchemaEvaluator& evaluator,
                                      const InductionConfig& cfg, BatchIndex batch) {
  InductionOutcome out;
  const auto members = with_pending(verified, mkb, "prop:evt:", event_member_from_json, out.consumed);
  if (members.empty()) return out;

  std::vector<std::string> keys;
  std::map<std::string, std::size_t> key_index;
  std::vector<std::size_t> member_key;
  for (const auto& m : members) {
    auto [it, fresh] = key_index.emplace(m.trigger_lemma, keys.size());
    if (fresh) keys.push_back(m.trigger_lemma);
    member_key.push_back(it->second);
  }
  std::vector<std::size_t> counts(keys.size(), 0);
  for (auto k : member_key) ++counts[k];
  const auto emb = embedder.embed(keys);
  UnionFind uf(keys.size());
  // Lemmas already sharing an event type belong together, keeping labels unique.
  std::map<std::string, std::size_t> first_of_type;
  for (std::size_t i = 0; i < members.size(); ++i) {
    auto [it, fresh] = first_of_type.emplace(members[i].event_type, member_key[i]);
    if (!fresh) uf.unite(it->second, member_key[i]);
  }
  const auto groups = single_link(emb, cfg.tau_cluster, uf);

  const auto schemas = mkb.event_schemas();
  for (const auto& g : groups) {
    std::vector<const EventMember*> ms;
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (uf.find(member_key[i]) == uf.find(g.front())) ms.push_back(&members[i]);
    }
    std::vector<std::string> types;
    std::map<std::string, std::vector<std::string>> role_fillers;
    EventSchema es;
    for (const auto* m : ms) {
      types.push_back(m->event_type);
      es.trigger_lemmas.insert(m->trigger_lemma);
      for (const auto& [role, type] : m->role_types) role_fillers[role].push_back(type);
    }
    es.event_type = majority_label(types);
    es.schema_id = "es:" + es.event_type;
    for (const auto& [role, fillers] : role_fillers) {
      const double ratio = static_cast<double>(fillers.size()) / static_cast<double>(ms.size());
      es.roles.push_back({role, majority_type(fillers), ratio >= cfg.required_role_ratio});
    }
    es.support_count = ms.size();
    std::string basis = es.event_type;
    for (const auto& l : es.trigger_lemmas) basis += " " + l;
    es.embedding = embedder.embed_one(basis);

    SchemaProposal p;
    p.proposal_id = "prop:evt:" + es.event_type;
    p.support_count = ms.size();
    p.coherence = coherence(g, counts, emb);
    p.updated_batch = batch;
    std::vector<json> examples;
    for (const auto* m : ms) {
      p.member_instances.push_back(m->id);
      p.member_data.push_back(to_json(*m));
      examples.push_back({{"trigger", m->trigger_lemma}, {"event_type", m->event_type}, {"roles", m->role_types}});
    }

    std::optional<std::string> merged;
    for (const auto& s : schemas) {
      const bool shared_lemma = std::any_of(es.trigger_lemmas.begin(), es.trigger_lemmas.end(),
                                            [&](const std::string& l) { return s.trigger_lemmas.contains(l); });
      if (s.event_type == es.event_type || shared_lemma) {
        merged = s.schema_id;
        break;
      }
    }
    p.candidate = std::move(es);
    if (merged) {
      p.status = ProposalStatus::Rejected;
      p.reason = "merged_into_existing:" + *merged;
      out.support_bumps.emplace_back(*merged, ms.size());
    } else {
      const auto& cand = std::get<EventSchema>(p.candidate);
      const bool any_required =
          std::any_of(cand.roles.begin(), cand.roles.end(), [](const RoleSpec& r) { return r.required; });
      if (!any_required && p.support_count >= cfg.theta) {
        p.status = ProposalStatus::Pending;
        p.reason = "no_required_role";
      } else {
        gate(p, examples, evaluator, cfg);
      }
    }
    out.proposals.push_back(std::move(p));
  }
  return out;
}

std::vector<std::string> apply_induction(MetaKnowledgeBase& mkb, const InductionOutcome& outcome) {
  for (const auto& id : outcome.consumed) mkb.erase_proposal(id);
  for (const auto& [schema, by] : outcome.support_bumps) mkb.bump_support(schema, by);
  std::vector<std::string> registered;
  for (auto p : outcome.proposals) {
    if (p.status == ProposalStatus::Promoted) {
      try {
        registered.push_back(mkb.register_schema(p));
      } catch (const DuplicateSchemaLabel& e) {
        p.status = ProposalStatus::Rejected;
        p.reason = std::string("duplicate_label: ") + e.what();
      }
    }
    mkb.stash_proposal(p);
  }
  return registered;
}

RelationalizedEvent relationalize_event(const CanonicalEvent& e, BatchIndex batch, const EventSchema* schema) {
  if (schema) {
    for (const auto& r : schema->roles) {
      if (r.required && !e.roles.contains(r.name)) {
        throw MissingRequiredRole(e.event_id + ": " + e.event_type + " requires role '" + r.name + "'");
      }
    }
  }
  RelationalizedEvent out;
  out.node = {e.event_id, e.trigger, kEventEntityType, batch};
  const std::vector<Evidence> ev = e.evidence.empty() ? std::vector<Evidence>{} : std::vector{e.evidence.front()};
  out.facts.push_back(make_fact(e.event_id, kTypeRelation, Tail::literal(e.event_type), ev, batch));
  for (const auto& [role, arg] : e.roles) {
    out.facts.push_back(make_fact(e.event_id, "has_" + role,
                                  arg.literal ? Tail::literal(arg.value) : Tail::entity(arg.value), ev, batch));
  }
  std::string when = e.time_text;
  if (when.empty() && e.time) when = e.time->to_string();
  if (!when.empty()) out.facts.push_back(make_fact(e.event_id, kTimeRelation, Tail::literal(when), ev, batch));
  return out;
}

EventRecord parse_back(const EntityNode& node, const std::vector<FactEdge>& facts) {
  EventRecord r;
  r.event_id = node.entity_id;
  r.trigger = node.canonical_name;
  for (const auto& f : facts) {
    if (f.head != node.entity_id) continue;
    if (f.relation == kTypeRelation) r.event_type = f.tail.value;
    else if (f.relation == kTimeRelation) r.time = f.tail.value;
    else if (f.relation.starts_with("has_")) r.roles[f.relation.substr(4)] = f.tail.value;
  }
  return r;
}

void update_entity_profiles(const std::vector<FactEdge>& facts, const std::map<std::string, EntityNode>& nodes,
                            const std::map<std::string, std::set<std::string>>& batch_aliases,
                            const std::map<std::string, std::set<std::string>>& parents, MetaKnowledgeBase& mkb,
                            const Embedder& embedder, BatchIndex batch) {
  std::map<std::string, EntityProfile> touched;
  auto touch = [&](const std::string& id) -> EntityProfile* {
    auto node = nodes.find(id);
    if (node == nodes.end() || node->second.entity_type == kEventEntityType) return nullptr;
    auto [it, fresh] = touched.try_emplace(id);
    if (fresh) {
      auto& p = it->second;
      if (auto old = mkb.profile(id)) p = *old;
      p.entity_id = id;
      if (p.canonical_name.empty()) p.canonical_name = node->second.canonical_name;
      p.entity_type = node->second.entity_type;
      p.aliases.insert(node->second.canonical_name);
      if (auto a = batch_aliases.find(id); a != batch_aliases.end()) p.aliases.insert(a->second.begin(), a->second.end());
      if (auto pr = parents.find(id); pr != parents.end()) p.parents.insert(pr->second.begin(), pr->second.end());
      p.last_updated_batch = batch;
    }
    return &it->second;
  };
  for (const auto& f : facts) {
    if (auto* p = touch(f.head); p && !f.tail.is_entity() && f.status == EdgeStatus::Active) {
      p->key_attributes[f.relation] = f.tail.value;
    }
    if (f.tail.is_entity()) touch(f.tail.value);
  }
  for (auto& [id, p] : touched) {
    const std::vector<std::string> aliases(p.aliases.begin(), p.aliases.end());
    const auto emb = embedder.embed(aliases);
    p.embedding = mean_embedding(emb);
    mkb.upsert_entity_profile(p);
  }
}

}  // namespace dialkg
