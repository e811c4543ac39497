#include "dialkg/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "dialkg/adapters/http_backend.hpp"
#include "dialkg/adapters/mock_backend.hpp"
#include "dialkg/normalization.hpp"
#include "dialkg/parallel.hpp"
#include "dialkg/text.hpp"

namespace dialkg {

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, std::string_view bytes) {
  const auto tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  std::filesystem::rename(tmp, p);
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + where + key + "'");
    }
  }
}

template <class T>
void take(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

class StageTimer {
 public:
  StageTimer(bool on, std::map<std::string, double>& sink) : on_(on), sink_(sink), t0_(Clock::now()) {}
  void lap(const std::string& stage) {
    const auto now = Clock::now();
    if (on_) sink_[stage] = std::chrono::duration<double, std::milli>(now - t0_).count();
    t0_ = now;
  }

 private:
  using Clock = std::chrono::steady_clock;
  bool on_;
  std::map<std::string, double>& sink_;
  Clock::time_point t0_;
};

void add_evidence(std::vector<Evidence>& into, const Evidence& e) {
  if (std::find(into.begin(), into.end(), e) == into.end()) into.push_back(e);
}

std::string joined_evidence(const std::vector<Evidence>& ev) {
  std::string out;
  for (const auto& e : ev) out += (out.empty() ? "" : "\n") + e.text;
  return out;
}

// A fact that passed governance, before it is split into E+ and reaffirmations.
struct AcceptedFact {
  std::string head;
  std::string relation;
  Tail tail;
  Evidence evidence;
  std::string head_type;
  std::string tail_type;
  bool from_event = false;
};

/// State for one run of the per-batch loop.
class BatchRun {
 public:
  BatchRun(const PipelineConfig& cfg, const Services& sv, const RuleRouter& router, const GraphState& graph,
           const MetaKnowledgeBase& mkb, BatchReport& report)
      : cfg_(cfg), sv_(sv), router_(router), graph_(graph), mkb_(mkb), report_(report), k_(graph.batch_index + 1) {}

  void extract(const std::vector<Document>& docs);
  void normalize();
  void govern();
  KnowledgeIncrement assemble();
  MetaKnowledgeBase evolve(const KnowledgeIncrement& inc);

 private:
  void reject(const std::string& stage, json candidate, const std::string& code, const std::string& why) {
    report_.rejected.push_back({{"stage", stage}, {"candidate", std::move(candidate)}, {"reason_code", code},
                                {"rationale", why}});
  }
  void park(const std::string& stage, json candidate, const std::string& why) {
    report_.pending.push_back({{"stage", stage}, {"candidate", std::move(candidate)}, {"reason", why}});
  }
  std::string name_of(const std::string& entity_id) const {
    if (auto it = nodes_.find(entity_id); it != nodes_.end()) return it->second.canonical_name;
    if (auto it = graph_.entities.find(entity_id); it != graph_.entities.end()) return it->second.canonical_name;
    return entity_id;
  }
  std::string type_of_mention(const std::string& m) const {
    auto it = intra_.types.find(m);
    return it == intra_.types.end() ? "Entity" : it->second;
  }

  const PipelineConfig& cfg_;
  const Services& sv_;
  const RuleRouter& router_;
  const GraphState& graph_;
  const MetaKnowledgeBase& mkb_;
  BatchReport& report_;
  const BatchIndex k_;

  std::vector<TripleCandidate> triples_;
  std::vector<EventCandidate> event_candidates_;

  EntityIntraResult intra_;
  std::map<std::string, std::string> mention_id_;
  std::map<std::string, EntityNode> nodes_;  // nodes that may enter V+
  std::map<std::string, std::set<std::string>> aliases_;
  std::map<std::string, std::set<std::string>> parents_;
  std::vector<FactCandidate> fact_candidates_;
  std::vector<CanonicalEvent> events_;

  std::vector<AcceptedFact> accepted_;
  std::map<std::string, Deprecation> deprecations_;
  std::vector<const CanonicalEvent*> accepted_events_;
};

void BatchRun::extract(const std::vector<Document>& docs) {
  const auto ctx = build_context(docs, mkb_, *sv_.embedder, cfg_.retrieval_k,
                                 sv_.chat->prompts().has("few_shot") ? sv_.chat->prompts().text("few_shot") : "");
  report_.counts["schemas_in_context"] = ctx.schemas.size();
  Extractor extractor(*sv_.chat, router_);
  for (auto& d : extractor.extract_batch(docs, ctx, cfg_.enable_events, cfg_.threads)) {
    if (d.skipped_reason) {
      report_.skipped_documents.push_back({{"doc_id", d.doc_id}, {"reason", *d.skipped_reason}});
      continue;
    }
    triples_.insert(triples_.end(), d.triples.begin(), d.triples.end());
    event_candidates_.insert(event_candidates_.end(), d.events.begin(), d.events.end());
  }
  report_.counts["documents"] = docs.size();
  report_.counts["triples_extracted"] = triples_.size();
  report_.counts["events_extracted"] = event_candidates_.size();
}

void BatchRun::normalize() {
  const bool cross = k_ > 0 && cfg_.enable_coref;
  ChatEntityJudge entity_judge(*sv_.chat);
  intra_ = normalize_entities_intra(collect_mentions(triples_, event_candidates_), *sv_.embedder, entity_judge,
                                    cfg_.tau_cluster);
  const auto assigned = align_entities_cross(
      intra_.clusters, mkb_, *sv_.embedder, entity_judge, {cross, cfg_.entity_candidates, k_},
      [&](const std::string& id) { return graph_.entities.contains(id); });
  for (std::size_t i = 0; i < intra_.clusters.size(); ++i) {
    const auto& c = intra_.clusters[i];
    const auto& id = assigned[i].entity_id;
    for (const auto& m : c.members) {
      mention_id_[m] = id;
      aliases_[id].insert(m);
    }
    if (!graph_.entities.contains(id)) nodes_.emplace(id, EntityNode{id, c.canonical_mention, c.inferred_type, k_});
  }
  for (const auto& h : intra_.hierarchy) {
    auto child = mention_id_.find(h.child);
    auto parent = mention_id_.find(h.parent);
    if (child != mention_id_.end() && parent != mention_id_.end() && child->second != parent->second) {
      parents_[child->second].insert(parent->second);
    }
  }
  report_.counts["mentions"] = intra_.types.size();
  report_.counts["entity_clusters"] = intra_.clusters.size();

  for (const auto& t : triples_) {
    auto head = mention_id_.find(t.head);
    if (head == mention_id_.end()) {
      reject("normalization", to_json(t), "literal_head", "'" + t.head + "' does not resolve to an entity");
      continue;
    }
    FactCandidate c;
    c.head = head->second;
    c.head_name = t.head;
    c.head_type = type_of_mention(t.head);
    c.relation = text::normalize_relation_label(t.relation);
    if (auto tail = mention_id_.find(t.tail); tail != mention_id_.end()) {
      c.tail = Tail::entity(tail->second);
      c.tail_type = type_of_mention(t.tail);
    } else {
      c.tail = Tail::literal(t.tail);
      c.tail_type = "Literal";
    }
    c.tail_name = t.tail;
    c.evidence = t.evidence;
    fact_candidates_.push_back(std::move(c));
  }

  std::vector<EventMention> mentions;
  for (const auto& e : event_candidates_) {
    EventMention m{e.trigger, e.event_type, {}, std::nullopt, e.time.value_or(""), e.evidence};
    if (e.time) m.time = TimeInterval::parse(*e.time);
    for (const auto& r : e.roles) {
      if (auto it = mention_id_.find(r.mention); it != mention_id_.end()) {
        m.roles[r.role] = {it->second, false, type_of_mention(r.mention), r.mention};
      } else {
        m.roles[r.role] = {r.mention, true, "Literal", r.mention};
      }
    }
    mentions.push_back(std::move(m));
  }
  ChatEventJudge event_judge(*sv_.chat);
  const EventSimilarityConfig ecfg{cfg_.weights, cfg_.tau_event_align};
  events_ = normalize_events_intra(mentions, *sv_.embedder, event_judge, ecfg);
  for (std::size_t n = 0; n < events_.size(); ++n) {
    events_[n].event_id = "evt:" + std::to_string(k_) + ":" + std::to_string(n);
  }
  align_events_cross(events_, mkb_, *sv_.embedder, ecfg, cross);
  for (auto& e : events_) {
    if (e.aligned_to) e.event_id = *e.aligned_to;
  }
  report_.counts["events_canonical"] = events_.size();
}

void BatchRun::govern() {
  LogicChecker logic(mkb_, graph_, k_, cfg_.logic);
  const ChatClient& judge = *sv_.chat;

  // Evidence checks are independent per candidate; logic checks then run in order.
  std::vector<std::optional<Verdict>> ev(fact_candidates_.size());
  std::vector<std::string> unavailable(fact_candidates_.size());
  parallel_for(fact_candidates_.size(), cfg_.threads, [&](std::size_t i) {
    const auto& c = fact_candidates_[i];
    try {
      ev[i] = verify_evidence(to_json(c), c.evidence.text, judge);
    } catch (const JudgeUnavailable& e) {
      unavailable[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < fact_candidates_.size(); ++i) {
    const auto& c = fact_candidates_[i];
    if (!ev[i]) {
      park("evidence", to_json(c), unavailable[i]);
      continue;
    }
    if (!ev[i]->accepted()) {
      reject("evidence", to_json(c), ev[i]->reason_code, ev[i]->rationale);
      continue;
    }
    const auto v = logic.check(c);
    if (!v.accepted()) {
      reject("logic", to_json(c), v.reason_code, v.rationale);
      continue;
    }
    logic.admit(c);
    accepted_.push_back({c.head, c.relation, c.tail, c.evidence, c.head_type, c.tail_type, false});
  }

  for (auto& e : events_) {
    json cand = to_json(e);
    cand["kind"] = "event";
    try {
      const auto v = verify_evidence(cand, joined_evidence(e.evidence), judge);
      if (!v.accepted()) {
        reject("evidence", cand, v.reason_code, v.rationale);
        continue;
      }
    } catch (const JudgeUnavailable& ex) {
      park("evidence", cand, ex.what());
      continue;
    }
    const auto v = logic.check(e);
    if (!v.accepted()) {
      reject("logic", cand, v.reason_code, v.rationale);
      continue;
    }

    IntentLabel intent;
    if (cfg_.enable_intent) {
      intent = classify_intent(e, judge, cfg_.intent_lexicon);
    } else {
      intent.rationale = "intent assessment disabled";
    }
    if (intent.judge_unavailable) report_.warnings.push_back(e.event_id + ": intent judge unavailable, kept Informational");
    report_.intents.push_back({{"event_id", e.event_id},
                               {"intent", to_string(intent.intent)},
                               {"targets", intent.targeted_entity_ids},
                               {"rationale", intent.rationale}});

    const Evidence first = e.evidence.empty() ? Evidence{} : e.evidence.front();
    if (intent.intent == Intent::Evolutionary) {
      for (const auto& s : successor_facts(e, intent)) {
        FactCandidate c{s.head, name_of(s.head), "", s.relation, s.tail, s.tail_name,
                        s.tail.is_entity() ? "Entity" : "Literal", first};
        if (auto it = e.roles.find("target"); it != e.roles.end() && it->second.value == s.head) c.head_type = it->second.type;
        const auto lv = logic.check(c);
        if (!lv.accepted()) {
          reject("logic", to_json(c), lv.reason_code, lv.rationale);
          continue;
        }
        logic.admit(c);
        accepted_.push_back({c.head, c.relation, c.tail, c.evidence, c.head_type, c.tail_type, false});
      }
      const auto targets = resolve_deprecation_targets(e, intent, graph_, *sv_.embedder, cfg_.tau_target);
      if (targets.empty()) report_.empty_targets.push_back(e.event_id);
      for (const auto& d : targets) deprecations_.try_emplace(d.edge_id, d);
    } else {
      std::optional<EventSchema> schema;
      if (k_ > 0) schema = mkb_.event_schema_by_type(e.event_type);
      RelationalizedEvent r;
      try {
        r = relationalize_event(e, k_, schema ? &*schema : nullptr);
      } catch (const MissingRequiredRole& ex) {
        reject("logic", cand, "missing_required_role", ex.what());
        continue;
      }
      if (!graph_.entities.contains(r.node.entity_id)) nodes_.emplace(r.node.entity_id, r.node);
      for (const auto& f : r.facts) {
        accepted_.push_back({f.head, f.relation, f.tail, first, kEventEntityType,
                             f.tail.is_entity() ? "Entity" : "Literal", true});
      }
    }
    accepted_events_.push_back(&e);
  }
}

KnowledgeIncrement BatchRun::assemble() {
  std::map<std::string, FactEdge> added;
  std::map<std::string, Reaffirmation> reaffirmed;
  std::set<std::string> conflicted;
  for (const auto& a : accepted_) {
    const auto id = make_edge_id(a.head, a.relation, a.tail);
    if (auto old = graph_.edges.find(id); old != graph_.edges.end()) {
      if (old->second.status == EdgeStatus::Active) {
        auto& r = reaffirmed[id];
        r.edge_id = id;
        add_evidence(r.evidence, a.evidence);
      } else if (conflicted.insert(id).second) {
        report_.conflicts.push_back({{"edge_id", id}, {"kind", "reasserts_deprecated"}, {"evidence", to_json(a.evidence)}});
      }
      continue;
    }
    auto [it, fresh] = added.try_emplace(id);
    if (fresh) {
      it->second = make_fact(a.head, a.relation, a.tail, {a.evidence}, k_);
    } else {
      add_evidence(it->second.evidence, a.evidence);
    }
  }
  for (const auto& [id, d] : deprecations_) {
    if (reaffirmed.erase(id)) {
      report_.conflicts.push_back({{"edge_id", id}, {"kind", "deprecated_and_reaffirmed"}, {"evidence", to_json(d.evidence)}});
    }
  }

  KnowledgeIncrement inc;
  inc.batch_index = k_;
  std::set<std::string> referenced;
  for (auto& [id, f] : added) {
    referenced.insert(f.head);
    if (f.tail.is_entity()) referenced.insert(f.tail.value);
    inc.new_facts.push_back(std::move(f));
  }
  for (const auto& id : referenced) {
    if (graph_.entities.contains(id)) continue;
    auto n = nodes_.find(id);
    if (n == nodes_.end()) throw Error("fact references unresolved entity " + id);
    inc.new_entities.push_back(n->second);
  }
  for (auto& [id, r] : reaffirmed) inc.reaffirmations.push_back(std::move(r));
  for (auto& [id, d] : deprecations_) inc.deprecations.push_back(d);
  return inc;
}

MetaKnowledgeBase BatchRun::evolve(const KnowledgeIncrement& inc) {
  MetaKnowledgeBase next = mkb_;
  const auto induction = cfg_.induction();
  std::vector<RelationMember> rel;
  for (const auto& a : accepted_) {
    if (a.from_event) continue;
    rel.push_back({make_edge_id(a.head, a.relation, a.tail), a.relation, a.head,
                   a.tail.value, a.head_type, a.tail.is_entity() ? a.tail_type : "Literal"});
  }
  std::vector<EventMember> evt;
  for (const auto* e : accepted_events_) {
    EventMember m{e->event_id, text::lemmatize(e->trigger), e->event_type, {}};
    for (const auto& [role, arg] : e->roles) m.role_types[role] = arg.literal ? "Literal" : arg.type;
    evt.push_back(std::move(m));
  }
  auto promoted = apply_induction(
      next, induce_relation_schemas(rel, next, *sv_.embedder, *sv_.evaluator, induction, k_));
  auto promoted_events = apply_induction(
      next, induce_event_schemas(evt, next, *sv_.embedder, *sv_.evaluator, induction, k_));
  promoted.insert(promoted.end(), promoted_events.begin(), promoted_events.end());
  report_.schemas_promoted = promoted;
  for (const auto& p : next.proposals()) {
    if (p.status == ProposalStatus::Pending) report_.proposals_pending.push_back(p.proposal_id);
  }

  std::vector<FactEdge> touched = inc.new_facts;
  for (const auto& r : inc.reaffirmations) touched.push_back(graph_.edges.at(r.edge_id));
  std::map<std::string, EntityNode> all_nodes = graph_.entities;
  for (const auto& n : inc.new_entities) all_nodes.emplace(n.entity_id, n);
  update_entity_profiles(touched, all_nodes, aliases_, parents_, next, *sv_.embedder, k_);

  for (const auto* e : accepted_events_) {
    if (e->aligned_to) continue;
    IndexedEvent ie{e->event_id, e->trigger, e->event_type, {}, e->time,
                    sv_.embedder->embed_one(text::lemmatize(e->trigger)), k_};
    for (const auto& [role, arg] : e->roles) ie.roles[role] = arg.value;
    next.register_event(ie);
  }
  return next;
}

}  // namespace

PipelineConfig PipelineConfig::defaults() {
  PipelineConfig c;
  c.template_dir = std::filesystem::path(DIALKG_SOURCE_DIR) / "templates";
  return c;
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig c = defaults();
  try {
    reject_unknown(j,
                   {"tau_cluster", "tau_coherence", "tau_target", "tau_event_align", "theta", "retrieval_k",
                    "required_role_ratio", "weights", "entity_candidates", "enable_intent", "enable_events",
                    "enable_coref", "logic", "intent_lexicon", "template_dir", "backend", "report_timing", "threads"},
                   "");
    take(j, "tau_cluster", c.tau_cluster);
    take(j, "tau_coherence", c.tau_coherence);
    take(j, "tau_target", c.tau_target);
    take(j, "tau_event_align", c.tau_event_align);
    take(j, "theta", c.theta);
    take(j, "retrieval_k", c.retrieval_k);
    take(j, "required_role_ratio", c.required_role_ratio);
    take(j, "entity_candidates", c.entity_candidates);
    take(j, "enable_intent", c.enable_intent);
    take(j, "enable_events", c.enable_events);
    take(j, "enable_coref", c.enable_coref);
    take(j, "intent_lexicon", c.intent_lexicon);
    take(j, "report_timing", c.report_timing);
    take(j, "threads", c.threads);
    if (auto it = j.find("template_dir"); it != j.end()) c.template_dir = it->get<std::string>();
    if (auto it = j.find("weights"); it != j.end()) {
      reject_unknown(*it, {"trigger", "arguments", "time"}, "weights.");
      take(*it, "trigger", c.weights.trigger);
      take(*it, "arguments", c.weights.arguments);
      take(*it, "time", c.weights.time);
    }
    if (auto it = j.find("logic"); it != j.end()) {
      reject_unknown(*it, {"irreflexive", "asymmetric"}, "logic.");
      take(*it, "irreflexive", c.logic.irreflexive);
      take(*it, "asymmetric", c.logic.asymmetric);
    }
    if (auto it = j.find("backend"); it != j.end()) {
      reject_unknown(*it,
                     {"kind", "endpoint", "model", "embedding_model", "api_key_env", "timeout_seconds", "retries",
                      "max_concurrency", "embedding_dimension", "fixtures"},
                     "backend.");
      auto& b = c.backend;
      take(*it, "kind", b.kind);
      take(*it, "endpoint", b.endpoint);
      take(*it, "model", b.model);
      take(*it, "embedding_model", b.embedding_model);
      take(*it, "api_key_env", b.api_key_env);
      take(*it, "timeout_seconds", b.timeout_seconds);
      take(*it, "retries", b.retries);
      take(*it, "max_concurrency", b.max_concurrency);
      take(*it, "embedding_dimension", b.embedding_dimension);
      if (auto f = it->find("fixtures"); f != it->end() && !f->is_null()) b.fixtures = f->get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  auto c = from_json(j);
  if (c.template_dir.is_relative() && j.contains("template_dir")) c.template_dir = path.parent_path() / c.template_dir;
  if (c.backend.fixtures && c.backend.fixtures->is_relative()) c.backend.fixtures = path.parent_path() / *c.backend.fixtures;
  return c;
}

json PipelineConfig::to_json() const {
  json backend_j = {{"kind", backend.kind},
                    {"endpoint", backend.endpoint},
                    {"model", backend.model},
                    {"embedding_model", backend.embedding_model},
                    {"api_key_env", backend.api_key_env},
                    {"timeout_seconds", backend.timeout_seconds},
                    {"retries", backend.retries},
                    {"max_concurrency", backend.max_concurrency},
                    {"embedding_dimension", backend.embedding_dimension},
                    {"fixtures", backend.fixtures ? json(backend.fixtures->string()) : json(nullptr)}};
  return {{"tau_cluster", tau_cluster},
          {"tau_coherence", tau_coherence},
          {"tau_target", tau_target},
          {"tau_event_align", tau_event_align},
          {"theta", theta},
          {"retrieval_k", retrieval_k},
          {"required_role_ratio", required_role_ratio},
          {"weights", {{"trigger", weights.trigger}, {"arguments", weights.arguments}, {"time", weights.time}}},
          {"entity_candidates", entity_candidates},
          {"enable_intent", enable_intent},
          {"enable_events", enable_events},
          {"enable_coref", enable_coref},
          {"logic", {{"irreflexive", logic.irreflexive}, {"asymmetric", logic.asymmetric}}},
          {"intent_lexicon", intent_lexicon},
          {"template_dir", template_dir.string()},
          {"backend", backend_j},
          {"report_timing", report_timing},
          {"threads", threads}};
}

void PipelineConfig::validate() const {
  induction().validate();
  for (double t : {tau_target, tau_event_align}) {
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("thresholds must lie in [0, 1]");
  }
  if (retrieval_k < 1) throw ConfigError("retrieval_k must be at least 1");
  if (weights.trigger < 0 || weights.arguments < 0 || weights.time < 0) throw ConfigError("weights must be non-negative");
  if (backend.kind != "mock" && backend.kind != "http") throw ConfigError("backend.kind must be mock or http");
  if (backend.retries < 1) throw ConfigError("backend.retries must be at least 1");
  if (backend.embedding_dimension < 1) throw ConfigError("backend.embedding_dimension must be positive");
  if (threads < 1) throw ConfigError("threads must be at least 1");
}

InductionConfig PipelineConfig::induction() const {
  return {theta, tau_coherence, tau_cluster, required_role_ratio};
}

Services Services::mock(const PipelineConfig& cfg, FixtureTable overrides) {
  Services s;
  s.embedder = std::make_shared<HashingEmbedder>(cfg.backend.embedding_dimension);
  auto prompts = std::make_shared<PromptLibrary>(PromptLibrary::load(cfg.template_dir));
  s.chat = std::make_shared<ChatClient>(std::make_shared<MockChatBackend>(std::move(overrides)), prompts);
  s.evaluator = std::make_shared<ChatSchemaEvaluator>(*s.chat);
  return s;
}

Services Services::from_config(const PipelineConfig& cfg) {
  if (cfg.backend.kind == "mock") {
    return mock(cfg, cfg.backend.fixtures ? FixtureTable::load(*cfg.backend.fixtures) : FixtureTable{});
  }
  HttpSettings http;
  http.base_url = cfg.backend.endpoint;
  http.model = cfg.backend.model;
  if (const char* key = std::getenv(cfg.backend.api_key_env.c_str())) http.api_key = key;
  http.timeout_seconds = cfg.backend.timeout_seconds;
  http.attempts = cfg.backend.retries;
  http.max_concurrency = cfg.backend.max_concurrency;
  if (http.model.empty()) throw ConfigError("backend.model is required for the http backend");
  HttpSettings emb = http;
  emb.model = cfg.backend.embedding_model.empty() ? http.model : cfg.backend.embedding_model;

  Services s;
  s.embedder = std::make_shared<HttpEmbedder>(emb, cfg.backend.embedding_dimension);
  auto prompts = std::make_shared<PromptLibrary>(PromptLibrary::load(cfg.template_dir));
  s.chat = std::make_shared<ChatClient>(std::make_shared<HttpChatBackend>(http), prompts);
  s.evaluator = std::make_shared<ChatSchemaEvaluator>(*s.chat);
  return s;
}

json BatchReport::to_json() const {
  std::vector<json> deps;
  for (const auto& d : deprecations) deps.push_back({{"edge_id", d.edge_id}, {"evidence", dialkg::to_json(d.evidence)}});
  json j = {{"batch_index", batch_index},
            {"status", status},
            {"abort_reason", abort_reason},
            {"additions", additions},
            {"deprecations", deps},
            {"new_entities", new_entities},
            {"reaffirmed", reaffirmed},
            {"rejected", rejected},
            {"pending", pending},
            {"conflicts", conflicts},
            {"skipped_documents", skipped_documents},
            {"intents", intents},
            {"empty_targets", empty_targets},
            {"schemas_promoted", schemas_promoted},
            {"proposals_pending", proposals_pending},
            {"warnings", warnings},
            {"counts", counts}};
  if (!timing_ms.empty()) j["timing_ms"] = timing_ms;
  return j;
}

BatchReport BatchReport::from_json(const json& j) {
  BatchReport r;
  try {
    r.batch_index = j.at("batch_index").get<BatchIndex>();
    r.status = j.at("status").get<std::string>();
    r.abort_reason = j.value("abort_reason", "");
    r.additions = j.at("additions").get<std::vector<std::string>>();
    for (const auto& d : j.at("deprecations")) r.deprecations.push_back({d.at("edge_id"), evidence_from_json(d.at("evidence"))});
    r.new_entities = j.value("new_entities", std::vector<std::string>{});
    r.reaffirmed = j.value("reaffirmed", std::vector<std::string>{});
    r.rejected = j.value("rejected", json::array());
    r.pending = j.value("pending", json::array());
    r.conflicts = j.value("conflicts", json::array());
    r.skipped_documents = j.value("skipped_documents", json::array());
    r.intents = j.value("intents", json::array());
    r.empty_targets = j.value("empty_targets", std::vector<std::string>{});
    r.schemas_promoted = j.value("schemas_promoted", std::vector<std::string>{});
    r.proposals_pending = j.value("proposals_pending", std::vector<std::string>{});
    r.warnings = j.value("warnings", std::vector<std::string>{});
    r.counts = j.value("counts", std::map<std::string, std::size_t>{});
    r.timing_ms = j.value("timing_ms", std::map<std::string, double>{});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed batch report: ") + e.what());
  }
  return r;
}

Pipeline::Pipeline(PipelineConfig cfg, Services services) : cfg_(std::move(cfg)), services_(std::move(services)) {
  cfg_.validate();
  if (!services_.embedder || !services_.chat) throw ConfigError("pipeline needs an embedder and a chat client");
  if (!services_.evaluator) services_.evaluator = std::make_shared<ChatSchemaEvaluator>(*services_.chat);
}

BatchResult Pipeline::process_batch(const std::vector<Document>& docs, const GraphState& graph,
                                    const MetaKnowledgeBase& mkb, FaultInjector* faults) const {
  BatchReport report;
  report.batch_index = graph.batch_index + 1;
  StageTimer timer(cfg_.report_timing, report.timing_ms);
  try {
    BatchRun run(cfg_, services_, router_, graph, mkb, report);
    run.extract(docs);
    timer.lap("extraction");
    run.normalize();
    timer.lap("normalization");
    run.govern();
    timer.lap("governance");
    auto inc = run.assemble();
    auto next_mkb = run.evolve(inc);
    timer.lap("schema_evolution");
    auto next_graph = apply_increment(graph, inc, faults);
    timer.lap("integration");

    for (const auto& f : inc.new_facts) report.additions.push_back(f.edge_id);
    report.deprecations = inc.deprecations;
    for (const auto& n : inc.new_entities) report.new_entities.push_back(n.entity_id);
    for (const auto& r : inc.reaffirmations) report.reaffirmed.push_back(r.edge_id);
    return {std::move(next_graph), std::move(next_mkb), std::move(inc), std::move(report)};
  } catch (const std::exception& e) {
    spdlog::error("batch {} aborted: {}", report.batch_index, e.what());
    report.status = "aborted";
    report.abort_reason = e.what();
    report.schemas_promoted.clear();
    report.proposals_pending.clear();
    return {graph, mkb, {}, std::move(report)};
  }
}

bool StateDir::exists() const { return std::filesystem::exists(root_ / "graph.snapshot"); }

std::pair<GraphState, MetaKnowledgeBase> StateDir::load(std::size_t dimension) const {
  GraphState g;
  MetaKnowledgeBase m(dimension);
  if (std::filesystem::exists(root_ / "graph.snapshot")) g = restore(read_file(root_ / "graph.snapshot"));
  if (std::filesystem::exists(root_ / "mkb.snapshot")) {
    m = MetaKnowledgeBase::restore(read_file(root_ / "mkb.snapshot"));
    if (m.dimension() != dimension) {
      throw DimensionMismatch("saved MKB has dimension " + std::to_string(m.dimension()) + ", embedder has " +
                              std::to_string(dimension));
    }
  }
  return {std::move(g), std::move(m)};
}

void StateDir::save(const GraphState& graph, const MetaKnowledgeBase& mkb) const {
  std::filesystem::create_directories(root_);
  write_file(root_ / "graph.snapshot", snapshot(graph));
  write_file(root_ / "mkb.snapshot", mkb.snapshot());
}

void StateDir::save_report(const BatchReport& report) const {
  std::filesystem::create_directories(root_ / "reports");
  write_file(root_ / "reports" / ("batch_" + std::to_string(report.batch_index) + ".json"),
             report.to_json().dump(2) + "\n");
}

std::optional<BatchReport> StateDir::load_report(BatchIndex k) const {
  const auto p = root_ / "reports" / ("batch_" + std::to_string(k) + ".json");
  if (!std::filesystem::exists(p)) return std::nullopt;
  return BatchReport::from_json(json::parse(read_file(p)));
}

StreamResult run_stream(const Pipeline& pipeline, const std::vector<std::filesystem::path>& windows,
                        const std::optional<StateDir>& state) {
  StreamResult out{GraphState{}, pipeline.fresh_mkb(), {}, false};
  if (state) std::tie(out.graph, out.mkb) = state->load(pipeline.services().embedder->dimension());
  for (const auto& w : windows) {
    const auto docs = load_batch(w);
    auto r = pipeline.process_batch(docs, out.graph, out.mkb);
    spdlog::info("batch {} ({}): +{} facts, -{} deprecated, {} new entities", r.report.batch_index, w.filename().string(),
                 r.report.additions.size(), r.report.deprecations.size(), r.report.new_entities.size());
    if (state) state->save_report(r.report);
    out.reports.push_back(r.report);
    if (r.report.aborted()) {
      out.aborted = true;
      break;
    }
    out.graph = std::move(r.graph);
    out.mkb = std::move(r.mkb);
    if (state) state->save(out.graph, out.mkb);
  }
  return out;
}

json export_graph(const GraphState& g) {
  json entities = json::array(), edges = json::array(), log = json::array();
  for (const auto& [id, n] : g.entities) entities.push_back(to_json(n));
  for (const auto& [id, e] : g.edges) edges.push_back(to_json(e));
  for (const auto& d : g.deprecation_log) {
    log.push_back({{"batch_index", d.batch_index}, {"edge_id", d.edge_id}, {"evidence", to_json(d.evidence)}});
  }
  return {{"batch_index", g.batch_index},
          {"entities", entities},
          {"edges", edges},
          {"deprecation_log", log},
          {"active_edges", g.active_edge_count()}};
}

json inspect(const GraphState& g, const std::string& id) {
  auto history = [&](const std::string& edge_id) {
    json out = json::array();
    for (const auto& d : g.deprecation_log) {
      if (d.edge_id == edge_id) out.push_back({{"batch_index", d.batch_index}, {"evidence", to_json(d.evidence)}});
    }
    return out;
  };
  if (auto e = g.edges.find(id); e != g.edges.end()) {
    return {{"edge", to_json(e->second)}, {"deprecation_log", history(id)}};
  }
  auto n = g.entities.find(id);
  if (n == g.entities.end()) throw Error("no entity or edge with id '" + id + "'");
  json edges = json::array();
  for (const auto& [eid, e] : g.edges) {
    if (e.head != id && !(e.tail.is_entity() && e.tail.value == id)) continue;
    json j = to_json(e);
    j["deprecation_log"] = history(eid);
    edges.push_back(std::move(j));
  }
  return {{"entity", to_json(n->second)}, {"edges", edges}};
}

}  // namespace dialkg
