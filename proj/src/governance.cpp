#include "dialkg/governance.hpp"

#include <algorithm>
#include <map>

#include "dialkg/adapters/prompts.hpp"
#include "dialkg/text.hpp"

namespace dialkg {

namespace {

json call_judge(const ChatClient& judge, const std::string& id, std::map<std::string, std::string> bindings) {
  try {
    return judge.call(prompts::make_request(id, std::move(bindings), kJudgeTemperature));
  } catch (const BackendUnavailable& e) {
    throw JudgeUnavailable(e.what());
  }
}

json event_summary(const CanonicalEvent& e) {
  json roles = json::object();
  for (const auto& [role, arg] : e.roles) roles[role] = arg.mention.empty() ? arg.value : arg.mention;
  json j = {{"kind", "event"}, {"trigger", e.trigger}, {"event_type", e.event_type}, {"roles", roles}};
  if (!e.time_text.empty()) j["time"] = e.time_text;
  return j;
}

std::string evidence_text(const CanonicalEvent& e) {
  std::string out;
  for (const auto& ev : e.evidence) out += (out.empty() ? "" : "\n") + ev.text;
  return out;
}

}  // namespace

json to_json(const FactCandidate& c) {
  return {{"kind", "triple"},
          {"head", c.head_name},
          {"head_id", c.head},
          {"relation", c.relation},
          {"tail", c.tail_name},
          {"tail_kind", c.tail.is_entity() ? "entity" : "literal"},
          {"tail_value", c.tail.value},
          {"evidence", to_json(c.evidence)}};
}

Verdict verify_evidence(const json& candidate, const std::string& evidence_text, const ChatClient& judge) {
  const json out = call_judge(judge, prompts::kVerifyEvidence, {{"candidate", candidate.dump()}, {"evidence", evidence_text}});
  const auto v = out.at("verdict").get<std::string>();
  if (v == "contradicted") {
    auto code = out.value("reason_code", "");
    return Verdict::reject(code.empty() ? "contradiction" : code, out.value("rationale", ""));
  }
  return Verdict::accept(v == "unsupported" ? "conservatively accepted: evidence is silent" : out.value("rationale", ""));
}

bool type_satisfies(const std::string& actual, const std::string& constraint) {
  if (constraint.empty() || constraint == "Entity") return true;
  if (actual.empty() || actual == "Entity") return true;
  return actual == constraint;
}

LogicChecker::LogicChecker(const MetaKnowledgeBase& mkb, const GraphState& graph, BatchIndex batch,
                           const LogicConfig& cfg)
    : mkb_(mkb), graph_(graph), batch_(batch) {
  for (const auto& r : cfg.irreflexive) irreflexive_.insert(text::normalize_relation_label(r));
  for (const auto& r : cfg.asymmetric) asymmetric_.insert(text::normalize_relation_label(r));
  for (const auto& s : mkb.relation_schemas()) {
    const auto label = text::normalize_relation_label(s.relation_label);
    if (s.properties.irreflexive) irreflexive_.insert(label);
    if (s.properties.anti_symmetric) asymmetric_.insert(label);
  }
}

bool LogicChecker::is_irreflexive(const std::string& rel) const {
  return irreflexive_.contains(text::normalize_relation_label(rel));
}

bool LogicChecker::is_asymmetric(const std::string& rel) const {
  return asymmetric_.contains(text::normalize_relation_label(rel));
}

void LogicChecker::admit(const FactCandidate& c) { batch_edges_.insert(c.edge_id()); }

Verdict LogicChecker::check(const FactCandidate& c) const {
  if (c.tail.is_entity() && c.tail.value == c.head && is_irreflexive(c.relation)) {
    return Verdict::reject("self_loop", "'" + c.relation + "' is irreflexive");
  }
  if (c.tail.is_entity() && is_asymmetric(c.relation)) {
    const auto inverse = make_edge_id(c.tail.value, c.relation, Tail::entity(c.head));
    auto it = graph_.edges.find(inverse);
    if (batch_edges_.contains(inverse) || (it != graph_.edges.end() && it->second.status == EdgeStatus::Active)) {
      return Verdict::reject("inverse_conflict", "'" + c.relation + "' is asymmetric and the inverse holds");
    }
  }
  if (batch_ <= 0) return Verdict::accept();

  const auto key = text::relation_key(c.relation);
  for (const auto& s : mkb_.relation_schemas()) {
    if (text::relation_key(s.relation_label) != key) continue;
    if (!type_satisfies(c.head_type, s.domain_type)) {
      return Verdict::reject("domain_violation",
                             c.head_name + " is " + c.head_type + ", '" + s.relation_label + "' needs " + s.domain_type);
    }
    const std::string tail_type = c.tail.is_entity() ? c.tail_type : "Literal";
    if (!type_satisfies(tail_type, s.range_type)) {
      return Verdict::reject("range_violation",
                             c.tail_name + " is " + tail_type + ", '" + s.relation_label + "' needs " + s.range_type);
    }
    return Verdict::accept("schema " + s.schema_id);
  }
  Verdict v = Verdict::accept("no matching schema");
  v.route_to_induction = true;
  return v;
}

Verdict LogicChecker::check(const CanonicalEvent& e) const {
  if (!e.role_conflicts.empty()) {
    return Verdict::reject("role_conflict", "conflicting fillers for role '" + e.role_conflicts.front() + "'");
  }
  if (batch_ <= 0) return Verdict::accept();
  auto schema = mkb_.event_schema_by_type(e.event_type);
  if (!schema) {
    Verdict v = Verdict::accept("no matching schema");
    v.route_to_induction = true;
    return v;
  }
  for (const auto& spec : schema->roles) {
    auto it = e.roles.find(spec.name);
    if (it == e.roles.end()) {
      if (spec.required) return Verdict::reject("missing_required_role", "role '" + spec.name + "' is unbound");
      continue;
    }
    const std::string actual = it->second.literal ? "Literal" : it->second.type;
    if (!type_satisfies(actual, spec.type)) {
      const auto& who = it->second.mention.empty() ? it->second.value : it->second.mention;
      return Verdict::reject("role_type_violation",
                             spec.name + " = " + who + " (" + actual + ") but " + e.event_type + " requires " + spec.type);
    }
  }
  return Verdict::accept("schema " + schema->schema_id);
}

std::string_view to_string(Intent i) { return i == Intent::Evolutionary ? "Evolutionary" : "Informational"; }

std::vector<std::string> targeted_entities(const CanonicalEvent& e) {
  std::vector<std::string> out;
  if (auto it = e.roles.find("target"); it != e.roles.end() && !it->second.literal) return {it->second.value};
  for (const auto& [role, arg] : e.roles) {
    if (!arg.literal && std::find(out.begin(), out.end(), arg.value) == out.end()) out.push_back(arg.value);
  }
  return out;
}

IntentLabel classify_intent(const CanonicalEvent& e, const ChatClient& judge, const std::set<std::string>& lexicon) {
  IntentLabel label;
  const auto lemma = text::lemmatize(e.trigger);
  if (lexicon.contains(lemma)) {
    label.intent = Intent::Evolutionary;
    label.triggers_matched = {lemma};
    label.rationale = "trigger lexicon";
  } else {
    try {
      const json out = call_judge(judge, prompts::kClassifyIntent,
                                  {{"event", event_summary(e).dump()}, {"evidence", evidence_text(e)}});
      label.intent = out.at("intent") == "Evolutionary" ? Intent::Evolutionary : Intent::Informational;
      label.rationale = out.value("rationale", "");
    } catch (const JudgeUnavailable& ex) {
      label.intent = Intent::Informational;
      label.judge_unavailable = true;
      label.rationale = ex.what();
    }
  }
  if (label.intent == Intent::Evolutionary) label.targeted_entity_ids = targeted_entities(e);
  return label;
}

StateTransition state_transition(std::string_view lemma) {
  static const std::map<std::string, StateTransition, std::less<>> table = {
      {"deprecate", {"status", "deprecated", "", ""}},
      {"discontinue", {"status", "discontinued", "", ""}},
      {"eol", {"status", "end_of_life", "", ""}},
      {"remove", {"status", "removed", "", ""}},
      {"rename", {"status", "renamed", "renamed_to", "new_name"}},
      {"replace", {"status", "replaced", "replaced_by", "replacement"}},
      {"retire", {"status", "retired", "", ""}},
      {"succeed", {"status", "succeeded", "succeeded_by", "successor"}},
      {"sunset", {"status", "sunset", "", ""}},
  };
  if (auto it = table.find(lemma); it != table.end()) return it->second;
  return {"status", text::slug(lemma), "", ""};
}

std::vector<SuccessorFact> successor_facts(const CanonicalEvent& e, const IntentLabel& intent) {
  std::vector<SuccessorFact> out;
  if (intent.intent != Intent::Evolutionary) return out;
  const auto st = state_transition(text::lemmatize(e.trigger));
  const ResolvedArg* successor = nullptr;
  if (!st.successor_role.empty()) {
    if (auto it = e.roles.find(st.successor_role); it != e.roles.end()) successor = &it->second;
  }
  for (const auto& target : intent.targeted_entity_ids) {
    out.push_back({target, st.property, Tail::literal(st.value), st.value});
    if (successor && successor->value != target) {
      const auto& name = successor->mention.empty() ? successor->value : successor->mention;
      out.push_back({target, st.successor_relation,
                     successor->literal ? Tail::literal(successor->value) : Tail::entity(successor->value), name});
    }
  }
  return out;
}

std::vector<Deprecation> resolve_deprecation_targets(const CanonicalEvent& e, const IntentLabel& intent,
                                                     const GraphState& previous, const Embedder& embedder,
                                                     double tau_target) {
  std::vector<Deprecation> out;
  if (intent.intent != Intent::Evolutionary || e.evidence.empty()) return out;
  const auto st = state_transition(text::lemmatize(e.trigger));
  const auto property = embedder.embed_one(text::relation_key(st.property));
  std::set<std::string> successors;
  for (const auto& s : successor_facts(e, intent)) successors.insert(make_edge_id(s.head, s.relation, s.tail));

  std::set<std::string> seen;
  for (const auto& entity : intent.targeted_entity_ids) {
    for (const auto& edge : active_facts(previous, entity)) {
      if (successors.contains(edge.edge_id) || seen.contains(edge.edge_id)) continue;
      const double sim = cosine(property, embedder.embed_one(text::relation_key(edge.relation)));
      if (sim < tau_target) continue;
      seen.insert(edge.edge_id);
      out.push_back({edge.edge_id, e.evidence.front()});
    }
  }
  std::sort(out.begin(), out.end(), [](const Deprecation& a, const Deprecation& b) { return a.edge_id < b.edge_id; });
  return out;
}

}  // namespace dialkg
