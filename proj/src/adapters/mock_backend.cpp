#include "dialkg/adapters/mock_backend.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>

#include "dialkg/adapters/prompts.hpp"
#include "dialkg/tagger.hpp"
#include "dialkg/text.hpp"

namespace dialkg {

namespace mock {

namespace {

constexpr std::array<TriggerSpec, 16> kTriggers = {{
    {"deprecate", "Deprecation", "deprecator", "target", "", true, false},
    {"remove", "Removal", "remover", "target", "", true, false},
    {"replace", "Replacement", "replacement", "target", "", true, false},
    {"discontinue", "Discontinuation", "discontinuer", "target", "", true, false},
    {"retire", "Retirement", "retirer", "target", "", true, false},
    {"rename", "Renaming", "renamer", "target", "new_name", true, false},
    {"succeed", "Succession", "successor", "target", "", true, false},
    {"sunset", "Sunset", "", "target", "", true, false},
    {"eol", "EndOfLife", "", "target", "", true, true},
    {"acquire", "Acquisition", "acquirer", "acquired", "", false, false},
    {"found", "Founding", "founder", "organization", "", false, false},
    {"release", "Release", "releaser", "product", "", false, false},
    {"announce", "Announcement", "announcer", "subject", "", false, false},
    {"introduce", "Introduction", "introducer", "introduced", "recipient", false, false},
    {"create", "Creation", "creator", "creation", "", false, false},
    {"develop", "Development", "developer", "product", "", false, false},
}};

bool is_aux(std::string_view w) {
  static const std::set<std::string, std::less<>> aux = {"is", "was", "are", "were", "be", "been"};
  return aux.contains(w);
}

std::string lw(const std::vector<tagger::Token>& t, std::size_t i) { return text::lower(t[i].text); }

std::string literal_type(const std::string& mention) {
  return text::is_literal_like(mention) ? "Literal" : "";
}

}  // namespace

const TriggerSpec* trigger_spec(std::string_view lemma) {
  for (const auto& s : kTriggers) {
    if (s.lemma == lemma) return &s;
  }
  return nullptr;
}

std::vector<ParsedTriple> parse_triples(std::string_view s) {
  const auto t = tagger::tokenize(s);
  const std::size_t n = t.size();
  if (n < 3) return {};

  auto make = [&](std::size_t hb, std::size_t he, std::string rel, std::size_t tb,
                  std::size_t te) -> std::vector<ParsedTriple> {
    auto h = tagger::phrase(s, t, hb, he);
    auto tl = tagger::phrase(s, t, tb, te);
    if (!h || !tl) return {};
    ParsedTriple p{h->text, std::move(rel), tl->text, h->type_hint, tl->type_hint};
    if (p.tail_type.empty()) p.tail_type = literal_type(p.tail);
    return {p};
  };

  // "The <attr> of <X> is <Y>"
  if (lw(t, 0) == "the") {
    for (std::size_t i = 2; i + 2 < n; ++i) {
      if (lw(t, i) != "of") continue;
      for (std::size_t j = i + 2; j + 1 < n; ++j) {
        const auto w = lw(t, j);
        if (w != "is" && w != "are" && w != "was") continue;
        std::string rel;
        for (std::size_t k = 1; k < i; ++k) rel += (rel.empty() ? "" : "_") + lw(t, k);
        return make(i + 1, j, rel, j + 1, n);
      }
      break;
    }
  }
  // "<X> is a|an <Y>"
  for (std::size_t j = 1; j + 2 < n; ++j) {
    const auto w = lw(t, j);
    const auto a = lw(t, j + 1);
    if ((w == "is" || w == "was" || w == "are") && (a == "a" || a == "an")) {
      auto out = make(0, j, "is_a", j + 2, n);
      for (auto& p : out) p.tail_type = "Concept";
      return out;
    }
  }
  // "<X> <snake_case_relation> <Y>"
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const auto& w = t[j].text;
    if (w.find('_') != std::string::npos && text::lower(w) == w) return make(0, j, w, j + 1, n);
  }
  // Event-shaped sentence flattened into a binary relation.
  auto events = parse_events(s);
  if (events.empty()) return {};
  const auto& ev = events.front();
  const auto* spec = trigger_spec(text::lemmatize(ev.trigger));
  const ParsedRole* agent = nullptr;
  const ParsedRole* patient = nullptr;
  for (const auto& r : ev.roles) {
    if (spec && r.role == spec->agent_role) agent = &r;
    if (spec && r.role == spec->patient_role) patient = &r;
  }
  if (agent && patient) {
    return {ParsedTriple{agent->mention, text::lemmatize(ev.trigger), patient->mention, agent->type,
                         patient->type}};
  }
  if (patient) {
    return {ParsedTriple{patient->mention, "status", text::lower(ev.trigger), patient->type, "Literal"}};
  }
  return {};
}

std::vector<ParsedEvent> parse_events(std::string_view s) {
  const auto t = tagger::tokenize(s);
  const std::size_t n = t.size();
  std::optional<std::size_t> ti;
  for (int pass = 0; pass < 2 && !ti; ++pass) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto* spec = trigger_spec(text::lemmatize(t[i].text));
      if (spec && spec->evolutionary == (pass == 0)) {
        ti = i;
        break;
      }
    }
  }
  if (!ti) return {};
  const std::size_t k = *ti;
  const TriggerSpec& spec = *trigger_spec(text::lemmatize(t[k].text));
  const bool passive = (k >= 1 && is_aux(lw(t, k - 1))) || (k >= 2 && is_aux(lw(t, k - 2)));

  const auto before = tagger::mentions(s, t, 0, k);
  const auto after = tagger::mentions(s, t, k + 1, n);

  auto preposition = [&](const tagger::MentionPhrase& m) -> std::string {
    std::size_t j = m.tokens.first;
    while (j > k + 1) {
      --j;
      const auto w = lw(t, j);
      if (w == "the" || w == "a" || w == "an" || tagger::type_noun(w)) continue;
      return w;
    }
    return {};
  };

  const tagger::MentionPhrase* by_m = nullptr;
  const tagger::MentionPhrase* to_m = nullptr;
  const tagger::MentionPhrase* loc_m = nullptr;
  const tagger::MentionPhrase* plain = nullptr;
  for (const auto& m : after) {
    const auto p = preposition(m);
    if (p == "by") {
      if (!by_m) by_m = &m;
    } else if (p == "to") {
      if (!to_m) to_m = &m;
    } else if (p == "in" || p == "at") {
      if (!loc_m) loc_m = &m;
    } else if (!plain) {
      plain = &m;
    }
  }

  const tagger::MentionPhrase* agent = nullptr;
  const tagger::MentionPhrase* patient = nullptr;
  const tagger::MentionPhrase* last_before = before.empty() ? nullptr : &before.back();
  if (spec.nominal) {
    patient = last_before;
  } else if (passive) {
    patient = last_before;
    agent = by_m;
  } else {
    agent = last_before;
    patient = plain;
  }

  ParsedEvent ev;
  ev.trigger = t[k].text;
  ev.event_type = std::string(spec.event_type);
  std::set<std::string> used;
  auto push = [&](std::string_view role, const tagger::MentionPhrase* m) {
    if (!m || role.empty() || used.contains(m->text)) return;
    used.insert(m->text);
    ev.roles.push_back(ParsedRole{std::string(role), m->text, m->type_hint});
  };
  push(spec.agent_role, agent);
  push(spec.patient_role, patient);
  push(spec.to_role, to_m);
  push("location", loc_m);

  if (spec.evolutionary) {
    for (std::size_t a = 0; a < k; ++a) {
      if (text::lemmatize(t[a].text) != "announce") continue;
      auto pre = tagger::mentions(s, t, 0, a);
      if (!pre.empty()) push("announcer", &pre.back());
      break;
    }
  }
  for (std::size_t v = k + 1; v < n; ++v) {
    if (text::is_version(t[v].text)) {
      ev.roles.push_back(ParsedRole{"version", t[v].text, "Literal"});
      break;
    }
  }
  auto dates = tagger::find_dates(s, t);
  if (!dates.empty()) ev.time = dates.front().text;
  if (ev.roles.empty()) return {};
  return {ev};
}

}  // namespace mock

namespace {

const std::set<std::string>& evolutionary_lemmas() {
  static const std::set<std::string> s = {"deprecate", "discontinue", "eol",    "remove", "rename",
                                          "replace",   "retire",      "sunset", "succeed"};
  return s;
}

bool mentions_evolution(std::string_view evidence) {
  static const std::array<std::string_view, 11> cues = {
      "deprecat", "remov", "replac", "discontinu", "retir", "renam",
      "end of life", "end-of-life", "eol", "no longer", "sunset"};
  const std::string low = text::lower(evidence);
  return std::any_of(cues.begin(), cues.end(),
                     [&](std::string_view c) { return low.find(c) != std::string::npos; });
}

json parse_binding(const ChatRequest& req, const std::string& key) {
  auto it = req.bindings.find(key);
  if (it == req.bindings.end()) return json();
  try {
    return json::parse(it->second);
  } catch (const json::exception&) {
    return json(it->second);
  }
}

std::string binding(const ChatRequest& req, const std::string& key) {
  auto it = req.bindings.find(key);
  return it == req.bindings.end() ? std::string() : it->second;
}

// Relation labels / event types listed in a rendered schema block.
struct SchemaBlock {
  std::vector<std::string> relations;
  std::vector<std::pair<std::string, std::vector<std::string>>> events;  // type, trigger lemmas
};

SchemaBlock parse_schema_block(const std::string& block) {
  SchemaBlock out;
  for (const auto& raw : text::split(block, '\n')) {
    const auto line = text::trim(raw);
    auto w = text::words(line);
    if (w.size() < 2) continue;
    if (w[0] == "relation") {
      out.relations.push_back(w[1]);
    } else if (w[0] == "event") {
      std::vector<std::string> lemmas;
      auto open = line.find("[triggers:");
      auto close = line.find(']', open == std::string::npos ? 0 : open);
      if (open != std::string::npos && close != std::string::npos) {
        for (auto& l : text::split(line.substr(open + 10, close - open - 10), ',')) {
          lemmas.push_back(text::trim(l));
        }
      }
      out.events.emplace_back(w[1], std::move(lemmas));
    }
  }
  return out;
}

std::string title_type(const std::string& phrase) {
  auto w = text::words(phrase);
  if (w.empty()) return "Entity";
  if (auto ty = tagger::type_noun(w.back())) return *ty;
  std::string out;
  for (const auto& x : w) {
    if (!out.empty()) out += '_';
    std::string y = text::lower(x);
    y[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(y[0])));
    out += y;
  }
  return out;
}

bool types_compatible(const std::string& a, const std::string& b) {
  return a == b || a == "Entity" || b == "Entity" || a.empty() || b.empty();
}

bool roles_conflict(const json& a, const json& b) {
  if (!a.is_object() || !b.is_object()) return false;
  for (const auto& [role, value] : a.items()) {
    auto it = b.find(role);
    if (it != b.end() && *it != value) return true;
  }
  return false;
}

bool times_compatible(const json& a, const json& b) {
  if (!a.is_string() || !b.is_string()) return true;
  auto ta = TimeInterval::parse(a.get<std::string>());
  auto tb = TimeInterval::parse(b.get<std::string>());
  return !ta || !tb || ta->overlaps(*tb);
}

}  // namespace

MockChatBackend::MockChatBackend(FixtureTable overrides) : overrides_(std::move(overrides)) {}

ChatResponse MockChatBackend::send(const ChatRequest& request, const std::string&) const {
  if (auto hit = overrides_.lookup(request)) return ChatResponse{*hit, hit->dump(), {}};
  json fields = respond(request);
  return ChatResponse{fields, fields.dump(), {}};
}

json MockChatBackend::respond(const ChatRequest& req) const {
  const std::string& id = req.template_id;

  if (id == prompts::kExtractTriples) {
    const auto schemas = parse_schema_block(binding(req, "schemas"));
    json arr = json::array();
    for (auto& p : mock::parse_triples(binding(req, "document"))) {
      const std::string key = text::relation_key(p.relation);
      for (const auto& label : schemas.relations) {
        if (text::relation_key(label) == key) {
          p.relation = label;
          break;
        }
      }
      arr.push_back({{"head", p.head},
                     {"relation", p.relation},
                     {"tail", p.tail},
                     {"head_type", p.head_type},
                     {"tail_type", p.tail_type},
                     {"confidence", 1.0}});
    }
    return {{"triples", arr}};
  }

  if (id == prompts::kExtractEvents) {
    const auto schemas = parse_schema_block(binding(req, "schemas"));
    json arr = json::array();
    for (auto& e : mock::parse_events(binding(req, "document"))) {
      const std::string lemma = text::lemmatize(e.trigger);
      for (const auto& [type, lemmas] : schemas.events) {
        if (std::find(lemmas.begin(), lemmas.end(), lemma) != lemmas.end()) {
          e.event_type = type;
          break;
        }
      }
      json roles = json::array();
      for (const auto& r : e.roles) roles.push_back({{"role", r.role}, {"mention", r.mention}, {"type", r.type}});
      json ev = {{"trigger", e.trigger}, {"event_type", e.event_type}, {"roles", roles}, {"confidence", 1.0}};
      if (!e.time.empty()) ev["time"] = e.time;
      arr.push_back(std::move(ev));
    }
    return {{"events", arr}};
  }

  if (id == prompts::kInferType) {
    const std::string mention = binding(req, "mention");
    std::map<std::string, int> votes;
    for (const auto& h : text::split(binding(req, "type_hints"), ',')) {
      auto hh = text::trim(h);
      if (!hh.empty()) ++votes[hh];
    }
    if (!votes.empty()) {
      auto best = std::max_element(votes.begin(), votes.end(), [](const auto& a, const auto& b) {
        return a.second < b.second;
      });
      return {{"type", best->first}};
    }
    if (text::is_literal_like(mention)) return {{"type", "Literal"}};
    const std::string contexts = binding(req, "contexts");
    for (const auto& ctx : text::split(contexts, '\n')) {
      for (const auto& p : mock::parse_triples(ctx)) {
        if (p.relation == "is_a" && p.head == mention) return {{"type", title_type(p.tail)}};
      }
    }
    for (const auto& ctx : text::split(contexts, '\n')) {
      for (const auto& p : mock::parse_triples(ctx)) {
        if (p.relation == "is_a" && p.tail == mention) return {{"type", "Concept"}};
      }
    }
    return {{"type", "Entity"}};
  }

  if (id == prompts::kAdjudicateEntities) {
    const std::string l = binding(req, "left");
    const std::string r = binding(req, "right");
    if (text::slug(l) == text::slug(r)) return {{"verdict", "Merge"}};
    auto lw = text::words(text::lower(l));
    auto rw = text::words(text::lower(r));
    auto strict_prefix = [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
      return a.size() < b.size() && std::equal(a.begin(), a.end(), b.begin());
    };
    if (strict_prefix(lw, rw)) return {{"verdict", "Hierarchy"}, {"parent", l}};
    if (strict_prefix(rw, lw)) return {{"verdict", "Hierarchy"}, {"parent", r}};
    if (cosine(embedder_.embed_one(l), embedder_.embed_one(r)) >= 0.92) return {{"verdict", "Merge"}};
    return {{"verdict", "Separate"}};
  }

  if (id == prompts::kAlignEntity) {
    const json aliases = parse_binding(req, "aliases");
    const json candidates = parse_binding(req, "candidates");
    const std::string type = binding(req, "entity_type");
    std::set<std::string> mine;
    mine.insert(text::slug(binding(req, "mention")));
    if (aliases.is_array()) {
      for (const auto& a : aliases) mine.insert(text::slug(a.get<std::string>()));
    }
    if (candidates.is_array()) {
      for (const auto& c : candidates) {
        if (!types_compatible(type, c.value("entity_type", ""))) continue;
        bool hit = mine.contains(text::slug(c.value("canonical_name", "")));
        for (const auto& a : c.value("aliases", json::array())) hit = hit || mine.contains(text::slug(a.get<std::string>()));
        if (hit) return {{"decision", "reuse"}, {"entity_id", c.at("entity_id")}};
      }
    }
    return {{"decision", "new"}};
  }

  if (id == prompts::kAdjudicateEvents) {
    const json l = parse_binding(req, "left");
    const json r = parse_binding(req, "right");
    const bool same_trigger = text::lemmatize(l.value("trigger", "")) == text::lemmatize(r.value("trigger", ""));
    if (same_trigger && !roles_conflict(l.value("roles", json::object()), r.value("roles", json::object())) &&
        times_compatible(l.value("time", json()), r.value("time", json()))) {
      return {{"verdict", "Merge"}};
    }
    return {{"verdict", "Separate"}};
  }

  if (id == prompts::kVerifyEvidence) {
    const json c = parse_binding(req, "candidate");
    const std::string evidence = text::lower(binding(req, "evidence"));
    if (c.is_object() && c.value("kind", "") == "triple") {
      static const std::set<std::string> active_states = {"active", "available", "enabled", "ga",
                                                          "stable", "supported"};
      static const std::array<std::string_view, 6> inactive = {"deprecated",   "removed", "discontinued",
                                                               "retired", "unsupported", "disabled"};
      const std::string tail = text::lower(c.value("tail", ""));
      if (text::relation_key(c.value("relation", "")) == "status" && active_states.contains(tail)) {
        for (auto w : inactive) {
          if (evidence.find(w) != std::string::npos) {
            return {{"verdict", "contradicted"},
                    {"reason_code", "state_contradiction"},
                    {"rationale", "evidence reports the subject as " + std::string(w)}};
          }
        }
      }
      if (!tail.empty() && (evidence.find("not " + tail) != std::string::npos ||
                            evidence.find("no longer " + tail) != std::string::npos)) {
        return {{"verdict", "contradicted"}, {"reason_code", "negated"}, {"rationale", "evidence negates the tail"}};
      }
    }
    return {{"verdict", "supported"}};
  }

  if (id == prompts::kClassifyIntent) {
    const json e = parse_binding(req, "event");
    const std::string lemma = text::lemmatize(e.is_object() ? e.value("trigger", "") : "");
    if (evolutionary_lemmas().contains(lemma) || mentions_evolution(binding(req, "evidence"))) {
      return {{"intent", "Evolutionary"}, {"rationale", "state transition cue"}};
    }
    return {{"intent", "Informational"}};
  }

  if (id == prompts::kEvaluateSchema) {
    const json sc = parse_binding(req, "schema");
    if (!sc.is_object()) return {{"pass", false}};
    const std::string label = sc.value("kind", "") == "event" ? sc.value("event_type", "") : sc.value("label", "");
    const bool alpha = std::any_of(label.begin(), label.end(), [](unsigned char ch) { return std::isalpha(ch); });
    bool ok = alpha;
    if (sc.value("kind", "") == "event") {
      bool any_required = false;
      for (const auto& r : sc.value("roles", json::array())) any_required = any_required || r.value("required", false);
      ok = ok && any_required;
    }
    return {{"pass", ok}};
  }

  if (id == prompts::kJudgeAddition) {
    const json f = parse_binding(req, "fact");
    const std::string ev = binding(req, "evidence");
    const bool head = text::contains_ci(ev, f.value("head", ""));
    const bool tail = f.value("relation", "") == "rdf:type" || text::contains_ci(ev, f.value("tail", ""));
    if (head && tail) return {{"judgment", "fully_supported"}};
    if (head || tail) return {{"judgment", "partially_supported"}};
    return {{"judgment", "not_supported"}};
  }

  if (id == prompts::kJudgeDeprecation) {
    const json f = parse_binding(req, "fact");
    const std::string ev = binding(req, "evidence");
    const bool ok = !ev.empty() && text::contains_ci(ev, f.value("head", "")) && mentions_evolution(ev);
    return {{"deletion_justified", ok}, {"evidence", ev}};
  }

  throw FixtureMiss("mock backend has no rule for template '" + id + "'");
}

}  // namespace dialkg
