#include "dialkg/normalization.hpp"

#include <algorithm>
#include <numeric>

#include "dialkg/adapters/prompts.hpp"
#include "dialkg/text.hpp"

namespace dialkg {

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  // Smaller index becomes the root so results do not depend on union order.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

std::vector<std::vector<std::size_t>> groups(UnionFind& uf, std::size_t n) {
  std::map<std::size_t, std::vector<std::size_t>> by_root;
  for (std::size_t i = 0; i < n; ++i) by_root[uf.find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [root, members] : by_root) out.push_back(std::move(members));
  return out;
}

void add_unique(std::vector<std::string>& v, const std::string& s) {
  if (!s.empty() && std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

json event_json(const EventMention& e) {
  json roles = json::object();
  for (const auto& [role, arg] : e.roles) roles[role] = arg.mention.empty() ? arg.value : arg.mention;
  json j = {{"trigger", e.trigger}, {"event_type", e.event_type}, {"roles", roles}};
  if (!e.time_text.empty()) j["time"] = e.time_text;
  return j;
}

std::set<std::string> arg_values(const std::map<std::string, ResolvedArg>& roles) {
  std::set<std::string> out;
  for (const auto& [role, arg] : roles) out.insert(arg.value);
  return out;
}

bool roles_contradict(const std::map<std::string, ResolvedArg>& a, const std::map<std::string, std::string>& b) {
  for (const auto& [role, arg] : a) {
    auto it = b.find(role);
    if (it != b.end() && it->second != arg.value) return true;
  }
  return false;
}

}  // namespace

std::vector<Mention> collect_mentions(const std::vector<TripleCandidate>& triples,
                                      const std::vector<EventCandidate>& events) {
  std::map<std::string, Mention> by_text;
  auto note = [&](const std::string& surface, const std::string& hint, const std::string& context) {
    if (surface.empty()) return;
    auto& m = by_text[surface];
    m.text = surface;
    if (!hint.empty()) m.type_hints.push_back(hint);
    add_unique(m.contexts, context);
  };
  for (const auto& t : triples) {
    note(t.head, t.head_type, t.evidence.text);
    note(t.tail, t.tail_type, t.evidence.text);
  }
  for (const auto& e : events) {
    for (const auto& r : e.roles) note(r.mention, r.type, e.evidence.text);
  }
  std::vector<Mention> out;
  for (auto& [k, m] : by_text) out.push_back(std::move(m));
  return out;
}

std::string ChatEntityJudge::infer_type(const Mention& m) const {
  std::string hints;
  for (const auto& h : m.type_hints) hints += (hints.empty() ? "" : ",") + h;
  std::string contexts;
  for (const auto& c : m.contexts) contexts += c + "\n";
  const json out = chat_.call(prompts::make_request(
      prompts::kInferType, {{"mention", m.text}, {"type_hints", hints}, {"contexts", contexts}}, kJudgeTemperature));
  auto type = text::trim(out.at("type").get<std::string>());
  return type.empty() ? "Entity" : type;
}

PairDecision ChatEntityJudge::adjudicate(const std::string& a, const std::string& b, const std::string& type) const {
  const json out = chat_.call(prompts::make_request(
      prompts::kAdjudicateEntities, {{"left", a}, {"right", b}, {"entity_type", type}}, kJudgeTemperature));
  const auto v = out.at("verdict").get<std::string>();
  if (v == "Merge") return {PairVerdict::Merge, {}};
  if (v == "Hierarchy") {
    const auto parent = out.value("parent", "");
    // A Hierarchy verdict naming neither mention is unusable; treat as Separate.
    if (parent == a || parent == b) return {PairVerdict::Hierarchy, parent};
  }
  return {PairVerdict::Separate, {}};
}

AlignDecision ChatEntityJudge::align(const std::string& canonical, const std::vector<std::string>& members,
                                     const std::string& type, const std::vector<EntityProfile>& candidates) const {
  json cands = json::array();
  for (const auto& p : candidates) {
    cands.push_back({{"entity_id", p.entity_id},
                     {"canonical_name", p.canonical_name},
                     {"aliases", p.aliases},
                     {"entity_type", p.entity_type}});
  }
  const json out = chat_.call(prompts::make_request(prompts::kAlignEntity,
                                                    {{"mention", canonical},
                                                     {"aliases", json(members).dump()},
                                                     {"entity_type", type},
                                                     {"candidates", cands.dump()}},
                                                    kJudgeTemperature));
  if (out.at("decision") == "reuse") {
    const auto id = out.value("entity_id", "");
    // Only a retrieved candidate may be reused.
    for (const auto& p : candidates) {
      if (p.entity_id == id) return {id};
    }
  }
  return {};
}

bool ChatEventJudge::same_event(const json& a, const json& b) const {
  const json out = chat_.call(
      prompts::make_request(prompts::kAdjudicateEvents, {{"left", a.dump()}, {"right", b.dump()}}, kJudgeTemperature));
  return out.at("verdict") == "Merge";
}

std::string canonical_mention(const std::vector<std::string>& members) {
  return *std::min_element(members.begin(), members.end(), [](const std::string& a, const std::string& b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  });
}

EntityIntraResult normalize_entities_intra(const std::vector<Mention>& input, const Embedder& embedder,
                                           const EntityJudge& judge, double tau) {
  EntityIntraResult out;
  std::vector<Mention> mentions = input;
  std::sort(mentions.begin(), mentions.end(), [](const Mention& a, const Mention& b) { return a.text < b.text; });
  mentions.erase(std::unique(mentions.begin(), mentions.end(),
                             [](const Mention& a, const Mention& b) { return a.text == b.text; }),
                 mentions.end());

  std::vector<std::string> names;
  std::vector<std::string> types;
  for (const auto& m : mentions) {
    auto type = judge.infer_type(m);
    out.types[m.text] = type;
    if (type == "Literal") {
      out.literals[m.text] = m.text;
      continue;
    }
    names.push_back(m.text);
    types.push_back(type);
  }
  if (names.empty()) return out;

  const auto vecs = embedder.embed(names);
  UnionFind uf(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      if (types[i] != types[j]) continue;  // cross-type pairs are never adjudicated
      if (cosine(vecs[i], vecs[j]) < tau) continue;
      ++out.adjudications;
      const auto d = judge.adjudicate(names[i], names[j], types[i]);
      if (d.verdict == PairVerdict::Merge) {
        uf.unite(i, j);
      } else if (d.verdict == PairVerdict::Hierarchy) {
        const auto& child = d.parent == names[i] ? names[j] : names[i];
        out.hierarchy.push_back({child, d.parent});
      }
    }
  }
  for (const auto& g : groups(uf, names.size())) {
    MentionCluster c;
    std::vector<Embedding> member_vecs;
    for (auto i : g) {
      c.members.push_back(names[i]);
      member_vecs.push_back(vecs[i]);
    }
    std::sort(c.members.begin(), c.members.end());
    c.inferred_type = types[g.front()];
    c.canonical_mention = canonical_mention(c.members);
    c.centroid = mean_embedding(member_vecs);
    out.clusters.push_back(std::move(c));
  }
  std::sort(out.clusters.begin(), out.clusters.end(),
            [](const MentionCluster& a, const MentionCluster& b) { return a.canonical_mention < b.canonical_mention; });
  std::sort(out.hierarchy.begin(), out.hierarchy.end());
  return out;
}

std::vector<EntityAssignment> align_entities_cross(const std::vector<MentionCluster>& clusters,
                                                   const MetaKnowledgeBase& mkb, const Embedder& embedder,
                                                   const EntityJudge& judge, const CrossAlignOptions& opts,
                                                   const std::function<bool(const std::string&)>& id_taken) {
  std::vector<EntityAssignment> out(clusters.size());
  std::set<std::string> minted;
  auto taken = [&](const std::string& id) { return minted.contains(id) || (id_taken && id_taken(id)); };

  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const auto& c = clusters[i];
    if (opts.enabled) {
      std::vector<EntityProfile> candidates;
      for (auto& sp : mkb.match_entity(embedder.embed_one(c.canonical_mention), opts.candidates)) {
        candidates.push_back(std::move(sp.profile));
      }
      if (!candidates.empty()) {
        auto d = judge.align(c.canonical_mention, c.members, c.inferred_type, candidates);
        if (d.reuse_id) {
          out[i] = {*d.reuse_id, true};
          continue;
        }
      }
    }
    std::string slug = text::slug(c.canonical_mention);
    if (slug.empty()) slug = "x" + hex64(fnv1a64(c.canonical_mention)).substr(0, 8);
    std::string id = "ent:" + slug;
    if (taken(id)) {
      const std::string base = id + "~" + std::to_string(opts.batch);
      id = base;
      for (int n = 2; taken(id); ++n) id = base + "." + std::to_string(n);
    }
    minted.insert(id);
    out[i] = {id, false};
  }
  return out;
}

json to_json(const CanonicalEvent& e) {
  json roles = json::object();
  for (const auto& [role, arg] : e.roles) {
    roles[role] = {{"value", arg.value}, {"literal", arg.literal}, {"type", arg.type}, {"mention", arg.mention}};
  }
  json ev = json::array();
  for (const auto& x : e.evidence) ev.push_back(to_json(x));
  json j = {{"event_id", e.event_id},
            {"trigger", e.trigger},
            {"event_type", e.event_type},
            {"roles", roles},
            {"evidence", ev},
            {"role_conflicts", e.role_conflicts}};
  if (!e.time_text.empty()) j["time"] = e.time_text;
  if (e.aligned_to) j["aligned_to"] = *e.aligned_to;
  return j;
}

std::optional<double> event_similarity(const EventMention& a, const EventMention& b, const Embedder& embedder,
                                       const EventMatchWeights& w) {
  auto t = time_compatibility(a.time, b.time);
  if (!t) return std::nullopt;
  for (const auto& [role, arg] : a.roles) {
    auto it = b.roles.find(role);
    if (it != b.roles.end() && it->second.value != arg.value) return std::nullopt;
  }
  const double trig =
      cosine(embedder.embed_one(text::lemmatize(a.trigger)), embedder.embed_one(text::lemmatize(b.trigger)));
  return w.trigger * trig + w.arguments * argument_overlap(arg_values(a.roles), arg_values(b.roles)) + w.time * *t;
}

std::vector<CanonicalEvent> normalize_events_intra(const std::vector<EventMention>& events, const Embedder& embedder,
                                                   const EventJudge& judge, const EventSimilarityConfig& cfg) {
  UnionFind uf(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    for (std::size_t j = i + 1; j < events.size(); ++j) {
      auto s = event_similarity(events[i], events[j], embedder, cfg.weights);
      if (!s || *s < cfg.threshold) continue;
      if (judge.same_event(event_json(events[i]), event_json(events[j]))) uf.unite(i, j);
    }
  }
  std::vector<CanonicalEvent> out;
  for (const auto& g : groups(uf, events.size())) {
    CanonicalEvent c;
    const auto& first = events[g.front()];
    c.trigger = first.trigger;
    c.event_type = first.event_type;
    c.members = g;
    for (auto i : g) {
      const auto& e = events[i];
      for (const auto& [role, arg] : e.roles) {
        auto [it, fresh] = c.roles.try_emplace(role, arg);
        if (!fresh && it->second.value != arg.value &&
            std::find(c.role_conflicts.begin(), c.role_conflicts.end(), role) == c.role_conflicts.end()) {
          c.role_conflicts.push_back(role);
        }
      }
      if (!c.time && e.time) {
        c.time = e.time;
        c.time_text = e.time_text;
      }
      if (std::find(c.evidence.begin(), c.evidence.end(), e.evidence) == c.evidence.end()) {
        c.evidence.push_back(e.evidence);
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

void align_events_cross(std::vector<CanonicalEvent>& events, const MetaKnowledgeBase& mkb, const Embedder& embedder,
                        const EventSimilarityConfig& cfg, bool enabled) {
  if (!enabled) return;
  for (auto& e : events) {
    const auto trig = embedder.embed_one(text::lemmatize(e.trigger));
    for (const auto& hit : mkb.match_event(trig, arg_values(e.roles), e.time, cfg.weights)) {
      if (hit.score < cfg.threshold) break;
      auto indexed = mkb.event(hit.id);
      if (!indexed || roles_contradict(e.roles, indexed->roles)) continue;
      e.aligned_to = hit.id;
      break;
    }
  }
}

}  // namespace dialkg
