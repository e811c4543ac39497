#include <doctest.h>

#include <random>

#include "support.hpp"

using namespace dialkg;

namespace {

/// Merges pairs listed in `merges`; types come from a fixed table.
class TableJudge final : public EntityJudge {
 public:
  std::map<std::string, std::string> types;
  std::set<std::pair<std::string, std::string>> merges;
  std::optional<std::pair<std::string, std::string>> hierarchy;  // child, parent
  std::optional<std::string> reuse;
  mutable int adjudications = 0;
  mutable int aligns = 0;

  std::string infer_type(const Mention& m) const override {
    auto it = types.find(m.text);
    return it == types.end() ? "Entity" : it->second;
  }
  PairDecision adjudicate(const std::string& a, const std::string& b, const std::string&) const override {
    ++adjudications;
    if (merges.contains({a, b}) || merges.contains({b, a})) return {PairVerdict::Merge, {}};
    if (hierarchy && ((hierarchy->first == a && hierarchy->second == b) || (hierarchy->first == b && hierarchy->second == a))) {
      return {PairVerdict::Hierarchy, hierarchy->second};
    }
    return {PairVerdict::Separate, {}};
  }
  AlignDecision align(const std::string&, const std::vector<std::string>&, const std::string&,
                      const std::vector<EntityProfile>& candidates) const override {
    ++aligns;
    if (reuse) {
      for (const auto& c : candidates) {
        if (c.entity_id == *reuse) return {*reuse};
      }
    }
    return {};
  }
};

class AlwaysSame final : public EventJudge {
 public:
  bool same_event(const json&, const json&) const override { return true; }
};

std::vector<Mention> mentions(std::initializer_list<const char*> names) {
  std::vector<Mention> out;
  for (auto n : names) out.push_back({n, {}, {}});
  return out;
}

ResolvedArg ent(const std::string& id) { return {id, false, "Organization", id}; }

EventMention acquisition(const std::string& acquirer, const std::string& acquired, const char* when) {
  EventMention e;
  e.trigger = "acquired";
  e.event_type = "Acquisition";
  e.roles = {{"acquirer", ent(acquirer)}, {"acquired", ent(acquired)}};
  if (when) {
    e.time = TimeInterval::parse(when);
    e.time_text = when;
  }
  e.evidence = testing::ev(acquirer + " acquired " + acquired);
  return e;
}

}  // namespace

TEST_CASE("canonical mention is the longest, ties lexicographic") {
  CHECK(canonical_mention({"K8s", "Kubernetes"}) == "Kubernetes");
  CHECK(canonical_mention({"abc", "abd", "ab"}) == "abc");
}

TEST_CASE("mentions are collected once with their hints") {
  TripleCandidate t{"Google", "acquired", "Fitbit", "Organization", "Organization", testing::ev("s1"), 1};
  EventCandidate e{"acquired", "Acquisition", {{"acquirer", "Google", "Organization"}}, "2021", testing::ev("s2"), 1};
  const auto ms = collect_mentions({t}, {e});
  REQUIRE(ms.size() == 2);
  CHECK(ms[0].text == "Fitbit");
  CHECK(ms[1].text == "Google");
  CHECK(ms[1].type_hints.size() == 2);
  CHECK(ms[1].contexts == std::vector<std::string>{"s1", "s2"});
}

TEST_CASE("literals are set aside and cross-type pairs are never compared") {
  HashingEmbedder emb;
  TableJudge judge;
  judge.types = {{"2021", "Literal"}, {"Apple", "Organization"}, {"apple", "Food"}};
  judge.merges = {{"Apple", "apple"}};
  const auto r = normalize_entities_intra(mentions({"2021", "Apple", "apple"}), emb, judge, 0.0);
  CHECK(r.literals.contains("2021"));
  CHECK(r.clusters.size() == 2);
  CHECK(judge.adjudications == 0);
}

TEST_CASE("merge verdicts close transitively; below-threshold pairs skip the judge") {
  HashingEmbedder emb;
  TableJudge judge;
  judge.merges = {{"Kubernetes", "Kubernetes v1"}, {"Kubernetes v1", "Kubernetes API"}};
  const auto r = normalize_entities_intra(mentions({"Kubernetes", "Kubernetes v1", "Kubernetes API", "Fitbit"}), emb,
                                          judge, 0.3);
  REQUIRE(r.clusters.size() == 2);
  const auto& big = r.clusters[0].members.size() == 3 ? r.clusters[0] : r.clusters[1];
  CHECK(big.members == std::vector<std::string>{"Kubernetes", "Kubernetes API", "Kubernetes v1"});
  CHECK(big.canonical_mention == "Kubernetes API");
  CHECK(r.adjudications == static_cast<std::size_t>(judge.adjudications));
  CHECK(r.adjudications < 6);
}

TEST_CASE("hierarchy verdicts keep both clusters and record the link") {
  HashingEmbedder emb;
  TableJudge judge;
  judge.hierarchy = {{"Kubernetes Scheduler", "Kubernetes"}};
  const auto r = normalize_entities_intra(mentions({"Kubernetes", "Kubernetes Scheduler"}), emb, judge, 0.0);
  CHECK(r.clusters.size() == 2);
  REQUIRE(r.hierarchy.size() == 1);
  CHECK(r.hierarchy[0] == HierarchyLink{"Kubernetes Scheduler", "Kubernetes"});
}

TEST_CASE("clustering matches a union-find oracle on random merge sets") {
  HashingEmbedder emb;
  std::mt19937 rng(17);
  const std::vector<std::string> pool = {"a1", "a2", "a3", "b1", "b2", "c1", "c2", "d"};
  for (int trial = 0; trial < 50; ++trial) {
    TableJudge judge;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      for (std::size_t j = i + 1; j < pool.size(); ++j) {
        if (rng() % 5 == 0) judge.merges.insert({pool[i], pool[j]});
      }
    }
    // Oracle: repeated relaxation of component labels.
    std::map<std::string, std::string> label;
    for (const auto& p : pool) label[p] = p;
    for (bool changed = true; changed;) {
      changed = false;
      for (const auto& [a, b] : judge.merges) {
        const auto m = std::min(label[a], label[b]);
        if (label[a] != m || label[b] != m) {
          label[a] = label[b] = m;
          changed = true;
        }
      }
    }
    std::set<std::set<std::string>> expect;
    std::map<std::string, std::set<std::string>> comp;
    for (const auto& [p, l] : label) comp[l].insert(p);
    for (auto& [l, s] : comp) expect.insert(s);

    std::vector<Mention> ms;
    for (const auto& p : pool) ms.push_back({p, {}, {}});
    const auto r = normalize_entities_intra(ms, emb, judge, -1.0);
    std::set<std::set<std::string>> got;
    for (const auto& c : r.clusters) got.insert({c.members.begin(), c.members.end()});
    CHECK(got == expect);
  }
}

TEST_CASE("cross-batch alignment reuses confirmed profiles and mints collision-free ids") {
  HashingEmbedder emb;
  MetaKnowledgeBase mkb;
  EntityProfile p;
  p.entity_id = "ent:google";
  p.canonical_name = "Google";
  p.aliases = {"Google"};
  p.entity_type = "Organization";
  p.embedding = emb.embed_one("Google");
  mkb.upsert_entity_profile(p);

  MentionCluster google{{"Google"}, emb.embed_one("Google"), "Organization", "Google"};
  MentionCluster other{{"Google"}, emb.embed_one("Google"), "Fruit", "Google"};
  TableJudge judge;
  judge.reuse = "ent:google";
  const auto taken = [](const std::string& id) { return id == "ent:google"; };

  SUBCASE("confirmed reuse") {
    const auto a = align_entities_cross({google}, mkb, emb, judge, {true, 5, 3}, taken);
    CHECK(a[0].entity_id == "ent:google");
    CHECK(a[0].reused);
  }
  SUBCASE("disabled alignment never consults the judge") {
    const auto a = align_entities_cross({google, other}, mkb, emb, judge, {false, 5, 3}, taken);
    CHECK(judge.aligns == 0);
    CHECK(a[0].entity_id == "ent:google~3");
    CHECK(a[1].entity_id == "ent:google~3.2");
    CHECK_FALSE(a[0].reused);
  }
  SUBCASE("judge declines") {
    judge.reuse.reset();
    const auto a = align_entities_cross({google}, mkb, emb, judge, {true, 5, 1}, taken);
    CHECK(a[0].entity_id == "ent:google~1");
  }
}

TEST_CASE("event similarity gates on time and role agreement") {
  HashingEmbedder emb;
  const EventMatchWeights w;
  const auto a = acquisition("ent:google", "ent:fitbit", "2021");
  CHECK(*event_similarity(a, acquisition("ent:google", "ent:fitbit", "2021-11"), emb, w) == doctest::Approx(1.0));
  CHECK_FALSE(event_similarity(a, acquisition("ent:google", "ent:fitbit", "2019"), emb, w).has_value());
  CHECK_FALSE(event_similarity(a, acquisition("ent:google", "ent:nest", "2021"), emb, w).has_value());
  CHECK(*event_similarity(a, acquisition("ent:google", "ent:fitbit", nullptr), emb, w) ==
        doctest::Approx(w.trigger + w.arguments + 0.5 * w.time));
}

TEST_CASE("intra-batch event merge unions roles and evidence") {
  HashingEmbedder emb;
  auto a = acquisition("ent:google", "ent:fitbit", nullptr);
  auto b = acquisition("ent:google", "ent:fitbit", "2021");
  b.evidence = testing::ev("other sentence");
  auto c = acquisition("ent:oracle", "ent:cerner", "2022");
  const auto out = normalize_events_intra({a, b, c}, emb, AlwaysSame{});
  REQUIRE(out.size() == 2);
  CHECK(out[0].members == std::vector<std::size_t>{0, 1});
  CHECK(out[0].evidence.size() == 2);
  CHECK(out[0].time_text == "2021");
  CHECK(out[0].role_conflicts.empty());
}

TEST_CASE("cross-batch event alignment respects role contradictions") {
  HashingEmbedder emb;
  MetaKnowledgeBase mkb;
  mkb.register_event({"evt:0:0", "acquired", "Acquisition", {{"acquirer", "ent:google"}, {"acquired", "ent:fitbit"}},
                      TimeInterval::parse("2021"), emb.embed_one("acquire"), 0});
  auto same = normalize_events_intra({acquisition("ent:google", "ent:fitbit", "2021")}, emb, AlwaysSame{});
  auto other = normalize_events_intra({acquisition("ent:google", "ent:nest", "2021")}, emb, AlwaysSame{});
  align_events_cross(same, mkb, emb, {}, true);
  align_events_cross(other, mkb, emb, {}, true);
  CHECK(same[0].aligned_to == "evt:0:0");
  CHECK_FALSE(other[0].aligned_to.has_value());
  auto off = normalize_events_intra({acquisition("ent:google", "ent:fitbit", "2021")}, emb, AlwaysSame{});
  align_events_cross(off, mkb, emb, {}, false);
  CHECK_FALSE(off[0].aligned_to.has_value());
}
