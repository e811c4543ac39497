#include <doctest.h>

#include "support.hpp"

using namespace dialkg;

namespace {

const HashingEmbedder kEmb;
const FixedEvaluator kPass(true);

std::vector<RelationMember> members(const std::string& relation, int n, int offset = 0) {
  std::vector<RelationMember> out;
  for (int i = 0; i < n; ++i) {
    const auto s = std::to_string(i + offset);
    out.push_back({"f:" + relation + s, relation, "ent:h" + s, "ent:t" + s, "Organization", "Organization"});
  }
  return out;
}

EventMember acquisition(int i, bool with_price) {
  EventMember m{"evt:0:" + std::to_string(i), "acquire", "Acquisition",
                {{"acquirer", "Organization"}, {"acquired", "Organization"}}};
  if (with_price) m.role_types["price"] = "Literal";
  return m;
}

const SchemaProposal* find(const InductionOutcome& o, const std::string& id) {
  for (const auto& p : o.proposals) {
    if (p.proposal_id == id) return &p;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("majority type falls back to Entity on ties or silence") {
  CHECK(majority_type({"Person", "Person", "Organization"}) == "Person");
  CHECK(majority_type({"Person", "Organization"}) == "Entity");
  CHECK(majority_type({}) == "Entity");
  CHECK(majority_type({"", ""}) == "Entity");
}

TEST_CASE("support threshold boundary") {
  InductionConfig cfg;
  MetaKnowledgeBase mkb;
  SUBCASE("theta - 1 stays pending") {
    const auto o = induce_relation_schemas(members("located_in", 2), mkb, kEmb, kPass, cfg, 0);
    REQUIRE(o.proposals.size() == 1);
    CHECK(o.proposals[0].status == ProposalStatus::Pending);
    CHECK(o.proposals[0].reason == "below_support");
  }
  SUBCASE("exactly theta is promoted") {
    const auto o = induce_relation_schemas(members("located_in", 3), mkb, kEmb, kPass, cfg, 0);
    REQUIRE(o.proposals.size() == 1);
    CHECK(o.proposals[0].status == ProposalStatus::Promoted);
    CHECK(o.proposals[0].support_count == 3);
  }
  SUBCASE("the evaluator can veto") {
    const auto o = induce_relation_schemas(members("located_in", 3), mkb, kEmb, FixedEvaluator(false), cfg, 0);
    CHECK(o.proposals[0].reason == "evaluator_rejected");
  }
}

TEST_CASE("pending support accumulates across batches") {
  InductionConfig cfg;
  MetaKnowledgeBase mkb;
  auto o1 = induce_relation_schemas(members("located_in", 2), mkb, kEmb, kPass, cfg, 0);
  CHECK(apply_induction(mkb, o1).empty());
  REQUIRE(mkb.proposals().size() == 1);
  auto o2 = induce_relation_schemas(members("located_in", 1, 10), mkb, kEmb, kPass, cfg, 1);
  const auto label = text::normalize_relation_label("located_in");
  CHECK(o2.consumed == std::vector<std::string>{"prop:rel:" + label});
  CHECK(apply_induction(mkb, o2) == std::vector<std::string>{"rs:" + label});
  REQUIRE(mkb.relation_schema_by_label(label));
  CHECK(mkb.relation_schema_by_label(label)->support_count == 3);
  REQUIRE(mkb.proposals().size() == 1);
  CHECK(mkb.proposals()[0].status == ProposalStatus::Promoted);
}

TEST_CASE("surface variants of one relation form a single cluster") {
  auto ms = members("acquired_by", 2);
  auto more = members("acquisition_of", 2, 5);
  ms.insert(ms.end(), more.begin(), more.end());
  auto unrelated = members("founded_in", 1, 9);
  ms.insert(ms.end(), unrelated.begin(), unrelated.end());
  MetaKnowledgeBase mkb;
  const auto o = induce_relation_schemas(ms, mkb, kEmb, kPass, {}, 0);
  REQUIRE(o.proposals.size() == 2);
  const auto& big = o.proposals[0].support_count == 4 ? o.proposals[0] : o.proposals[1];
  CHECK(big.support_count == 4);
  CHECK(big.coherence == doctest::Approx(1.0));
  CHECK(big.status == ProposalStatus::Promoted);
  CHECK(std::get<RelationSchema>(big.candidate).domain_type == "Organization");
}

TEST_CASE("clusters matching an existing schema bump its support instead") {
  MetaKnowledgeBase mkb;
  apply_induction(mkb, induce_relation_schemas(members("part_of", 3), mkb, kEmb, kPass, {}, 0));
  const auto o = induce_relation_schemas(members("part_of", 2, 7), mkb, kEmb, kPass, {}, 1);
  REQUIRE(o.proposals.size() == 1);
  CHECK(o.proposals[0].status == ProposalStatus::Rejected);
  CHECK(o.proposals[0].reason == "merged_into_existing:rs:part_of");
  apply_induction(mkb, o);
  CHECK(mkb.relation_schema_by_label("part_of")->support_count == 5);
  CHECK(mkb.schema_count() == 1);
}

TEST_CASE("symmetric property needs two pairs seen both ways") {
  std::vector<RelationMember> ms = {
      {"f:1", "partner_of", "ent:a", "ent:b", "Organization", "Organization"},
      {"f:2", "partner_of", "ent:b", "ent:a", "Organization", "Organization"},
      {"f:3", "partner_of", "ent:c", "ent:d", "Organization", "Organization"},
  };
  MetaKnowledgeBase mkb;
  auto o = induce_relation_schemas(ms, mkb, kEmb, kPass, {}, 0);
  CHECK(std::get<RelationSchema>(o.proposals[0].candidate).properties.symmetric);
  ms.pop_back();
  ms.pop_back();
  o = induce_relation_schemas(ms, mkb, kEmb, kPass, {}, 0);
  CHECK_FALSE(std::get<RelationSchema>(o.proposals[0].candidate).properties.symmetric);
}

TEST_CASE("event roles: frequent roles required, rare roles optional") {
  std::vector<EventMember> ms = {acquisition(0, true), acquisition(1, false), acquisition(2, false)};
  MetaKnowledgeBase mkb;
  const auto o = induce_event_schemas(ms, mkb, kEmb, kPass, {}, 0);
  REQUIRE(o.proposals.size() == 1);
  const auto& p = o.proposals[0];
  CHECK(p.status == ProposalStatus::Promoted);
  const auto& es = std::get<EventSchema>(p.candidate);
  CHECK(es.event_type == "Acquisition");
  CHECK(es.role("acquirer")->required);
  CHECK(es.role("acquired")->required);
  CHECK_FALSE(es.role("price")->required);
  CHECK(es.role("price")->type == "Literal");
}

TEST_CASE("an event cluster with no required role stays pending") {
  std::vector<EventMember> ms;
  for (int i = 0; i < 4; ++i) ms.push_back({"evt:0:" + std::to_string(i), "announce", "Announcement", {{"r" + std::to_string(i), "Entity"}}});
  MetaKnowledgeBase mkb;
  const auto o = induce_event_schemas(ms, mkb, kEmb, kPass, {}, 0);
  REQUIRE(o.proposals.size() == 1);
  CHECK(o.proposals[0].reason == "no_required_role");
}

TEST_CASE("relationalization emits one node and one fact per binding") {
  CanonicalEvent e;
  e.event_id = "evt:1:0";
  e.trigger = "acquired";
  e.event_type = "Acquisition";
  e.roles = {{"acquirer", {"ent:oracle", false, "Organization", "Oracle"}},
             {"acquired", {"ent:cerner", false, "Organization", "Cerner"}},
             {"price", {"28B", true, "Literal", "28B"}}};
  e.time = TimeInterval::parse("2022");
  e.time_text = "2022";
  e.evidence = {testing::ev("The company Oracle acquired the company Cerner in 2022.")};
  const auto r = relationalize_event(e, 1);
  CHECK(r.node.entity_id == "evt:1:0");
  CHECK(r.node.entity_type == "Event");
  CHECK(r.facts.size() == 1 + 3 + 1);
  for (const auto& f : r.facts) {
    CHECK(f.evidence == std::vector<Evidence>{e.evidence.front()});
    CHECK(f.created_at_batch == 1);
  }
  const auto back = parse_back(r.node, r.facts);
  CHECK(back.event_type == "Acquisition");
  CHECK(back.trigger == "acquired");
  CHECK(back.time == "2022");
  CHECK(back.roles == std::map<std::string, std::string>{{"acquirer", "ent:oracle"}, {"acquired", "ent:cerner"}, {"price", "28B"}});

  EventSchema schema;
  schema.event_type = "Acquisition";
  schema.roles = {{"acquirer", "Organization", true}, {"target_date", "Literal", true}};
  CHECK_THROWS_AS(relationalize_event(e, 1, &schema), MissingRequiredRole);
}

TEST_CASE("profiles gather aliases and active literal attributes, never events") {
  MetaKnowledgeBase mkb;
  std::map<std::string, EntityNode> nodes = {{"ent:psp", {"ent:psp", "PodSecurityPolicy", "API", 0}},
                                             {"ent:k8s", {"ent:k8s", "Kubernetes", "Platform", 0}},
                                             {"evt:0:0", {"evt:0:0", "deprecated", "Event", 0}}};
  std::vector<FactEdge> facts = {
      make_fact("ent:psp", "status", Tail::literal("active"), {testing::ev("x")}, 0),
      make_fact("ent:psp", "part_of", Tail::entity("ent:k8s"), {testing::ev("x")}, 0),
      make_fact("evt:0:0", "has_target", Tail::entity("ent:psp"), {testing::ev("x")}, 0),
  };
  update_entity_profiles(facts, nodes, {{"ent:psp", {"PSP"}}}, {{"ent:k8s", {"CNCF project"}}}, mkb, kEmb, 0);
  const auto psp = mkb.profile("ent:psp");
  REQUIRE(psp);
  CHECK(psp->aliases == std::set<std::string>{"PSP", "PodSecurityPolicy"});
  CHECK(psp->key_attributes.at("status") == "active");
  const std::vector<Embedding> alias_vecs = {kEmb.embed_one("PSP"), kEmb.embed_one("PodSecurityPolicy")};
  CHECK(cosine(psp->embedding, mean_embedding(alias_vecs)) == doctest::Approx(1.0));
  CHECK(mkb.profile("ent:k8s")->parents == std::set<std::string>{"CNCF project"});
  CHECK_FALSE(mkb.profile("evt:0:0").has_value());
}

TEST_CASE("config validation") {
  InductionConfig c;
  c.theta = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.tau_coherence = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(find(InductionOutcome{}, "x") == nullptr);
}
