#include <doctest.h>

#include <atomic>
#include <thread>

#include "generators.hpp"
#include "support.hpp"

using namespace dialkg;
using testing::ev;

namespace {

GraphState seeded() {
  KnowledgeIncrement inc;
  inc.batch_index = 0;
  inc.new_entities = {{"ent:psp", "PodSecurityPolicy", "API", 0}, {"ent:k8s", "Kubernetes", "Entity", 0}};
  inc.new_facts = {make_fact("ent:psp", "status", Tail::literal("active"), {ev("The status of PSP is active.")}, 0),
                   make_fact("ent:psp", "part_of", Tail::entity("ent:k8s"), {ev("PSP part_of Kubernetes.")}, 0)};
  return apply_increment(GraphState{}, inc);
}

const std::string kActive = make_edge_id("ent:psp", "status", Tail::literal("active"));

}  // namespace

TEST_CASE("edge ids depend on normalized content only") {
  CHECK(make_edge_id("a", "Acquired By", Tail::entity("b")) == make_edge_id("a", "acquired_by", Tail::entity("b")));
  CHECK(make_edge_id("a", "r", Tail::entity("b")) != make_edge_id("a", "r", Tail::literal("b")));
  CHECK(make_edge_id("a", "r", Tail::entity("b")).starts_with("f:"));
}

TEST_CASE("empty increment only advances the batch index") {
  const auto g = seeded();
  KnowledgeIncrement inc;
  inc.batch_index = 1;
  const auto next = apply_increment(g, inc);
  CHECK(next.batch_index == 1);
  CHECK(next.entities == g.entities);
  CHECK(next.edges == g.edges);
}

TEST_CASE("soft deprecation keeps the edge with evidence and a log entry") {
  const auto g = seeded();
  KnowledgeIncrement inc;
  inc.batch_index = 1;
  inc.new_facts = {make_fact("ent:psp", "status", Tail::literal("deprecated"), {ev("PSP is deprecated.")}, 1)};
  inc.deprecations = {{kActive, ev("PSP is deprecated.")}};
  const auto next = apply_increment(g, inc);
  CHECK(next.edges.size() == 3);
  const auto& old = next.edges.at(kActive);
  CHECK(old.status == EdgeStatus::Deprecated);
  CHECK(old.deprecated_at_batch == 1);
  REQUIRE(old.deprecation_evidence);
  CHECK(old.deprecation_evidence->text == "PSP is deprecated.");
  CHECK(old.evidence == g.edges.at(kActive).evidence);
  REQUIRE(next.deprecation_log.size() == 1);
  CHECK(next.deprecation_log[0].edge_id == kActive);
  CHECK(next.active_edge_count() == 2);
}

TEST_CASE("reaffirmation appends new evidence once") {
  const auto g = seeded();
  KnowledgeIncrement inc;
  inc.batch_index = 1;
  inc.reaffirmations = {{kActive, {ev("again"), g.edges.at(kActive).evidence.front()}}};
  const auto next = apply_increment(g, inc);
  CHECK(next.edges.at(kActive).evidence.size() == 2);
  CHECK(next.edges.at(kActive).status == EdgeStatus::Active);
}

TEST_CASE("invalid increments are rejected without touching state") {
  const auto g = seeded();
  auto base = [] {
    KnowledgeIncrement inc;
    inc.batch_index = 1;
    return inc;
  };
  SUBCASE("wrong batch index") {
    auto inc = base();
    inc.batch_index = 5;
    CHECK_THROWS_AS(apply_increment(g, inc), BatchIndexMismatch);
  }
  SUBCASE("dangling head") {
    auto inc = base();
    inc.new_facts = {make_fact("ent:ghost", "r", Tail::literal("x"), {ev("e")}, 1)};
    CHECK_THROWS_AS(apply_increment(g, inc), DanglingEntityReference);
  }
  SUBCASE("unknown deprecation target") {
    auto inc = base();
    inc.deprecations = {{"f:0000000000000000", ev("e")}};
    CHECK_THROWS_AS(apply_increment(g, inc), UnknownDeprecationTarget);
  }
  SUBCASE("deprecating an already deprecated edge") {
    auto inc = base();
    inc.deprecations = {{kActive, ev("e")}};
    auto g1 = apply_increment(g, inc);
    auto inc2 = base();
    inc2.batch_index = 2;
    inc2.deprecations = {{kActive, ev("e")}};
    CHECK_THROWS_AS(apply_increment(g1, inc2), UnknownDeprecationTarget);
  }
  SUBCASE("same-batch add and deprecate") {
    auto inc = base();
    auto f = make_fact("ent:psp", "status", Tail::literal("x"), {ev("e")}, 1);
    inc.new_facts = {f};
    inc.deprecations = {{f.edge_id, ev("e")}};
    CHECK_THROWS_AS(apply_increment(g, inc), IncrementRejected);
  }
  SUBCASE("fact without evidence") {
    auto inc = base();
    inc.new_facts = {make_fact("ent:psp", "status", Tail::literal("x"), {}, 1)};
    CHECK_THROWS_AS(apply_increment(g, inc), ConflictingIncrement);
  }
  SUBCASE("re-adding an existing entity") {
    auto inc = base();
    inc.new_entities = {{"ent:psp", "P", "API", 1}};
    CHECK_THROWS_AS(apply_increment(g, inc), ConflictingIncrement);
  }
  CHECK(g == seeded());
}

TEST_CASE("update rule matches the set oracle on random histories") {
  testing::Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    auto g = testing::random_graph(rng, rng() % 6, 40);
    const auto inc = testing::random_increment(g, rng, 40);
    const auto expect = testing::oracle(g, inc);
    const auto next = apply_increment(g, inc);
    CHECK(testing::view(next) == expect);
    CHECK(next.deprecation_log.size() == g.deprecation_log.size() + inc.deprecations.size());
  }
}

TEST_CASE("snapshots are deterministic and round-trip") {
  testing::Rng rng(11);
  const auto g = testing::random_graph(rng, 8, 50);
  const auto bytes = snapshot(g);
  CHECK(snapshot(restore(bytes)) == bytes);
  CHECK(restore(bytes) == g);
}

TEST_CASE("corrupt snapshots are refused") {
  const auto bytes = snapshot(seeded());
  CHECK_THROWS_AS(restore(""), CorruptSnapshot);
  CHECK_THROWS_AS(restore(bytes.substr(0, bytes.size() / 2)), CorruptSnapshot);
  CHECK_THROWS_AS(restore("{\"record\":\"nonsense\"}\n"), CorruptSnapshot);
  auto tampered = bytes;
  tampered.replace(tampered.find("\"Active\""), 8, "\"Zombie\"");
  CHECK_THROWS_AS(restore(tampered), CorruptSnapshot);
}

TEST_CASE("a fault at any point leaves the store byte-identical") {
  testing::Rng rng(3);
  const auto g = testing::random_graph(rng, 5, 30);
  auto inc = testing::random_increment(g, rng, 30);
  while (inc.new_facts.empty() || inc.deprecations.empty() || inc.reaffirmations.empty() || inc.new_entities.empty()) {
    inc = testing::random_increment(g, rng, 30);
  }
  for (auto point : kAllFaultPoints) {
    CAPTURE(to_string(point));
    GraphStore store(g);
    const auto before = store.snapshot();
    FaultInjector f{point, 0, 0};
    CHECK_THROWS_AS(store.apply(inc, &f), InjectedFault);
    CHECK(store.snapshot() == before);
  }
  GraphStore store(g);
  store.apply(inc);
  CHECK(store.batch_index() == g.batch_index + 1);
}

TEST_CASE("active facts lists incident Active edges in id order") {
  const auto g = seeded();
  const auto facts = active_facts(g, "ent:k8s");
  REQUIRE(facts.size() == 1);
  CHECK(facts[0].relation == "part_of");
  const auto psp = active_facts(g, "ent:psp");
  CHECK(psp.size() == 2);
  CHECK(psp[0].edge_id < psp[1].edge_id);
}

TEST_CASE("readers never observe a half-applied increment") {
  GraphStore store;
  std::atomic<bool> done{false};
  std::atomic<int> violations{0};
  std::thread reader([&] {
    while (!done) {
      store.read([&](const GraphState& s) {
        for (const auto& [id, e] : s.edges) {
          if (!s.entities.contains(e.head)) ++violations;
        }
        if (s.edges.size() != s.entities.size()) ++violations;
      });
    }
  });
  for (int i = 0; i < 300; ++i) {
    KnowledgeIncrement inc;
    inc.batch_index = i;
    const auto id = "ent:e" + std::to_string(i);
    inc.new_entities = {{id, id, "Thing", i}};
    inc.new_facts = {make_fact(id, "r", Tail::literal("v"), {ev("e")}, i)};
    store.apply(inc);
  }
  done = true;
  reader.join();
  CHECK(violations == 0);
  CHECK(store.state().edges.size() == 300);
}
