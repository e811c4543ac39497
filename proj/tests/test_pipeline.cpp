#include <doctest.h>

#include <fstream>

#include "support.hpp"

using namespace dialkg;
using testing::doc;

namespace {

std::vector<std::filesystem::path> windows() {
  return {testing::stream_window(0), testing::stream_window(1), testing::stream_window(2)};
}

const FactEdge* find_edge(const GraphState& g, const std::string& head, const std::string& rel, const Tail& tail) {
  auto it = g.edges.find(make_edge_id(head, rel, tail));
  return it == g.edges.end() ? nullptr : &it->second;
}

PipelineConfig ablated(bool intent, bool events, bool coref) {
  auto cfg = PipelineConfig::defaults();
  cfg.enable_intent = intent;
  cfg.enable_events = events;
  cfg.enable_coref = coref;
  return cfg;
}

}  // namespace

TEST_CASE("an empty batch only advances the batch index") {
  const auto p = testing::mock_pipeline();
  const auto r = p.process_batch({}, GraphState{}, p.fresh_mkb());
  CHECK_FALSE(r.report.aborted());
  CHECK(r.graph.batch_index == 0);
  CHECK(r.graph.entities.empty());
  CHECK(r.increment.empty());
  CHECK(r.report.additions.empty());
}

TEST_CASE("the deprecation document soft-deprecates the active status") {
  const auto p = testing::mock_pipeline();
  auto b0 = p.process_batch({doc("seed", "PodSecurityPolicy is an API. The status of PodSecurityPolicy is active.")},
                            GraphState{}, p.fresh_mkb());
  REQUIRE_FALSE(b0.report.aborted());
  const auto psp = "ent:podsecuritypolicy";
  REQUIRE(b0.graph.entities.contains(psp));
  auto b1 = p.process_batch(
      {doc("case", "The PodSecurityPolicy API is deprecated in v1.21 and will be removed in v1.25.", 1)}, b0.graph,
      b0.mkb);
  REQUIRE_FALSE(b1.report.aborted());
  const auto* old = find_edge(b1.graph, psp, "status", Tail::literal("active"));
  const auto* now = find_edge(b1.graph, psp, "status", Tail::literal("deprecated"));
  REQUIRE(old);
  REQUIRE(now);
  CHECK(old->status == EdgeStatus::Deprecated);
  CHECK(now->status == EdgeStatus::Active);
  REQUIRE(b1.report.deprecations.size() == 1);
  CHECK(b1.report.deprecations[0].edge_id == old->edge_id);
  CHECK(b1.report.additions == std::vector<std::string>{now->edge_id});
  CHECK(b1.report.new_entities.empty());
}

TEST_CASE("report invariant: nothing is both added and deprecated") {
  const auto p = testing::mock_pipeline();
  const auto s = run_stream(p, windows());
  REQUIRE_FALSE(s.aborted);
  for (const auto& r : s.reports) {
    std::set<std::string> adds(r.additions.begin(), r.additions.end());
    for (const auto& d : r.deprecations) CHECK_FALSE(adds.contains(d.edge_id));
  }
}

TEST_CASE("stream state composes through the state directory") {
  const auto p = testing::mock_pipeline();
  const auto whole = run_stream(p, windows());
  const auto dir = testing::scratch_dir("compose");
  StateDir state(dir);
  run_stream(p, {testing::stream_window(0)}, state);
  const auto resumed = run_stream(p, {testing::stream_window(1), testing::stream_window(2)}, state);
  CHECK(snapshot(resumed.graph) == snapshot(whole.graph));
  CHECK(resumed.mkb.snapshot() == whole.mkb.snapshot());
  REQUIRE(state.load_report(2));
  CHECK(state.load_report(2)->to_json() == whole.reports[2].to_json());
}

TEST_CASE("two runs are byte-identical") {
  const auto p = testing::mock_pipeline();
  const auto a = run_stream(p, windows());
  const auto b = run_stream(p, windows());
  CHECK(export_graph(a.graph).dump() == export_graph(b.graph).dump());
  CHECK(a.mkb.snapshot() == b.mkb.snapshot());
  for (std::size_t i = 0; i < a.reports.size(); ++i) CHECK(a.reports[i].to_json() == b.reports[i].to_json());
}

TEST_CASE("parallel workers do not change results") {
  auto cfg = PipelineConfig::defaults();
  cfg.threads = 4;
  const auto a = run_stream(testing::mock_pipeline(cfg), windows());
  const auto b = run_stream(testing::mock_pipeline(), windows());
  CHECK(snapshot(a.graph) == snapshot(b.graph));
  CHECK(a.mkb.snapshot() == b.mkb.snapshot());
}

TEST_CASE("ablations change only their own stage") {
  const auto full = run_stream(testing::mock_pipeline(), windows());
  const auto no_intent = run_stream(testing::mock_pipeline(ablated(false, true, true)), windows());
  const auto no_events = run_stream(testing::mock_pipeline(ablated(true, false, true)), windows());
  const auto no_coref = run_stream(testing::mock_pipeline(ablated(true, true, false)), windows());
  auto deprecations = [](const StreamResult& s) {
    std::size_t n = 0;
    for (const auto& r : s.reports) n += r.deprecations.size();
    return n;
  };
  CHECK(deprecations(full) > 0);
  CHECK(deprecations(no_intent) == 0);
  CHECK(deprecations(no_events) == 0);
  CHECK(no_coref.graph.entities.size() > full.graph.entities.size());
  // Cross-batch coreference has nothing to align against in the first batch.
  CHECK(no_coref.reports[0].to_json() == full.reports[0].to_json());
  // Extraction is untouched by the intent switch.
  for (std::size_t i = 0; i < full.reports.size(); ++i) {
    CHECK(no_intent.reports[i].counts.at("triples_extracted") == full.reports[i].counts.at("triples_extracted"));
    CHECK(no_intent.reports[i].counts.at("events_extracted") == full.reports[i].counts.at("events_extracted"));
  }
  for (const auto& r : no_events.reports) CHECK(r.counts.at("events_extracted") == 0);
}

TEST_CASE("the role-type rule rejects a person as acquirer once the schema exists") {
  const auto full = run_stream(testing::mock_pipeline(), windows());
  REQUIRE(full.mkb.event_schema_by_type("Acquisition"));
  bool seen = false;
  for (const auto& r : full.reports[2].rejected) {
    seen |= r.value("reason_code", "") == "role_type_violation";
  }
  CHECK(seen);
}

TEST_CASE("a failure during integration aborts without touching state") {
  const auto p = testing::mock_pipeline();
  const auto s0 = run_stream(p, {testing::stream_window(0), testing::stream_window(1)});
  const auto docs = load_batch(testing::stream_window(2));
  for (auto point : kAllFaultPoints) {
    FaultInjector f{point, 0, 0};
    const auto r = p.process_batch(docs, s0.graph, s0.mkb, &f);
    CHECK(r.report.aborted());
    CHECK(snapshot(r.graph) == snapshot(s0.graph));
    CHECK(r.mkb.snapshot() == s0.mkb.snapshot());
  }
}

TEST_CASE("an unreachable backend skips documents and still commits") {
  auto cfg = PipelineConfig::defaults();
  Services sv = Services::mock(cfg);
  sv.chat = std::make_shared<ChatClient>(std::make_shared<testing::DownBackend>(), testing::templates());
  sv.evaluator = std::make_shared<FixedEvaluator>(false);
  Pipeline p(cfg, sv);
  const auto r = p.process_batch(load_batch(testing::stream_window(0)), GraphState{}, p.fresh_mkb());
  CHECK_FALSE(r.report.aborted());
  CHECK(r.report.skipped_documents.size() == 6);
  CHECK(r.graph.batch_index == 0);
}

TEST_CASE("configuration files") {
  CHECK_THROWS_AS(PipelineConfig::from_json({{"theta", 3}, {"tau_clustr", 0.9}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json({{"backend", {{"kind", "mock"}, {"bogus", 1}}}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json({{"tau_target", 2.0}}), ConfigError);
  auto cfg = PipelineConfig::from_json({{"theta", 4}, {"retrieval_k", 10}, {"weights", {{"trigger", 0.6}, {"arguments", 0.2}, {"time", 0.2}}}});
  CHECK(cfg.theta == 4);
  CHECK(cfg.retrieval_k == 10);
  CHECK(cfg.weights.trigger == 0.6);
  const auto again = PipelineConfig::from_json(cfg.to_json());
  CHECK(again.to_json() == cfg.to_json());

  const auto dir = testing::scratch_dir("config");
  std::ofstream(dir / "c.json") << R"({"template_dir": "tpl"})";
  CHECK(PipelineConfig::load(dir / "c.json").template_dir == dir / "tpl");
  CHECK_THROWS_AS(PipelineConfig::load(dir / "missing.json"), ConfigError);
}

TEST_CASE("reports round-trip through JSON") {
  const auto s = run_stream(testing::mock_pipeline(), windows());
  for (const auto& r : s.reports) CHECK(BatchReport::from_json(r.to_json()).to_json() == r.to_json());
}

TEST_CASE("inspect shows edge history and refuses unknown ids") {
  const auto s = run_stream(testing::mock_pipeline(), windows());
  REQUIRE_FALSE(s.graph.deprecation_log.empty());
  const auto id = s.graph.deprecation_log.front().edge_id;
  const auto out = inspect(s.graph, id);
  CHECK(out.at("edge").at("status") == "Deprecated");
  CHECK(out.at("deprecation_log").size() == 1);
  CHECK(inspect(s.graph, "ent:podsecuritypolicy").contains("edges"));
  CHECK_THROWS_AS(inspect(s.graph, "ent:nope"), Error);
}
