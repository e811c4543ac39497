// One PASS/FAIL line per acceptance criterion; exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "dialkg/metrics.hpp"
#include "generators.hpp"
#include "support.hpp"

using namespace dialkg;

namespace {

struct Check {
  std::string detail;
  bool ok = true;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

std::vector<std::filesystem::path> windows() {
  return {testing::stream_window(0), testing::stream_window(1), testing::stream_window(2)};
}

using Seconds = std::chrono::duration<double>;

Check ac1_increment_algebra() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  testing::Rng rng(1);
  for (int trial = 0; trial < 500 && c.ok; ++trial) {
    const auto g = testing::random_graph(rng, rng() % 8, 100);
    const auto inc = testing::random_increment(g, rng, 100);
    const auto next = apply_increment(g, inc);
    c.require(next.entities.size() <= 100, "graph exceeded 100 nodes");
    c.require(testing::view(next) == testing::oracle(g, inc), "trial " + std::to_string(trial) + " differs from oracle");
  }
  const double secs = Seconds(std::chrono::steady_clock::now() - t0).count();
  c.require(secs < 10.0, "took " + std::to_string(secs) + " s");
  if (c.ok) c.detail = "500 increments match the set oracle in " + std::to_string(secs) + " s";
  return c;
}

Check ac2_soft_deprecation_audit() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = testing::mock_pipeline();
  GraphState g;
  auto mkb = p.fresh_mkb();
  std::size_t added = 0;
  for (const auto& w : windows()) {
    auto r = p.process_batch(load_batch(w), g, mkb);
    c.require(!r.report.aborted(), "batch aborted: " + r.report.abort_reason);
    for (const auto& [id, e] : g.edges) c.require(r.graph.edges.contains(id), "edge " + id + " was physically deleted");
    added += r.report.additions.size();
    g = std::move(r.graph);
    mkb = std::move(r.mkb);
  }
  c.require(g.edges.size() == added, "stored " + std::to_string(g.edges.size()) + " edges, added " + std::to_string(added));
  std::size_t deprecated = 0;
  for (const auto& [id, e] : g.edges) {
    if (e.status != EdgeStatus::Deprecated) continue;
    ++deprecated;
    c.require(e.deprecation_evidence.has_value() && !e.deprecation_evidence->text.empty(), id + " lacks evidence");
    c.require(!e.evidence.empty(), id + " lost its original evidence");
    const bool logged = std::any_of(g.deprecation_log.begin(), g.deprecation_log.end(),
                                    [&](const DeprecationRecord& d) { return d.edge_id == id; });
    c.require(logged, id + " has no deprecation_log entry");
  }
  c.require(deprecated > 0, "stream produced no deprecations");
  const double secs = Seconds(std::chrono::steady_clock::now() - t0).count();
  c.require(secs < 30.0, "took " + std::to_string(secs) + " s");
  if (c.ok) {
    c.detail = std::to_string(g.edges.size()) + " stored edges = sum of additions, " + std::to_string(deprecated) +
               " deprecated edges audited";
  }
  return c;
}

Check ac3_atomicity() {
  Check c;
  const auto p = testing::mock_pipeline();
  const auto s0 = run_stream(p, {testing::stream_window(0), testing::stream_window(1)});
  const auto docs = load_batch(testing::stream_window(2));
  // Sanity: this batch exercises every stage of integration.
  const auto clean = p.process_batch(docs, s0.graph, s0.mkb);
  c.require(!clean.increment.new_entities.empty() && !clean.increment.new_facts.empty() &&
                !clean.increment.deprecations.empty() && !clean.increment.reaffirmations.empty(),
            "batch does not exercise every kind of change");
  std::size_t points = 0;
  for (auto point : kAllFaultPoints) {
    ++points;
    const auto before = snapshot(s0.graph);
    const auto mkb_before = s0.mkb.snapshot();
    FaultInjector f{point, 0, 0};
    const auto r = p.process_batch(docs, s0.graph, s0.mkb, &f);
    const std::string name(to_string(point));
    c.require(r.report.aborted(), name + ": fault did not abort");
    c.require(snapshot(r.graph) == before, name + ": graph snapshot changed");
    c.require(r.mkb.snapshot() == mkb_before, name + ": MKB snapshot changed");

    GraphStore store(s0.graph);
    FaultInjector g{point, 0, 0};
    try {
      store.apply(clean.increment, &g);
      c.require(false, name + ": store ignored the fault");
    } catch (const InjectedFault&) {
    }
    c.require(store.snapshot() == before, name + ": in-place store snapshot changed");
  }
  c.require(points >= 5, "fewer than 5 fault points");
  if (c.ok) c.detail = std::to_string(points) + " fault points leave snapshot bytes unchanged";
  return c;
}

std::vector<std::string> triple_of(const GraphState& g, const std::string& edge_id) {
  const auto& e = g.edges.at(edge_id);
  return {e.head, e.relation, e.tail.is_entity() ? "entity" : "literal", e.tail.value};
}

Check ac4_case_study() {
  Check c;
  std::ifstream in(testing::source_dir() / "data" / "fixtures" / "case_study.json");
  const json fx = json::parse(in);
  std::vector<Document> seed;
  for (const auto& d : fx.at("seed")) seed.push_back(document_from_json(d));
  const auto p = testing::mock_pipeline();
  const auto b0 = p.process_batch(seed, GraphState{}, p.fresh_mkb());
  c.require(!b0.report.aborted(), "seed batch aborted");
  const auto b1 = p.process_batch({document_from_json(fx.at("document"))}, b0.graph, b0.mkb);
  c.require(!b1.report.aborted(), "case batch aborted");

  std::set<std::vector<std::string>> additions, deprecations, expect_add, expect_dep;
  for (const auto& id : b1.report.additions) additions.insert(triple_of(b1.graph, id));
  for (const auto& d : b1.report.deprecations) deprecations.insert(triple_of(b1.graph, d.edge_id));
  for (const auto& t : fx.at("expected").at("additions")) expect_add.insert(t.get<std::vector<std::string>>());
  for (const auto& t : fx.at("expected").at("deprecations")) expect_dep.insert(t.get<std::vector<std::string>>());
  const auto expect_nodes = fx.at("expected").at("new_entities").get<std::vector<std::string>>();
  c.require(b1.report.new_entities == expect_nodes, "new entities differ from fixture");
  c.require(additions == expect_add, "additions differ from fixture");
  c.require(deprecations == expect_dep, "deprecations differ from fixture");
  for (const auto& d : b1.report.deprecations) {
    const auto& e = b1.graph.edges.at(d.edge_id);
    c.require(e.status == EdgeStatus::Deprecated, "deprecated edge still Active");
    c.require(e.deprecation_evidence && e.deprecation_evidence->doc_id == "case-psp", "deprecation evidence is not the case document");
  }
  if (c.ok) c.detail = "one addition, one soft deprecation, no new nodes (fixture match)";
  return c;
}

Check ac5_promotion_boundary() {
  Check c;
  auto cfg = PipelineConfig::defaults();
  Services sv = Services::mock(cfg);
  sv.evaluator = std::make_shared<FixedEvaluator>(true);
  const Pipeline p(cfg, sv);
  auto docs = [](std::size_t n, BatchIndex w) {
    std::vector<Document> out;
    static const char* heads[] = {"Alpha", "Bravo", "Charlie", "Delta"};
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(testing::doc("d" + std::to_string(i), std::string(heads[i]) + " headquartered_in Berlin.", w));
    }
    return out;
  };
  const auto below = p.process_batch(docs(cfg.theta - 1, 0), GraphState{}, p.fresh_mkb());
  c.require(below.report.schemas_promoted.empty(), "theta-1 occurrences promoted a schema");
  c.require(below.mkb.schema_count() == 0, "theta-1 occurrences registered a schema");
  const auto at = p.process_batch(docs(cfg.theta, 0), GraphState{}, p.fresh_mkb());
  c.require(at.report.schemas_promoted.size() == 1, "theta occurrences promoted " +
                                                        std::to_string(at.report.schemas_promoted.size()) + " schemas");
  c.require(at.mkb.schema_count() == 1, "MKB does not hold exactly one schema");

  // Closed loop: the next batch sees the schema in its extraction context.
  const std::vector<Document> next = {testing::doc("n0", "Echo headquartered_in Paris.", 1)};
  const auto ctx = build_context(next, at.mkb, *sv.embedder, cfg.retrieval_k, "");
  const auto promoted = at.mkb.relation_schemas();
  const bool retrieved = !promoted.empty() && std::any_of(ctx.schemas.begin(), ctx.schemas.end(), [&](const ScoredSchema& s) {
    return schema_id(s.schema) == promoted.front().schema_id;
  });
  c.require(retrieved, "promoted schema not retrieved by build_context");
  const auto r = p.process_batch(next, at.graph, at.mkb);
  c.require(r.report.counts.at("schemas_in_context") == 1, "next batch did not inject the promoted schema");
  if (c.ok) c.detail = "theta-1 promotes 0, theta promotes 1, retrieved in the next batch";
  return c;
}

Check ac6_metric_oracle() {
  Check c;
  std::mt19937_64 rng(6);
  static const char* vocab[] = {"a", "b", "c", "d"};
  static const char* rels[] = {"r", "s"};
  std::size_t na_cases = 0;
  for (int trial = 0; trial < 1000 && c.ok; ++trial) {
    const std::size_t nadd = rng() % 5, ndep = rng() % 5;
    Judgments j;
    std::vector<std::string> adds, deps;
    std::size_t full = 0, justified = 0;
    for (std::size_t i = 0; i < nadd; ++i) {
      adds.push_back("f:" + std::to_string(i));
      const auto s = static_cast<Support>(rng() % 3);
      j.additions[adds.back()] = s;
      full += s == Support::FullySupported ? 1 : 0;
    }
    for (std::size_t i = 0; i < ndep; ++i) {
      deps.push_back("g:" + std::to_string(i));
      j.deprecations[deps.back()] = rng() % 2 == 0;
      justified += j.deprecations[deps.back()] ? 1 : 0;
    }
    BatchReport report;
    report.additions = adds;
    for (const auto& d : deps) report.deprecations.push_back({d, Evidence{}});
    const auto m = score_report(report, j);
    c.require(m.delta_precision.has_value() == (nadd > 0), "delta precision N/A convention");
    c.require(m.dhp.has_value() == (ndep > 0), "D-HP N/A convention");
    if (nadd) c.require(*m.delta_precision == static_cast<double>(full) / nadd, "delta precision value");
    if (ndep) c.require(*m.dhp == static_cast<double>(justified) / ndep, "D-HP value");
    na_cases += (nadd == 0) + (ndep == 0);

    auto triples = [&](std::size_t n) {
      std::vector<TripleKey> out;
      for (std::size_t i = 0; i < n; ++i) out.push_back({vocab[rng() % 4], rels[rng() % 2], vocab[rng() % 4]});
      return out;
    };
    const auto pred = triples(rng() % 6), gold = triples(rng() % 6);
    std::size_t pred_ok = 0, gold_ok = 0;
    for (const auto& p : pred) pred_ok += std::count(gold.begin(), gold.end(), p) > 0;
    for (const auto& g : gold) gold_ok += std::count(pred.begin(), pred.end(), g) > 0;
    const auto prf = static_prf(pred, gold);
    c.require(prf.precision.has_value() == !pred.empty(), "precision N/A convention");
    c.require(prf.recall.has_value() == !gold.empty(), "recall N/A convention");
    if (!pred.empty()) c.require(*prf.precision == static_cast<double>(pred_ok) / pred.size(), "precision value");
    if (!gold.empty()) {
      const double r = static_cast<double>(gold_ok) / gold.size();
      const double p = pred.empty() ? 0.0 : static_cast<double>(pred_ok) / pred.size();
      c.require(*prf.recall == r, "recall value");
      c.require(*prf.f1 == (p == 0 || r == 0 ? 0.0 : 2 * p * r / (p + r)), "F1 value");
    }
  }
  if (c.ok) c.detail = "1000 cases exact, " + std::to_string(na_cases) + " N/A cases";
  return c;
}

struct AblationStats {
  std::size_t entities = 0;
  std::size_t deprecations = 0;
  std::size_t justified = 0;
  bool dhp_all_na = true;
};

AblationStats ablation(bool intent, bool events, bool coref) {
  auto cfg = PipelineConfig::defaults();
  cfg.enable_intent = intent;
  cfg.enable_events = events;
  cfg.enable_coref = coref;
  const auto p = testing::mock_pipeline(cfg);
  const auto s = run_stream(p, windows());
  const auto judge = testing::mock_chat();
  AblationStats out;
  out.entities = s.graph.entities.size();
  for (const auto& r : s.reports) {
    const auto j = auto_judge(r, s.graph, judge);
    const auto m = score_report(r, j);
    out.dhp_all_na = out.dhp_all_na && !m.dhp.has_value();
    out.deprecations += r.deprecations.size();
    for (const auto& [id, ok] : j.deprecations) out.justified += ok ? 1 : 0;
  }
  return out;
}

Check ac7_ablation_directionality() {
  Check c;
  const auto full = ablation(true, true, true);
  const auto no_intent = ablation(false, true, true);
  const auto no_events = ablation(true, false, true);
  const auto no_coref = ablation(true, true, false);
  c.require(full.justified > 0, "full model has no justified deprecations");
  c.require(no_intent.deprecations == 0 && no_intent.dhp_all_na, "--no-intent produced deprecations");
  c.require(no_events.deprecations == 0 && no_events.dhp_all_na, "--no-events produced deprecations");
  c.require(no_coref.entities > full.entities, "--no-coref did not fragment entities");
  c.require(no_coref.justified < full.justified, "--no-coref did not lose targeted deprecations");
  if (c.ok) {
    std::ostringstream s;
    s << "full " << full.entities << " nodes/" << full.justified << " justified; no-coref " << no_coref.entities << "/"
      << no_coref.justified << "; no-intent and no-events D-HP N/A";
    c.detail = s.str();
  }
  return c;
}

Check ac8_determinism() {
  Check c;
  auto run = [] {
    const auto s = run_stream(testing::mock_pipeline(), windows());
    std::string reports;
    for (const auto& r : s.reports) reports += r.to_json().dump() + "\n";
    return std::tuple{export_graph(s.graph).dump(), s.mkb.snapshot(), reports};
  };
  const auto a = run();
  const auto b = run();
  c.require(std::get<0>(a) == std::get<0>(b), "graph exports differ");
  c.require(std::get<1>(a) == std::get<1>(b), "MKB snapshots differ");
  c.require(std::get<2>(a) == std::get<2>(b), "batch reports differ");
  if (c.ok) c.detail = "exports, MKB snapshots and reports byte-identical";
  return c;
}

Check retrieval_case(std::size_t n_schemas, Check& c) {
  HashingEmbedder emb;
  MetaKnowledgeBase mkb;
  std::vector<std::pair<std::string, Embedding>> all;
  for (std::size_t i = 0; i < n_schemas; ++i) {
    RelationSchema r;
    r.relation_label = "relation_" + std::to_string(i) + (i % 3 ? "_of" : "_by");
    r.domain_type = r.range_type = "Entity";
    r.embedding = emb.embed_one(r.relation_label);
    SchemaProposal p;
    p.proposal_id = "prop:rel:" + r.relation_label;
    p.candidate = r;
    p.status = ProposalStatus::Promoted;
    all.emplace_back(mkb.register_schema(p), r.embedding);
  }
  const std::vector<Document> batch = {testing::doc("a", "relation 7 of something"), testing::doc("b", "relation 12 by x")};
  const auto ctx = build_context(batch, mkb, emb, kDefaultRetrievalK, "");
  const std::size_t expect = std::min<std::size_t>(n_schemas, 30);
  c.require(ctx.schemas.size() == expect,
            std::to_string(n_schemas) + " schemas injected " + std::to_string(ctx.schemas.size()));

  const std::vector<Embedding> doc_vecs = {emb.embed_one(batch[0].text), emb.embed_one(batch[1].text)};
  const auto q = mean_embedding(doc_vecs);
  std::sort(all.begin(), all.end(), [&](const auto& x, const auto& y) {
    const double a = cosine(q, x.second), b = cosine(q, y.second);
    return a != b ? a > b : x.first < y.first;
  });
  for (std::size_t i = 0; i < ctx.schemas.size() && i < all.size(); ++i) {
    c.require(schema_id(ctx.schemas[i].schema) == all[i].first, "ranking differs from full scan at " + std::to_string(i));
  }
  return c;
}

Check ac9_retrieval_contract() {
  Check c;
  retrieval_case(45, c);
  retrieval_case(12, c);
  retrieval_case(30, c);
  if (c.ok) c.detail = "45 -> 30, 30 -> 30, 12 -> 12, order equals full scan";
  return c;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::off);
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
      {"AC1 increment algebra", ac1_increment_algebra},
      {"AC2 soft-deprecation audit", ac2_soft_deprecation_audit},
      {"AC3 atomicity under fault injection", ac3_atomicity},
      {"AC4 case-study replay", ac4_case_study},
      {"AC5 schema-promotion boundary", ac5_promotion_boundary},
      {"AC6 metric oracle equivalence", ac6_metric_oracle},
      {"AC7 ablation directionality", ac7_ablation_directionality},
      {"AC8 determinism", ac8_determinism},
      {"AC9 retrieval contract", ac9_retrieval_contract},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Check c;
    try {
      c = fn();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail = std::string("exception: ") + e.what();
    }
    failures += c.ok ? 0 : 1;
    std::cout << (c.ok ? "PASS " : "FAIL ") << name << ": " << c.detail << "\n";
  }
  return failures;
}
