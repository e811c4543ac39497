#include <doctest.h>

#include <random>

#include "dialkg/metrics.hpp"
#include "support.hpp"

using namespace dialkg;

TEST_CASE("delta precision counts only fully supported additions") {
  Judgments j;
  j.additions = {{"a", Support::FullySupported},
                 {"b", Support::FullySupported},
                 {"c", Support::PartiallySupported},
                 {"d", Support::NotSupported}};
  CHECK(*delta_precision({"a", "b", "c", "d"}, j) == 0.5);
  CHECK_FALSE(delta_precision({}, j).has_value());
  CHECK_THROWS_AS(delta_precision({"a", "zzz"}, j), MissingJudgment);
}

TEST_CASE("deprecation precision and its N/A convention") {
  Judgments j;
  j.deprecations = {{"x", true}, {"y", true}};
  CHECK(*dhp({"x", "y"}, j) == 1.0);
  CHECK_FALSE(dhp({}, j).has_value());
  CHECK_THROWS_AS(dhp({"q"}, j), MissingJudgment);

  BatchReport r;
  const auto out = score_report(r, j).to_json();
  CHECK(out.at("dhp") == "N/A");
  CHECK(out.at("delta_precision") == "N/A");
}

TEST_CASE("static precision, recall and F1") {
  const std::vector<TripleKey> gold = {{"A", "r", "B"}, {"C", "r", "D"}, {"E", "r", "F"}, {"G", "r", "H"}};
  const std::vector<TripleKey> pred = {{"a ", "R", "b"}, {"C", "r", "D"}, {"X", "r", "Y"}};
  const auto m = static_prf(pred, gold);
  CHECK(*m.precision == doctest::Approx(2.0 / 3));
  CHECK(*m.recall == doctest::Approx(0.5));
  CHECK(*m.f1 == doctest::Approx(4.0 / 7));
  CHECK(std::round(*m.f1 * 1000) / 1000 == doctest::Approx(0.571));

  const auto same = static_prf(gold, gold);
  CHECK(*same.precision == 1.0);
  CHECK(*same.recall == 1.0);
  CHECK(*same.f1 == 1.0);

  const auto none = static_prf({}, gold);
  CHECK_FALSE(none.precision.has_value());
  CHECK(*none.recall == 0.0);
  CHECK(*none.f1 == 0.0);

  const auto no_gold = static_prf(pred, {});
  CHECK(*no_gold.precision == 0.0);
  CHECK_FALSE(no_gold.recall.has_value());
  CHECK_FALSE(no_gold.f1.has_value());
}

TEST_CASE("exact match canonicalizes case, whitespace and relation inflection") {
  CHECK(exact_match({" Google ", "Acquired By", "fitbit"}, {"google", "acquire_by", "Fitbit"}));
  CHECK_FALSE(exact_match({"Google", "owns", "Fitbit"}, {"Google", "acquire_by", "Fitbit"}));
}

TEST_CASE("judgment files round-trip and reject unknown labels") {
  Judgments j;
  j.additions = {{"f:1", Support::PartiallySupported}};
  j.deprecations = {{"f:2", false}};
  const auto back = Judgments::from_json(j.to_json());
  CHECK(back.additions == j.additions);
  CHECK(back.deprecations == j.deprecations);
  CHECK_THROWS_AS(Judgments::from_json(json::parse(R"({"additions": {"f:1": "maybe"}})")), ConfigError);
}

TEST_CASE("metrics agree with brute-force counting on random cases") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const int na = static_cast<int>(rng() % 6), nd = static_cast<int>(rng() % 6);
    std::vector<std::string> adds, deps;
    Judgments j;
    int full = 0, justified = 0;
    for (int i = 0; i < na; ++i) {
      adds.push_back("a" + std::to_string(i));
      const auto s = static_cast<Support>(rng() % 3);
      j.additions[adds.back()] = s;
      full += s == Support::FullySupported;
    }
    for (int i = 0; i < nd; ++i) {
      deps.push_back("d" + std::to_string(i));
      const bool ok = rng() % 2;
      j.deprecations[deps.back()] = ok;
      justified += ok;
    }
    const auto dp = delta_precision(adds, j);
    const auto dh = dhp(deps, j);
    CHECK(dp.has_value() == (na > 0));
    CHECK(dh.has_value() == (nd > 0));
    if (na) CHECK(*dp == static_cast<double>(full) / na);
    if (nd) CHECK(*dh == static_cast<double>(justified) / nd);
  }
}

TEST_CASE("auto judging uses stored evidence") {
  auto chat = testing::mock_chat();
  GraphState g;
  KnowledgeIncrement inc;
  inc.batch_index = 0;
  inc.new_entities = {{"ent:psp", "PodSecurityPolicy", "API", 0}};
  const auto f = make_fact("ent:psp", "status", Tail::literal("active"), {testing::ev("The status of PodSecurityPolicy is active.")}, 0);
  inc.new_facts = {f};
  g = apply_increment(g, inc);
  BatchReport r;
  r.additions = {f.edge_id};
  r.deprecations = {{f.edge_id, testing::ev("The PodSecurityPolicy API is deprecated.")}};
  const auto j = auto_judge(r, g, chat);
  CHECK(j.additions.at(f.edge_id) == Support::FullySupported);
  CHECK(j.deprecations.at(f.edge_id));
  ChatClient down(std::make_shared<testing::DownBackend>(), testing::templates());
  CHECK_THROWS_AS(auto_judge(r, g, down), JudgeUnavailable);
}
