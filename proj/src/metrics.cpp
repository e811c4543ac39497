#include "dialkg/metrics.hpp"

#include <algorithm>

#include "dialkg/adapters/prompts.hpp"
#include "dialkg/pipeline.hpp"
#include "dialkg/text.hpp"

namespace dialkg {

namespace {

json na(const std::optional<double>& v) { return v ? json(*v) : json("N/A"); }

std::string canon(std::string_view s) { return text::lower(text::trim(s)); }

std::string display_name(const GraphState& g, const Tail& t) {
  if (!t.is_entity()) return t.value;
  auto it = g.entities.find(t.value);
  return it == g.entities.end() ? t.value : it->second.canonical_name;
}

json judge_call(const ChatClient& judge, const std::string& id, std::map<std::string, std::string> bindings) {
  try {
    return judge.call(prompts::make_request(id, std::move(bindings), kJudgeTemperature));
  } catch (const BackendUnavailable& e) {
    throw JudgeUnavailable(e.what());
  }
}

}  // namespace

std::string_view to_string(Support s) {
  switch (s) {
    case Support::FullySupported: return "fully_supported";
    case Support::PartiallySupported: return "partially_supported";
    case Support::NotSupported: return "not_supported";
  }
  return "not_supported";
}

Support support_from_string(std::string_view s) {
  if (s == "fully_supported") return Support::FullySupported;
  if (s == "partially_supported") return Support::PartiallySupported;
  if (s == "not_supported") return Support::NotSupported;
  throw ConfigError("unknown judgment '" + std::string(s) + "'");
}

json Judgments::to_json() const {
  json a = json::object();
  for (const auto& [id, s] : additions) a[id] = std::string(to_string(s));
  return {{"additions", a}, {"deprecations", deprecations}};
}

Judgments Judgments::from_json(const json& j) {
  Judgments out;
  try {
    const json adds = j.value("additions", json::object());
    const json deps = j.value("deprecations", json::object());
    for (const auto& [id, v] : adds.items()) {
      out.additions[id] = support_from_string(v.get<std::string>());
    }
    for (const auto& [id, v] : deps.items()) {
      out.deprecations[id] = v.get<bool>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed judgments: ") + e.what());
  }
  return out;
}

json MetricResult::to_json() const {
  return {{"delta_precision", na(delta_precision)},
          {"dhp", na(dhp)},
          {"precision", na(precision)},
          {"recall", na(recall)},
          {"f1", na(f1)}};
}

std::optional<double> delta_precision(const std::vector<std::string>& additions, const Judgments& j) {
  if (additions.empty()) return std::nullopt;
  std::size_t tp = 0;
  for (const auto& id : additions) {
    auto it = j.additions.find(id);
    if (it == j.additions.end()) throw MissingJudgment("no judgment for addition " + id);
    tp += it->second == Support::FullySupported ? 1 : 0;
  }
  return static_cast<double>(tp) / static_cast<double>(additions.size());
}

std::optional<double> dhp(const std::vector<std::string>& deprecated_ids, const Judgments& j) {
  if (deprecated_ids.empty()) return std::nullopt;
  std::size_t justified = 0;
  for (const auto& id : deprecated_ids) {
    auto it = j.deprecations.find(id);
    if (it == j.deprecations.end()) throw MissingJudgment("no judgment for deprecation " + id);
    justified += it->second ? 1 : 0;
  }
  return static_cast<double>(justified) / static_cast<double>(deprecated_ids.size());
}

MetricResult score_report(const BatchReport& report, const Judgments& j) {
  std::vector<std::string> deprecated;
  for (const auto& d : report.deprecations) deprecated.push_back(d.edge_id);
  MetricResult r;
  r.delta_precision = delta_precision(report.additions, j);
  r.dhp = dhp(deprecated, j);
  return r;
}

bool exact_match(const TripleKey& p, const TripleKey& g) {
  return canon(p.head) == canon(g.head) && canon(p.tail) == canon(g.tail) &&
         text::normalize_relation_label(text::trim(p.relation)) == text::normalize_relation_label(text::trim(g.relation));
}

MetricResult static_prf(const std::vector<TripleKey>& predicted, const std::vector<TripleKey>& gold,
                        const TripleMatcher& matcher) {
  std::vector<bool> gold_hit(gold.size(), false);
  std::size_t pred_hit = 0;
  for (const auto& p : predicted) {
    bool any = false;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (matcher(p, gold[i])) {
        any = true;
        gold_hit[i] = true;
      }
    }
    pred_hit += any ? 1 : 0;
  }
  MetricResult r;
  if (!predicted.empty()) r.precision = static_cast<double>(pred_hit) / static_cast<double>(predicted.size());
  if (!gold.empty()) {
    const auto hits = std::count(gold_hit.begin(), gold_hit.end(), true);
    r.recall = static_cast<double>(hits) / static_cast<double>(gold.size());
    const double p = r.precision.value_or(0.0);
    r.f1 = (*r.recall == 0.0 || p == 0.0) ? 0.0 : 2.0 * p * *r.recall / (p + *r.recall);
  }
  return r;
}

Judgments auto_judge(const BatchReport& report, const GraphState& graph, const ChatClient& judge) {
  Judgments out;
  auto fact_json = [&](const FactEdge& e) {
    return json{{"head", display_name(graph, Tail::entity(e.head))},
                {"relation", e.relation},
                {"tail", display_name(graph, e.tail)}}
        .dump();
  };
  for (const auto& id : report.additions) {
    auto it = graph.edges.find(id);
    if (it == graph.edges.end()) throw MissingJudgment("addition " + id + " is not in the graph");
    std::string evidence;
    for (const auto& ev : it->second.evidence) evidence += (evidence.empty() ? "" : "\n") + ev.text;
    const json r = judge_call(judge, prompts::kJudgeAddition, {{"fact", fact_json(it->second)}, {"evidence", evidence}});
    out.additions[id] = support_from_string(r.at("judgment").get<std::string>());
  }
  for (const auto& d : report.deprecations) {
    auto it = graph.edges.find(d.edge_id);
    if (it == graph.edges.end()) throw MissingJudgment("deprecation " + d.edge_id + " is not in the graph");
    const json r =
        judge_call(judge, prompts::kJudgeDeprecation, {{"fact", fact_json(it->second)}, {"evidence", d.evidence.text}});
    out.deprecations[d.edge_id] = r.at("deletion_justified").get<bool>();
  }
  return out;
}

}  // namespace dialkg
