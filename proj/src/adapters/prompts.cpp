#include "dialkg/adapters/prompts.hpp"

namespace dialkg::prompts {

ResponseShape triples_shape() {
  return {"triples", {{"triples", FieldKind::Array, true, {}}}};
}

ResponseShape events_shape() {
  return {"events", {{"events", FieldKind::Array, true, {}}}};
}

ResponseShape type_shape() {
  return {"type", {{"type", FieldKind::String, true, {}}}};
}

ResponseShape pair_verdict_shape() {
  return {"pair_verdict",
          {{"verdict", FieldKind::String, true, {"Merge", "Hierarchy", "Separate"}},
           {"parent", FieldKind::String, false, {}}}};
}

ResponseShape alignment_shape() {
  return {"alignment",
          {{"decision", FieldKind::String, true, {"reuse", "new"}},
           {"entity_id", FieldKind::String, false, {}}}};
}

ResponseShape evidence_verdict_shape() {
  return {"evidence_verdict",
          {{"verdict", FieldKind::String, true, {"supported", "unsupported", "contradicted"}},
           {"reason_code", FieldKind::String, false, {}},
           {"rationale", FieldKind::String, false, {}}}};
}

ResponseShape intent_shape() {
  return {"intent",
          {{"intent", FieldKind::String, true, {"Informational", "Evolutionary"}},
           {"rationale", FieldKind::String, false, {}}}};
}

ResponseShape schema_evaluation_shape() {
  return {"schema_evaluation",
          {{"pass", FieldKind::Boolean, true, {}}, {"rationale", FieldKind::String, false, {}}}};
}

ResponseShape addition_judgment_shape() {
  return {"addition_judgment",
          {{"judgment",
            FieldKind::String,
            true,
            {"fully_supported", "partially_supported", "not_supported"}},
           {"rationale", FieldKind::String, false, {}}}};
}

ResponseShape deprecation_judgment_shape() {
  return {"deprecation_judgment",
          {{"deletion_justified", FieldKind::Boolean, true, {}},
           {"evidence", FieldKind::String, false, {}}}};
}

ResponseShape shape_for(const std::string& id) {
  if (id == kExtractTriples) return triples_shape();
  if (id == kExtractEvents) return events_shape();
  if (id == kInferType) return type_shape();
  if (id == kAdjudicateEntities || id == kAdjudicateEvents) return pair_verdict_shape();
  if (id == kAlignEntity) return alignment_shape();
  if (id == kVerifyEvidence) return evidence_verdict_shape();
  if (id == kClassifyIntent) return intent_shape();
  if (id == kEvaluateSchema) return schema_evaluation_shape();
  if (id == kJudgeAddition) return addition_judgment_shape();
  if (id == kJudgeDeprecation) return deprecation_judgment_shape();
  throw ConfigError("no response shape for template '" + id + "'");
}

ChatRequest make_request(const std::string& template_id, std::map<std::string, std::string> bindings,
                         double temperature) {
  return ChatRequest{template_id, std::move(bindings), temperature, shape_for(template_id)};
}

}  // namespace dialkg::prompts
