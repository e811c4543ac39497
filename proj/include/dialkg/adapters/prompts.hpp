#pragma once

#include <string>

#include "dialkg/adapters/chat.hpp"

// Template ids and response shapes shared by callers and backends.
namespace dialkg::prompts {

inline const std::string kExtractTriples = "extract_triples";
inline const std::string kExtractEvents = "extract_events";
inline const std::string kInferType = "infer_type";
inline const std::string kAdjudicateEntities = "adjudicate_entities";
inline const std::string kAlignEntity = "align_entity";
inline const std::string kAdjudicateEvents = "adjudicate_events";
inline const std::string kVerifyEvidence = "verify_evidence";
inline const std::string kClassifyIntent = "classify_intent";
inline const std::string kEvaluateSchema = "evaluate_schema";
inline const std::string kJudgeAddition = "judge_addition";
inline const std::string kJudgeDeprecation = "judge_deprecation";

ResponseShape triples_shape();
ResponseShape events_shape();
ResponseShape type_shape();
ResponseShape pair_verdict_shape();
ResponseShape alignment_shape();
ResponseShape evidence_verdict_shape();
ResponseShape intent_shape();
ResponseShape schema_evaluation_shape();
ResponseShape addition_judgment_shape();
ResponseShape deprecation_judgment_shape();

// Shape for a template id; throws ConfigError for unknown ids.
ResponseShape shape_for(const std::string& template_id);

ChatRequest make_request(const std::string& template_id, std::map<std::string, std::string> bindings,
                         double temperature = 0.0);

}  // namespace dialkg::prompts
