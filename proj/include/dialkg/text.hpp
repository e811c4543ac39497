#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dialkg::text {

std::string lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> words(std::string_view s);
bool contains_ci(std::string_view haystack, std::string_view needle);
bool starts_upper(std::string_view token);

// "Kubernetes Control-Plane" -> "kubernetes_control_plane"
std::string slug(std::string_view s);

// Table-driven lemmatizer for the verbs and nominalizations the pipeline
// cares about. Unknown tokens come back lowercased and unchanged.
std::string lemmatize(std::string_view token);

// Lowercase, whitespace/hyphen to underscore, head token lemmatized.
// "Acquired By" -> "acquire_by", "acquisition_of" -> "acquire_of".
std::string normalize_relation_label(std::string_view label);

// Semantic key used for relation similarity: the normalized label with
// particles and auxiliaries dropped. "acquired_by" and "acquisition_of"
// share the key "acquire"; "has_status" and "status" share "status".
std::string relation_key(std::string_view label);

bool is_year(std::string_view token);
bool is_version(std::string_view token);
bool is_number(std::string_view token);

// Surface forms that should be stored as literal values rather than entities:
// years, dates, versions, numbers and all-lowercase phrases.
bool is_literal_like(std::string_view mention);

}  // namespace dialkg::text
