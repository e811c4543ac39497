#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dialkg {

using json = nlohmann::json;

/// Index of a streaming batch. A fresh graph sits at -1; the first batch is 0.
using BatchIndex = std::int64_t;

inline constexpr BatchIndex kNoBatch = -1;

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CorruptSnapshot : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class DuplicateSchemaLabel : public Error {
 public:
  using Error::Error;
};

class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

// Raised by fixture-driven backends when no fixture covers a request.
class FixtureMiss : public BackendUnavailable {
 public:
  using BackendUnavailable::BackendUnavailable;
};

// A judge-style call failed; the candidate is parked rather than decided.
class JudgeUnavailable : public BackendUnavailable {
 public:
  using BackendUnavailable::BackendUnavailable;
};

class MissingRequiredRole : public Error {
 public:
  using Error::Error;
};

class MissingJudgment : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A span of source text backing a candidate or fact.
struct Evidence {
  std::string doc_id;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string text;

  auto operator<=>(const Evidence&) const = default;
};

json to_json(const Evidence& e);
Evidence evidence_from_json(const json& j);

/// Closed day interval. Bare years expand to the whole year, months to the whole month.
struct TimeInterval {
  std::chrono::sys_days first;
  std::chrono::sys_days last;

  bool overlaps(const TimeInterval& other) const {
    return first <= other.last && other.first <= last;
  }
  auto operator<=>(const TimeInterval&) const = default;

  // Accepts "2021", "2021-03", "2021-03-04", "September 4, 1998", and "A/B" ranges.
  static std::optional<TimeInterval> parse(std::string_view text);
  std::string to_string() const;
};

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace dialkg
