#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dialkg/common.hpp"

namespace dialkg {

/// Sampling temperature for every judge-style call.
inline constexpr double kJudgeTemperature = 0.1;

enum class FieldKind { String, Number, Boolean, Array, Object };

struct FieldSpec {
  std::string name;
  FieldKind kind = FieldKind::String;
  bool required = true;
  std::vector<std::string> allowed;  // enumerated values for String fields
};

/// Describes the structured fields a response must carry.
struct ResponseShape {
  std::string name;
  std::vector<FieldSpec> fields;

  // Empty when `value` conforms, else a description of the first violation.
  std::optional<std::string> validate(const json& value) const;
  // Human/LLM readable field list, used in rendered prompts.
  std::string describe() const;
};

struct ChatRequest {
  std::string template_id;
  std::map<std::string, std::string> bindings;
  double temperature = 0.0;
  ResponseShape shape;

  // Stable hash over (template id, sorted bindings).
  std::string fingerprint() const;
};

struct TokenUsage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct ChatResponse {
  json fields;  // null when the backend output could not be parsed
  std::string raw_text;
  TokenUsage usage;
};

/// Prompt templates with `{{name}}` placeholders, one file per template id.
class PromptLibrary {
 public:
  PromptLibrary() = default;
  static PromptLibrary load(const std::filesystem::path& dir);

  void add(std::string id, std::string text);
  bool has(const std::string& id) const { return templates_.contains(id); }
  const std::string& text(const std::string& id) const;
  std::vector<std::string> placeholders(const std::string& id) const;
  // Throws ConfigError for an unknown template or an unbound placeholder.
  std::string render(const std::string& id, const std::map<std::string, std::string>& bindings) const;

 private:
  std::map<std::string, std::string> templates_;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // Implementations must be safe for concurrent calls. Throws BackendUnavailable.
  virtual ChatResponse send(const ChatRequest& request, const std::string& rendered_prompt) const = 0;
};

/// Front door for all structured LLM calls: renders the template, dispatches,
/// validates the response shape and retries a malformed response once.
class ChatClient {
 public:
  ChatClient(std::shared_ptr<const ChatBackend> backend, std::shared_ptr<const PromptLibrary> prompts);

  json call(const ChatRequest& request) const;

  const PromptLibrary& prompts() const { return *prompts_; }

 private:
  std::shared_ptr<const ChatBackend> backend_;
  std::shared_ptr<const PromptLibrary> prompts_;
};

/// Line-delimited fixture records:
///   {"template": id, "match": {binding: value, ...}, "response": {...}}
///   {"fingerprint": hex, "response": {...}}
/// `match` needs only the listed bindings to be equal; first record wins.
class FixtureTable {
 public:
  static FixtureTable load(const std::filesystem::path& path);
  static FixtureTable parse(std::string_view lines, const std::string& origin = "<memory>");

  void add_match(std::string template_id, std::map<std::string, std::string> match, json response);
  void add_fingerprint(std::string fingerprint, json response);
  void append(const FixtureTable& other);

  std::optional<json> lookup(const ChatRequest& request) const;
  std::size_t size() const { return records_.size(); }

 private:
  struct Record {
    std::string template_id;
    std::map<std::string, std::string> match;
    std::string fingerprint;
    json response;
  };
  std::vector<Record> records_;
};

/// Pure fixture replay; fails loudly with FixtureMiss on an uncovered request.
class FixtureChatBackend final : public ChatBackend {
 public:
  explicit FixtureChatBackend(FixtureTable table) : table_(std::move(table)) {}
  ChatResponse send(const ChatRequest& request, const std::string& rendered_prompt) const override;

 private:
  FixtureTable table_;
};

}  // namespace dialkg
