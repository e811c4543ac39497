#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dialkg/adapters/chat.hpp"
#include "dialkg/adapters/embedding.hpp"
#include "dialkg/common.hpp"
#include "dialkg/mkb.hpp"

namespace dialkg {

struct Document {
  std::string doc_id;
  std::string text;
  BatchIndex window_index = 0;
  std::optional<std::string> timestamp;

  bool operator==(const Document&) const = default;
};

json to_json(const Document& d);
Document document_from_json(const json& j);

// One record per line: {doc_id, text, window, timestamp?}. Throws ConfigError on
// malformed records or duplicate doc ids.
std::vector<Document> load_batch(const std::filesystem::path& path);
std::vector<Document> parse_batch(std::string_view lines, const std::string& origin = "<memory>");

struct Sentence {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Splits on ., ! and ? followed by whitespace and an upper-case letter (or end of text),
// so "v1.21" and "Inc. was" stay intact.
std::vector<Sentence> segment(std::string_view text);

enum class Track { StaticTriple, Event };
std::string_view to_string(Track t);

class StatementRouter {
 public:
  virtual ~StatementRouter() = default;
  virtual Track route(std::string_view statement) const = 0;
};

/// Event when the statement has a temporal marker, a trigger or state-transition
/// lexeme, or more than two distinct argument mentions.
class RuleRouter final : public StatementRouter {
 public:
  Track route(std::string_view statement) const override;
};

struct ExtractionContext {
  std::vector<ScoredSchema> schemas;
  std::string few_shot;

  // Text injected into the `schemas` placeholder.
  std::string schema_block() const;
};

// Cold start (no promoted schemas) yields only the few-shot block; otherwise the
// top-k schemas for the batch centroid embedding.
ExtractionContext build_context(const std::vector<Document>& batch, const MetaKnowledgeBase& mkb,
                                const Embedder& embedder, std::size_t k, std::string few_shot);

struct TripleCandidate {
  std::string head;
  std::string relation;
  std::string tail;
  std::string head_type;
  std::string tail_type;
  Evidence evidence;
  double confidence = 1.0;

  bool operator==(const TripleCandidate&) const = default;
};

struct RoleMention {
  std::string role;
  std::string mention;
  std::string type;

  bool operator==(const RoleMention&) const = default;
};

struct EventCandidate {
  std::string trigger;
  std::string event_type;
  std::vector<RoleMention> roles;
  std::optional<std::string> time;
  Evidence evidence;
  double confidence = 1.0;

  bool operator==(const EventCandidate&) const = default;
};

json to_json(const TripleCandidate& c);
json to_json(const EventCandidate& c);

struct DocumentExtraction {
  std::string doc_id;
  std::vector<TripleCandidate> triples;
  std::vector<EventCandidate> events;
  std::optional<std::string> skipped_reason;
};

class Extractor {
 public:
  Extractor(const ChatClient& chat, const StatementRouter& router) : chat_(chat), router_(router) {}

  // Candidates from sentences routed to each track, in document order.
  // Throw BackendUnavailable on adapter failure.
  std::vector<TripleCandidate> extract_triples(const Document& doc, const ExtractionContext& ctx) const;
  std::vector<EventCandidate> extract_events(const Document& doc, const ExtractionContext& ctx) const;

  // Both tracks for one document. With events disabled every sentence takes the
  // triple track; an event-routed sentence that yields no event falls back to it.
  DocumentExtraction extract(const Document& doc, const ExtractionContext& ctx, bool events_enabled) const;

  // Documents processed on up to `threads` workers; output follows input order.
  std::vector<DocumentExtraction> extract_batch(const std::vector<Document>& docs, const ExtractionContext& ctx,
                                                bool events_enabled, std::size_t threads) const;

 private:
  std::vector<TripleCandidate> triples_for(const Document& doc, const Sentence& s, const ExtractionContext& ctx) const;
  std::vector<EventCandidate> events_for(const Document& doc, const Sentence& s, const ExtractionContext& ctx) const;

  const ChatClient& chat_;
  const StatementRouter& router_;
};

}  // namespace dialkg
