#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dialkg/adapters/chat.hpp"
#include "dialkg/adapters/embedding.hpp"
#include "dialkg/extraction.hpp"
#include "dialkg/governance.hpp"
#include "dialkg/graph_store.hpp"
#include "dialkg/mkb.hpp"
#include "dialkg/schema_evolution.hpp"

namespace dialkg {

struct BackendConfig {
  std::string kind = "mock";  // mock | http
  std::string endpoint = "http://localhost:8000/v1";
  std::string model;
  std::string embedding_model;
  std::string api_key_env = "DIALKG_API_KEY";
  double timeout_seconds = 60.0;
  int retries = 3;
  std::size_t max_concurrency = 4;
  std::size_t embedding_dimension = HashingEmbedder::kDefaultDimension;
  std::optional<std::filesystem::path> fixtures;  // overrides consulted before the mock rules
};

/// Every tunable of the loop. Unknown keys in a config file are errors.
struct PipelineConfig {
  double tau_cluster = 0.85;
  double tau_coherence = 0.80;
  double tau_target = 0.80;
  double tau_event_align = 0.80;
  std::size_t theta = 3;
  std::size_t retrieval_k = kDefaultRetrievalK;
  double required_role_ratio = 0.8;
  EventMatchWeights weights;
  std::size_t entity_candidates = 5;

  bool enable_intent = true;
  bool enable_events = true;
  bool enable_coref = true;

  LogicConfig logic;
  std::set<std::string> intent_lexicon = kDefaultIntentLexicon;

  std::filesystem::path template_dir;
  BackendConfig backend;
  bool report_timing = false;
  std::size_t threads = 1;

  static PipelineConfig defaults();
  static PipelineConfig from_json(const json& j);  // throws ConfigError
  static PipelineConfig load(const std::filesystem::path& path);
  json to_json() const;
  void validate() const;
  InductionConfig induction() const;
};

/// Model-facing dependencies of the loop.
struct Services {
  std::shared_ptr<const Embedder> embedder;
  std::shared_ptr<const ChatClient> chat;
  std::shared_ptr<const SchemaEvaluator> evaluator;  // defaults to a chat-backed evaluator

  static Services from_config(const PipelineConfig& cfg);
  // Mock backend with optional fixture overrides.
  static Services mock(const PipelineConfig& cfg, FixtureTable overrides = {});
};

struct BatchReport {
  BatchIndex batch_index = 0;
  std::string status = "committed";  // committed | aborted
  std::string abort_reason;
  std::vector<std::string> additions;
  std::vector<Deprecation> deprecations;
  std::vector<std::string> new_entities;
  std::vector<std::string> reaffirmed;
  json rejected = json::array();
  json pending = json::array();
  json conflicts = json::array();
  json skipped_documents = json::array();
  json intents = json::array();
  std::vector<std::string> empty_targets;  // evolutionary events with nothing to deprecate
  std::vector<std::string> schemas_promoted;
  std::vector<std::string> proposals_pending;
  std::vector<std::string> warnings;
  std::map<std::string, std::size_t> counts;
  std::map<std::string, double> timing_ms;

  bool aborted() const { return status == "aborted"; }
  json to_json() const;
  static BatchReport from_json(const json& j);
};

struct BatchResult {
  GraphState graph;
  MetaKnowledgeBase mkb;
  KnowledgeIncrement increment;
  BatchReport report;
};

/// The per-batch update: extract, normalize, govern, evolve schemas, integrate.
/// A failure in any stage leaves graph and MKB as they were and marks the report aborted.
class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, Services services);

  BatchResult process_batch(const std::vector<Document>& docs, const GraphState& graph, const MetaKnowledgeBase& mkb,
                            FaultInjector* faults = nullptr) const;

  const PipelineConfig& config() const { return cfg_; }
  const Services& services() const { return services_; }
  MetaKnowledgeBase fresh_mkb() const { return MetaKnowledgeBase(services_.embedder->dimension()); }

 private:
  PipelineConfig cfg_;
  Services services_;
  std::shared_ptr<const PromptLibrary> prompts_;
  RuleRouter router_;
};

/// graph.snapshot, mkb.snapshot and reports/batch_<k>.json under one directory.
class StateDir {
 public:
  explicit StateDir(std::filesystem::path root) : root_(std::move(root)) {}

  bool exists() const;
  // Fresh state when nothing has been saved yet.
  std::pair<GraphState, MetaKnowledgeBase> load(std::size_t dimension) const;
  void save(const GraphState& graph, const MetaKnowledgeBase& mkb) const;
  void save_report(const BatchReport& report) const;
  std::optional<BatchReport> load_report(BatchIndex k) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

struct StreamResult {
  GraphState graph;
  MetaKnowledgeBase mkb;
  std::vector<BatchReport> reports;
  bool aborted = false;
};

/// Threads state through the windows in order, persisting after each when a
/// state directory is given. Stops after the first aborted batch.
StreamResult run_stream(const Pipeline& pipeline, const std::vector<std::filesystem::path>& windows,
                        const std::optional<StateDir>& state = std::nullopt);

/// Human-readable graph export: entities, edges (with status and evidence) and
/// the deprecation log, as one JSON document with sorted keys.
json export_graph(const GraphState& g);

/// Entity or edge history, including deprecation records.
json inspect(const GraphState& g, const std::string& id);

}  // namespace dialkg
