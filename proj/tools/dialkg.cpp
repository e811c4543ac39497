// Command-line front end for the incremental construction loop.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "dialkg/metrics.hpp"
#include "dialkg/pipeline.hpp"

namespace fs = std::filesystem;
using namespace dialkg;

namespace {

constexpr int kOk = 0;
constexpr int kAbort = 1;
constexpr int kConfigError = 2;

struct Common {
  std::string config;
  std::string state_dir = "dialkg-state";
  std::string backend;
  bool no_intent = false;
  bool no_events = false;
  bool no_coref = false;
  std::optional<std::size_t> k;
  bool verbose = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON config file");
  cmd->add_option("--state-dir", c.state_dir, "Directory holding snapshots and reports")->capture_default_str();
  cmd->add_option("--backend", c.backend, "Model backend")->check(CLI::IsMember({"mock", "http"}));
  cmd->add_flag("--no-intent", c.no_intent, "Disable intent assessment");
  cmd->add_flag("--no-events", c.no_events, "Route every statement to the triple track");
  cmd->add_flag("--no-coref", c.no_coref, "Disable cross-batch coreference");
  cmd->add_option("--k", c.k, "Schemas retrieved per batch (default 30)")->check(CLI::PositiveNumber);
  cmd->add_flag("-v,--verbose", c.verbose, "Log progress to stderr");
}

PipelineConfig make_config(const Common& c) {
  auto cfg = c.config.empty() ? PipelineConfig::defaults() : PipelineConfig::load(c.config);
  if (!c.backend.empty()) cfg.backend.kind = c.backend;
  if (c.no_intent) cfg.enable_intent = false;
  if (c.no_events) cfg.enable_events = false;
  if (c.no_coref) cfg.enable_coref = false;
  if (c.k) cfg.retrieval_k = *c.k;
  cfg.validate();
  return cfg;
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop incremental knowledge graph construction"};
  app.require_subcommand(1);
  spdlog::set_default_logger(spdlog::stderr_color_mt("dialkg"));
  spdlog::set_level(spdlog::level::warn);

  Common common;

  auto* ingest = app.add_subcommand("ingest", "Validate a batch file");
  std::string ingest_file;
  ingest->add_option("batch", ingest_file, "Line-delimited documents")->required()->check(CLI::ExistingFile);

  auto* run = app.add_subcommand("run", "Process one batch against the saved state");
  std::string run_file;
  run->add_option("batch", run_file, "Line-delimited documents")->required()->check(CLI::ExistingFile);
  add_common(run, common);

  auto* stream = app.add_subcommand("stream", "Process windows in order");
  std::vector<std::string> windows;
  stream->add_option("windows", windows, "Window files, in order")->required()->check(CLI::ExistingFile);
  add_common(stream, common);

  auto* score = app.add_subcommand("score", "Delta-precision and D-HP for a batch report");
  std::string report_file, judgments_file;
  bool auto_judge_flag = false;
  score->add_option("report", report_file, "BatchReport JSON")->required()->check(CLI::ExistingFile);
  auto* jopt = score->add_option("--judgments", judgments_file, "Judgments JSON")->check(CLI::ExistingFile);
  auto* aopt = score->add_flag("--auto-judge", auto_judge_flag, "Ask the judge backend, using the saved graph");
  jopt->excludes(aopt);
  add_common(score, common);

  auto* exp = app.add_subcommand("export", "Write graph and MKB snapshots");
  std::string out_dir;
  exp->add_option("--out", out_dir, "Output directory (stdout graph export when omitted)");
  add_common(exp, common);

  auto* insp = app.add_subcommand("inspect", "History of an entity or edge");
  std::string inspect_id;
  insp->add_option("id", inspect_id, "Entity id (ent:...) or edge id (f:...)")->required();
  add_common(insp, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }
  if (common.verbose) spdlog::set_level(spdlog::level::info);

  try {
    if (*ingest) {
      const auto docs = load_batch(ingest_file);
      print({{"file", ingest_file}, {"documents", docs.size()}, {"valid", true}});
      return kOk;
    }

    const auto cfg = make_config(common);
    const StateDir state(common.state_dir);

    if (*run || *stream) {
      Pipeline pipeline(cfg, Services::from_config(cfg));
      std::vector<fs::path> files;
      if (*run) files.emplace_back(run_file);
      for (const auto& w : windows) files.emplace_back(w);
      const auto result = run_stream(pipeline, files, state);
      json summary = json::array();
      for (const auto& r : result.reports) {
        summary.push_back({{"batch_index", r.batch_index},
                           {"status", r.status},
                           {"additions", r.additions.size()},
                           {"deprecations", r.deprecations.size()},
                           {"new_entities", r.new_entities.size()},
                           {"rejected", r.rejected.size()},
                           {"pending", r.pending.size()},
                           {"schemas_promoted", r.schemas_promoted}});
      }
      print({{"state_dir", common.state_dir}, {"batches", summary}});
      return result.aborted ? kAbort : kOk;
    }

    if (*score) {
      const auto report = BatchReport::from_json(json::parse(slurp(report_file)));
      Judgments j;
      if (auto_judge_flag) {
        const auto services = Services::from_config(cfg);
        const auto [graph, mkb] = state.load(services.embedder->dimension());
        j = auto_judge(report, graph, *services.chat);
      } else if (!judgments_file.empty()) {
        j = Judgments::from_json(json::parse(slurp(judgments_file)));
      } else {
        throw ConfigError("score needs --judgments or --auto-judge");
      }
      print({{"batch_index", report.batch_index}, {"metrics", score_report(report, j).to_json()},
             {"judgments", j.to_json()}});
      return kOk;
    }

    const auto dim = cfg.backend.embedding_dimension;
    if (!state.exists()) throw ConfigError("no saved state in " + common.state_dir);
    const auto [graph, mkb] = state.load(dim);

    if (*exp) {
      if (out_dir.empty()) {
        print(export_graph(graph));
      } else {
        fs::create_directories(out_dir);
        std::ofstream(fs::path(out_dir) / "graph.json") << export_graph(graph).dump(2) << "\n";
        std::ofstream(fs::path(out_dir) / "graph.snapshot", std::ios::binary) << snapshot(graph);
        std::ofstream(fs::path(out_dir) / "mkb.snapshot", std::ios::binary) << mkb.snapshot();
        print({{"out", out_dir}, {"entities", graph.entities.size()}, {"edges", graph.edges.size()},
               {"schemas", mkb.schema_count()}});
      }
      return kOk;
    }

    if (*insp) {
      print(inspect(graph, inspect_id));
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kAbort;
  }
  return kOk;
}
