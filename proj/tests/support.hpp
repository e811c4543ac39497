#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dialkg/adapters/mock_backend.hpp"
#include "dialkg/adapters/prompts.hpp"
#include "dialkg/pipeline.hpp"
#include "dialkg/text.hpp"

namespace testing {

using namespace dialkg;

inline std::filesystem::path source_dir() { return DIALKG_SOURCE_DIR; }
inline std::filesystem::path stream_window(int i) {
  return source_dir() / "data" / "stream" / ("window_" + std::to_string(i) + ".jsonl");
}

inline std::shared_ptr<const PromptLibrary> templates() {
  static auto lib = std::make_shared<PromptLibrary>(PromptLibrary::load(source_dir() / "templates"));
  return lib;
}

inline ChatClient mock_chat(FixtureTable overrides = {}) {
  return ChatClient(std::make_shared<MockChatBackend>(std::move(overrides)), templates());
}

/// Backend driven by a callback; counts calls.
class ScriptedBackend final : public ChatBackend {
 public:
  using Fn = std::function<ChatResponse(const ChatRequest&)>;
  explicit ScriptedBackend(Fn fn) : fn_(std::move(fn)) {}
  ChatResponse send(const ChatRequest& r, const std::string&) const override {
    ++calls;
    return fn_(r);
  }
  mutable std::atomic<int> calls{0};

 private:
  Fn fn_;
};

/// Always unreachable.
class DownBackend final : public ChatBackend {
 public:
  ChatResponse send(const ChatRequest&, const std::string&) const override { throw BackendUnavailable("down"); }
};

inline Pipeline mock_pipeline(PipelineConfig cfg = PipelineConfig::defaults(), FixtureTable overrides = {}) {
  return Pipeline(cfg, Services::mock(cfg, std::move(overrides)));
}

inline Document doc(std::string id, std::string text, BatchIndex window = 0) {
  return Document{std::move(id), std::move(text), window, std::nullopt};
}

inline Evidence ev(std::string text, std::string doc_id = "d") {
  const auto n = text.size();
  return Evidence{std::move(doc_id), 0, n, std::move(text)};
}

/// Fresh directory under the build tree, removed on construction.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("dialkg-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// Looks up an edge id by readable parts; entity heads/tails are given as ids.
inline std::string edge(const std::string& head, const std::string& rel, const Tail& tail) {
  return make_edge_id(head, rel, tail);
}

}  // namespace testing
