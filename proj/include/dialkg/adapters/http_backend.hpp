#pragma once

#include <chrono>
#include <memory>
#include <semaphore>
#include <string>

#include "dialkg/adapters/chat.hpp"
#include "dialkg/adapters/embedding.hpp"

namespace dialkg {

struct HttpSettings {
  std::string base_url;  // e.g. https://api.example.com/v1
  std::string model;
  std::string api_key;
  double timeout_seconds = 60.0;
  int attempts = 3;
  std::size_t max_concurrency = 4;
};

// Bounded concurrent-request gate shared by the HTTP adapters.
class RequestGate {
 public:
  explicit RequestGate(std::size_t cap);
  void acquire() { sem_.acquire(); }
  void release() { sem_.release(); }

 private:
  std::counting_semaphore<1024> sem_;
};

/// POSTs `body` as JSON to `path` below the base URL with exponential backoff.
/// Retries transport errors, 429 and 5xx; throws BackendUnavailable when exhausted.
json post_json(const HttpSettings& s, RequestGate& gate, const std::string& path, const json& body);

/// Chat-completions wire format; asks for a JSON object reply.
class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpSettings settings);
  ChatResponse send(const ChatRequest& request, const std::string& rendered_prompt) const override;

 private:
  HttpSettings settings_;
  std::unique_ptr<RequestGate> gate_;
};

/// Embeddings wire format; vectors are normalized on arrival.
class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(HttpSettings settings, std::size_t dimension);
  std::size_t dimension() const override { return dimension_; }
  std::vector<Embedding> embed(std::span<const std::string> texts) const override;

 private:
  HttpSettings settings_;
  std::size_t dimension_;
  std::unique_ptr<RequestGate> gate_;
};

}  // namespace dialkg
