#include "dialkg/adapters/http_backend.hpp"

#include <algorithm>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace dialkg {

namespace {

struct Target {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path below the origin, no trailing slash
};

Target split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("endpoint needs a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  Target t{url.substr(0, slash), slash == std::string::npos ? "" : url.substr(slash)};
  while (!t.prefix.empty() && t.prefix.back() == '/') t.prefix.pop_back();
  return t;
}

struct GateHold {
  RequestGate& g;
  explicit GateHold(RequestGate& gate) : g(gate) { g.acquire(); }
  ~GateHold() { g.release(); }
};

}  // namespace

RequestGate::RequestGate(std::size_t cap)
    : sem_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(cap, 1, 1024))) {}

json post_json(const HttpSettings& s, RequestGate& gate, const std::string& path, const json& body) {
  const auto target = split_url(s.base_url);
  const auto timeout = std::chrono::duration<double>(s.timeout_seconds);
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt < std::max(1, s.attempts); ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(250 << (attempt - 1)));
    httplib::Result res;
    {
      GateHold hold(gate);
      httplib::Client cli(target.origin);
      cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      cli.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      cli.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      httplib::Headers headers;
      if (!s.api_key.empty()) headers.emplace("Authorization", "Bearer " + s.api_key);
      res = cli.Post(target.prefix + path, headers, body.dump(), "application/json");
    }
    if (!res) {
      last_error = httplib::to_string(res.error());
    } else if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
    } else if (res->status >= 400) {
      throw BackendUnavailable("HTTP " + std::to_string(res->status) + " from " + path + ": " + res->body);
    } else {
      try {
        return json::parse(res->body);
      } catch (const json::parse_error& e) {
        last_error = std::string("unparseable body: ") + e.what();
      }
    }
    spdlog::warn("{} attempt {} failed: {}", path, attempt + 1, last_error);
  }
  throw BackendUnavailable(path + " failed after retries: " + last_error);
}

HttpChatBackend::HttpChatBackend(HttpSettings settings)
    : settings_(std::move(settings)), gate_(std::make_unique<RequestGate>(settings_.max_concurrency)) {}

ChatResponse HttpChatBackend::send(const ChatRequest& request, const std::string& rendered_prompt) const {
  const json body = {{"model", settings_.model},
                     {"temperature", request.temperature},
                     {"response_format", {{"type", "json_object"}}},
                     {"messages", json::array({{{"role", "user"}, {"content", rendered_prompt}}})}};
  const json reply = post_json(settings_, *gate_, "/chat/completions", body);
  ChatResponse out;
  try {
    out.raw_text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw BackendUnavailable(std::string("chat reply without content: ") + e.what());
  }
  out.fields = json::parse(out.raw_text, nullptr, false);
  if (out.fields.is_discarded()) out.fields = nullptr;
  if (auto u = reply.find("usage"); u != reply.end() && u->is_object()) {
    out.usage.prompt_tokens = u->value("prompt_tokens", 0);
    out.usage.completion_tokens = u->value("completion_tokens", 0);
  }
  return out;
}

HttpEmbedder::HttpEmbedder(HttpSettings settings, std::size_t dimension)
    : settings_(std::move(settings)),
      dimension_(dimension),
      gate_(std::make_unique<RequestGate>(settings_.max_concurrency)) {}

std::vector<Embedding> HttpEmbedder::embed(std::span<const std::string> texts) const {
  if (texts.empty()) return {};
  const json body = {{"model", settings_.model}, {"input", std::vector<std::string>(texts.begin(), texts.end())}};
  const json reply = post_json(settings_, *gate_, "/embeddings", body);
  std::vector<Embedding> out(texts.size());
  try {
    for (const auto& item : reply.at("data")) {
      const auto i = item.value("index", std::size_t{0});
      auto values = item.at("embedding").get<std::vector<double>>();
      if (values.size() != dimension_) {
        throw DimensionMismatch("embedding of size " + std::to_string(values.size()) + ", expected " +
                                std::to_string(dimension_));
      }
      if (i < out.size()) out[i] = Embedding(std::move(values));
    }
  } catch (const json::exception& e) {
    throw BackendUnavailable(std::string("malformed embeddings reply: ") + e.what());
  }
  for (const auto& e : out) {
    if (e.empty()) throw BackendUnavailable("embeddings reply is missing items");
  }
  return out;
}

}  // namespace dialkg
