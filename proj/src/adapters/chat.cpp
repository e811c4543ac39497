#include "dialkg/adapters/chat.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "dialkg/text.hpp"

namespace dialkg {

namespace {

const char* kind_name(FieldKind k) {
  switch (k) {
    case FieldKind::String: return "string";
    case FieldKind::Number: return "number";
    case FieldKind::Boolean: return "boolean";
    case FieldKind::Array: return "array";
    case FieldKind::Object: return "object";
  }
  return "?";
}

bool kind_matches(FieldKind k, const json& v) {
  switch (k) {
    case FieldKind::String: return v.is_string();
    case FieldKind::Number: return v.is_number();
    case FieldKind::Boolean: return v.is_boolean();
    case FieldKind::Array: return v.is_array();
    case FieldKind::Object: return v.is_object();
  }
  return false;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::optional<std::string> ResponseShape::validate(const json& value) const {
  if (!value.is_object()) return "response is not an object";
  for (const auto& f : fields) {
    auto it = value.find(f.name);
    if (it == value.end() || it->is_null()) {
      if (f.required) return "missing field '" + f.name + "'";
      continue;
    }
    if (!kind_matches(f.kind, *it)) {
      return "field '" + f.name + "' is not a " + kind_name(f.kind);
    }
    if (!f.allowed.empty()) {
      const auto s = it->get<std::string>();
      if (std::find(f.allowed.begin(), f.allowed.end(), s) == f.allowed.end()) {
        return "field '" + f.name + "' has unexpected value '" + s + "'";
      }
    }
  }
  return std::nullopt;
}

std::string ResponseShape::describe() const {
  std::string out = "{";
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const auto& f = fields[i];
    if (i) out += ", ";
    out += "\"" + f.name + "\": " + kind_name(f.kind);
    if (!f.allowed.empty()) {
      out += " (one of";
      for (const auto& a : f.allowed) out += " " + a;
      out += ")";
    }
    if (!f.required) out += " (optional)";
  }
  return out + "}";
}

std::string ChatRequest::fingerprint() const {
  std::string buf = template_id;
  buf += '\x1e';
  for (const auto& [k, v] : bindings) {
    buf += k;
    buf += '\x1f';
    buf += v;
    buf += '\x1e';
  }
  return hex64(fnv1a64(buf));
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
  PromptLibrary lib;
  if (!std::filesystem::is_directory(dir)) throw ConfigError("template dir not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) lib.add(f.stem().string(), read_file(f));
  return lib;
}

void PromptLibrary::add(std::string id, std::string text) { templates_[std::move(id)] = std::move(text); }

const std::string& PromptLibrary::text(const std::string& id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) throw ConfigError("unknown prompt template '" + id + "'");
  return it->second;
}

std::vector<std::string> PromptLibrary::placeholders(const std::string& id) const {
  const std::string& t = text(id);
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = t.find("{{", pos)) != std::string::npos) {
    auto end = t.find("}}", pos + 2);
    if (end == std::string::npos) break;
    std::string name = text::trim(std::string_view(t).substr(pos + 2, end - pos - 2));
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    pos = end + 2;
  }
  return out;
}

std::string PromptLibrary::render(const std::string& id,
                                  const std::map<std::string, std::string>& bindings) const {
  const std::string& t = text(id);
  std::string out;
  std::size_t pos = 0;
  while (true) {
    auto open = t.find("{{", pos);
    if (open == std::string::npos) {
      out.append(t, pos);
      break;
    }
    auto close = t.find("}}", open + 2);
    if (close == std::string::npos) {
      out.append(t, pos);
      break;
    }
    out.append(t, pos, open - pos);
    std::string name = text::trim(std::string_view(t).substr(open + 2, close - open - 2));
    auto it = bindings.find(name);
    if (it == bindings.end()) {
      throw ConfigError("template '" + id + "' placeholder '" + name + "' is unbound");
    }
    out += it->second;
    pos = close + 2;
  }
  return out;
}

ChatClient::ChatClient(std::shared_ptr<const ChatBackend> backend,
                       std::shared_ptr<const PromptLibrary> prompts)
    : backend_(std::move(backend)), prompts_(std::move(prompts)) {
  if (!backend_ || !prompts_) throw ConfigError("chat client needs a backend and prompts");
}

json ChatClient::call(const ChatRequest& request) const {
  auto bindings = request.bindings;
  bindings.try_emplace("response_format", request.shape.describe());
  const std::string rendered = prompts_->render(request.template_id, bindings);
  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    ChatResponse resp = backend_->send(request, rendered);
    if (resp.fields.is_null()) {
      last_error = "unparseable output";
      continue;
    }
    if (auto err = request.shape.validate(resp.fields)) {
      last_error = *err;
      continue;
    }
    return resp.fields;
  }
  throw BackendUnavailable("'" + request.template_id + "' returned malformed output twice: " + last_error);
}

FixtureTable FixtureTable::load(const std::filesystem::path& path) {
  return parse(read_file(path), path.string());
}

FixtureTable FixtureTable::parse(std::string_view lines, const std::string& origin) {
  FixtureTable table;
  std::size_t lineno = 0;
  for (const auto& raw : text::split(lines, '\n')) {
    ++lineno;
    const std::string line = text::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.contains("response")) throw ConfigError(origin + ":" + std::to_string(lineno) + ": no response");
    if (j.contains("fingerprint")) {
      table.add_fingerprint(j.at("fingerprint").get<std::string>(), j.at("response"));
    } else {
      std::map<std::string, std::string> match;
      if (j.contains("match")) {
        for (const auto& [k, v] : j.at("match").items()) match[k] = v.get<std::string>();
      }
      table.add_match(j.at("template").get<std::string>(), std::move(match), j.at("response"));
    }
  }
  return table;
}

void FixtureTable::add_match(std::string template_id, std::map<std::string, std::string> match,
                             json response) {
  records_.push_back(Record{std::move(template_id), std::move(match), {}, std::move(response)});
}

void FixtureTable::add_fingerprint(std::string fingerprint, json response) {
  records_.push_back(Record{{}, {}, std::move(fingerprint), std::move(response)});
}

void FixtureTable::append(const FixtureTable& other) {
  records_.insert(records_.end(), other.records_.begin(), other.records_.end());
}

std::optional<json> FixtureTable::lookup(const ChatRequest& request) const {
  std::string fp;
  for (const auto& r : records_) {
    if (!r.fingerprint.empty()) {
      if (fp.empty()) fp = request.fingerprint();
      if (r.fingerprint == fp) return r.response;
      continue;
    }
    if (r.template_id != request.template_id) continue;
    bool ok = true;
    for (const auto& [k, v] : r.match) {
      auto it = request.bindings.find(k);
      if (it == request.bindings.end() || it->second != v) {
        ok = false;
        break;
      }
    }
    if (ok) return r.response;
  }
  return std::nullopt;
}

ChatResponse FixtureChatBackend::send(const ChatRequest& request, const std::string&) const {
  auto hit = table_.lookup(request);
  if (!hit) {
    throw FixtureMiss("no fixture for '" + request.template_id + "' fingerprint " + request.fingerprint());
  }
  return ChatResponse{*hit, hit->dump(), {}};
}

}  // namespace dialkg
