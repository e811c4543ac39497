#include "dialkg/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "dialkg/adapters/prompts.hpp"
#include "dialkg/parallel.hpp"
#include "dialkg/tagger.hpp"
#include "dialkg/text.hpp"

namespace dialkg {

namespace {

const std::set<std::string>& transition_lemmas() {
  static const std::set<std::string> s = {"acquire", "announce", "deprecate", "discontinue", "eol",
                                          "found",   "release",  "remove",    "rename",      "replace",
                                          "retire",  "succeed",  "sunset",    "introduce",   "merge"};
  return s;
}

const std::set<std::string>& temporal_words() {
  static const std::set<std::string> s = {"since",    "until",    "today",   "yesterday", "tomorrow", "currently",
                                          "formerly", "recently", "earlier", "later",     "previously"};
  return s;
}

std::string mentions_to_sentence(const std::string& mention, const Sentence& s) {
  return text::contains_ci(s.text, mention) ? mention : std::string();
}

}  // namespace

json to_json(const Document& d) {
  json j = {{"doc_id", d.doc_id}, {"text", d.text}, {"window", d.window_index}};
  if (d.timestamp) j["timestamp"] = *d.timestamp;
  return j;
}

Document document_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("document record must be an object");
  Document d;
  try {
    d.doc_id = j.at("doc_id").get<std::string>();
    d.text = j.at("text").get<std::string>();
    d.window_index = j.at("window").get<BatchIndex>();
    if (j.contains("timestamp") && !j.at("timestamp").is_null()) d.timestamp = j.at("timestamp").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad document record: ") + e.what());
  }
  if (d.doc_id.empty()) throw ConfigError("document with empty doc_id");
  return d;
}

std::vector<Document> parse_batch(std::string_view lines, const std::string& origin) {
  std::vector<Document> docs;
  std::set<std::string> seen;
  std::size_t lineno = 0;
  for (const auto& raw : text::split(lines, '\n')) {
    ++lineno;
    const auto line = text::trim(raw);
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
    Document d = document_from_json(j);
    if (!seen.insert(d.doc_id).second) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate doc_id '" + d.doc_id + "'");
    }
    docs.push_back(std::move(d));
  }
  return docs;
}

std::vector<Document> load_batch(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read batch file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_batch(ss.str(), path.string());
}

std::vector<Sentence> segment(std::string_view t) {
  std::vector<Sentence> out;
  auto emit = [&](std::size_t b, std::size_t e) {
    while (b < e && std::isspace(static_cast<unsigned char>(t[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(t[e - 1]))) --e;
    if (b < e) out.push_back({std::string(t.substr(b, e - b)), b, e});
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const char c = t[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    if (j < t.size() && !std::isspace(static_cast<unsigned char>(t[j]))) continue;
    while (j < t.size() && std::isspace(static_cast<unsigned char>(t[j]))) ++j;
    if (j < t.size() && !std::isupper(static_cast<unsigned char>(t[j])) && t[j] != '"') continue;
    emit(start, i + 1);
    start = j;
  }
  emit(start, t.size());
  return out;
}

std::string_view to_string(Track t) { return t == Track::Event ? "Event" : "StaticTriple"; }

Track RuleRouter::route(std::string_view statement) const {
  const auto toks = tagger::tokenize(statement);
  if (!tagger::find_dates(statement, toks).empty()) return Track::Event;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const std::string w = text::lower(toks[i].text);
    if (temporal_words().contains(w)) return Track::Event;
    if (w == "no" && i + 1 < toks.size() && text::lower(toks[i + 1].text) == "longer") return Track::Event;
    if (transition_lemmas().contains(text::lemmatize(w))) return Track::Event;
  }
  std::set<std::string> distinct;
  for (const auto& m : tagger::mentions(statement, toks, 0, toks.size())) distinct.insert(m.text);
  return distinct.size() > 2 ? Track::Event : Track::StaticTriple;
}

std::string ExtractionContext::schema_block() const {
  if (schemas.empty()) return "(none)";
  std::string out;
  for (const auto& s : schemas) {
    if (const auto* r = std::get_if<RelationSchema>(&s.schema)) {
      out += "relation " + r->relation_label + " (" + r->domain_type + " -> " + r->range_type + ")\n";
    } else {
      const auto& e = std::get<EventSchema>(s.schema);
      out += "event " + e.event_type + " [triggers: ";
      bool first = true;
      for (const auto& t : e.trigger_lemmas) {
        out += (first ? "" : ", ") + t;
        first = false;
      }
      out += "] (";
      for (std::size_t i = 0; i < e.roles.size(); ++i) {
        if (i) out += ", ";
        out += e.roles[i].name + ": " + e.roles[i].type + (e.roles[i].required ? "*" : "");
      }
      out += ")\n";
    }
  }
  return out;
}

ExtractionContext build_context(const std::vector<Document>& batch, const MetaKnowledgeBase& mkb,
                                const Embedder& embedder, std::size_t k, std::string few_shot) {
  ExtractionContext ctx;
  ctx.few_shot = std::move(few_shot);
  if (batch.empty() || mkb.schema_count() == 0 || k == 0) return ctx;
  std::vector<std::string> texts;
  for (const auto& d : batch) texts.push_back(d.text.empty() ? d.doc_id : d.text);
  const auto vecs = embedder.embed(texts);
  ctx.schemas = mkb.retrieve_schemas(mean_embedding(vecs), k);
  return ctx;
}

json to_json(const TripleCandidate& c) {
  return {{"kind", "triple"},
          {"head", c.head},
          {"relation", c.relation},
          {"tail", c.tail},
          {"head_type", c.head_type},
          {"tail_type", c.tail_type},
          {"evidence", to_json(c.evidence)},
          {"confidence", c.confidence}};
}

json to_json(const EventCandidate& c) {
  json roles = json::array();
  for (const auto& r : c.roles) roles.push_back({{"role", r.role}, {"mention", r.mention}, {"type", r.type}});
  json j = {{"kind", "event"},
            {"trigger", c.trigger},
            {"event_type", c.event_type},
            {"roles", roles},
            {"evidence", to_json(c.evidence)},
            {"confidence", c.confidence}};
  if (c.time) j["time"] = *c.time;
  return j;
}

std::vector<TripleCandidate> Extractor::triples_for(const Document& doc, const Sentence& s,
                                                    const ExtractionContext& ctx) const {
  const json out = chat_.call(prompts::make_request(
      prompts::kExtractTriples, {{"few_shot", ctx.few_shot}, {"schemas", ctx.schema_block()}, {"document", s.text}}));
  std::vector<TripleCandidate> result;
  for (const auto& t : out.at("triples")) {
    if (!t.is_object()) continue;
    TripleCandidate c;
    c.head = mentions_to_sentence(t.value("head", ""), s);
    c.tail = mentions_to_sentence(t.value("tail", ""), s);
    c.relation = text::trim(t.value("relation", ""));
    // Candidates whose arguments are not in the sentence would break evidence integrity.
    if (c.head.empty() || c.tail.empty() || c.relation.empty()) continue;
    c.head_type = t.value("head_type", "");
    c.tail_type = t.value("tail_type", "");
    c.confidence = std::clamp(t.value("confidence", 1.0), 0.0, 1.0);
    c.evidence = Evidence{doc.doc_id, s.begin, s.end, s.text};
    result.push_back(std::move(c));
  }
  return result;
}

std::vector<EventCandidate> Extractor::events_for(const Document& doc, const Sentence& s,
                                                  const ExtractionContext& ctx) const {
  const json out = chat_.call(prompts::make_request(
      prompts::kExtractEvents, {{"few_shot", ctx.few_shot}, {"schemas", ctx.schema_block()}, {"document", s.text}}));
  std::vector<EventCandidate> result;
  for (const auto& e : out.at("events")) {
    if (!e.is_object()) continue;
    EventCandidate c;
    c.trigger = mentions_to_sentence(e.value("trigger", ""), s);
    c.event_type = e.value("event_type", "");
    if (c.trigger.empty()) continue;
    for (const auto& r : e.value("roles", json::array())) {
      RoleMention rm{r.value("role", ""), mentions_to_sentence(r.value("mention", ""), s), r.value("type", "")};
      if (!rm.role.empty() && !rm.mention.empty()) c.roles.push_back(std::move(rm));
    }
    if (c.roles.empty()) continue;
    if (e.contains("time") && e.at("time").is_string() && !e.at("time").get<std::string>().empty()) {
      c.time = e.at("time").get<std::string>();
    }
    if (c.event_type.empty()) c.event_type = "Event";
    c.confidence = std::clamp(e.value("confidence", 1.0), 0.0, 1.0);
    c.evidence = Evidence{doc.doc_id, s.begin, s.end, s.text};
    result.push_back(std::move(c));
  }
  return result;
}

std::vector<TripleCandidate> Extractor::extract_triples(const Document& doc, const ExtractionContext& ctx) const {
  std::vector<TripleCandidate> out;
  for (const auto& s : segment(doc.text)) {
    if (router_.route(s.text) != Track::StaticTriple) continue;
    auto part = triples_for(doc, s, ctx);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<EventCandidate> Extractor::extract_events(const Document& doc, const ExtractionContext& ctx) const {
  std::vector<EventCandidate> out;
  for (const auto& s : segment(doc.text)) {
    if (router_.route(s.text) != Track::Event) continue;
    auto part = events_for(doc, s, ctx);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

DocumentExtraction Extractor::extract(const Document& doc, const ExtractionContext& ctx, bool events_enabled) const {
  DocumentExtraction out{doc.doc_id, {}, {}, std::nullopt};
  for (const auto& s : segment(doc.text)) {
    if (events_enabled && router_.route(s.text) == Track::Event) {
      auto evs = events_for(doc, s, ctx);
      if (!evs.empty()) {
        out.events.insert(out.events.end(), evs.begin(), evs.end());
        continue;
      }
    }
    auto ts = triples_for(doc, s, ctx);
    out.triples.insert(out.triples.end(), ts.begin(), ts.end());
  }
  return out;
}

std::vector<DocumentExtraction> Extractor::extract_batch(const std::vector<Document>& docs,
                                                         const ExtractionContext& ctx, bool events_enabled,
                                                         std::size_t threads) const {
  std::vector<DocumentExtraction> out(docs.size());
  parallel_for(docs.size(), threads, [&](std::size_t i) {
    try {
      out[i] = extract(docs[i], ctx, events_enabled);
    } catch (const BackendUnavailable& e) {
      out[i] = DocumentExtraction{docs[i].doc_id, {}, {}, std::string(e.what())};
    }
  });
  return out;
}

}  // namespace dialkg
