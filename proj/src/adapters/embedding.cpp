#include "dialkg/adapters/embedding.hpp"

#include <cmath>

#include "dialkg/text.hpp"

namespace dialkg {

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
  double norm = 0.0;
  for (double v : values_) norm += v * v;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& v : values_) v /= norm;
  }
}

Embedding Embedding::from_normalized(std::vector<double> values) {
  Embedding e;
  e.values_ = std::move(values);
  return e;
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.dimension() != b.dimension()) {
    throw DimensionMismatch("embedding dimension " + std::to_string(a.dimension()) + " vs " +
                            std::to_string(b.dimension()));
  }
  double dot = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) dot += av[i] * bv[i];
  return dot;
}

Embedding mean_embedding(std::span<const Embedding> items) {
  if (items.empty()) return {};
  std::vector<double> acc(items.front().dimension(), 0.0);
  for (const auto& e : items) {
    if (e.dimension() != acc.size()) throw DimensionMismatch("mean over mixed dimensions");
    auto v = e.values();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
  }
  for (double& v : acc) v /= static_cast<double>(items.size());
  return Embedding(std::move(acc));
}

json to_json(const Embedding& e) {
  return json(std::vector<double>(e.values().begin(), e.values().end()));
}

Embedding embedding_from_json(const json& j) {
  return Embedding::from_normalized(j.get<std::vector<double>>());
}

Embedding Embedder::embed_one(std::string_view text) const {
  std::string s(text);
  auto out = embed(std::span<const std::string>(&s, 1));
  return std::move(out.front());
}

HashingEmbedder::HashingEmbedder(std::size_t dimension, std::size_t ngram)
    : dimension_(dimension), ngram_(ngram) {
  if (dimension_ == 0 || ngram_ == 0) throw ConfigError("hashing embedder needs dimension, n > 0");
}

std::vector<std::string> HashingEmbedder::ngrams(std::string_view text) const {
  const std::string padded = "#" + text::lower(text::trim(text)) + "#";
  std::vector<std::string> out;
  if (padded.size() < ngram_) {
    out.push_back(padded);
    return out;
  }
  for (std::size_t i = 0; i + ngram_ <= padded.size(); ++i) out.push_back(padded.substr(i, ngram_));
  return out;
}

std::vector<Embedding> HashingEmbedder::embed(std::span<const std::string> texts) const {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    std::vector<double> v(dimension_, 0.0);
    for (const auto& g : ngrams(t)) v[fnv1a64(g) % dimension_] += 1.0;
    out.emplace_back(std::move(v));
  }
  return out;
}

}  // namespace dialkg
