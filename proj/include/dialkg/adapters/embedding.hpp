#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dialkg/common.hpp"

namespace dialkg {

/// L2-normalized real vector. Cosine similarity reduces to a dot product.
class Embedding {
 public:
  Embedding() = default;
  // Normalizes `values`; an all-zero input stays zero.
  explicit Embedding(std::vector<double> values);

  // Wraps values that are already unit length (snapshot restore), bit-for-bit.
  static Embedding from_normalized(std::vector<double> values);

  std::size_t dimension() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  bool empty() const { return values_.empty(); }

  bool operator==(const Embedding&) const = default;

 private:
  std::vector<double> values_;
};

// Throws DimensionMismatch when the vectors differ in size.
double cosine(const Embedding& a, const Embedding& b);

// Normalized arithmetic mean; empty input yields an empty embedding.
Embedding mean_embedding(std::span<const Embedding> items);

json to_json(const Embedding& e);
Embedding embedding_from_json(const json& j);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dimension() const = 0;
  // Order-preserving. Implementations must be safe for concurrent calls.
  virtual std::vector<Embedding> embed(std::span<const std::string> texts) const = 0;

  Embedding embed_one(std::string_view text) const;
};

/// Deterministic character n-gram hashing embedder. Text is lowercased and
/// padded with '#' so word boundaries contribute their own n-grams.
class HashingEmbedder final : public Embedder {
 public:
  static constexpr std::size_t kDefaultDimension = 256;

  explicit HashingEmbedder(std::size_t dimension = kDefaultDimension, std::size_t ngram = 3);

  std::size_t dimension() const override { return dimension_; }
  std::vector<Embedding> embed(std::span<const std::string> texts) const override;

  // Raw (unnormalized) n-gram list for a text; exposed for tests.
  std::vector<std::string> ngrams(std::string_view text) const;

 private:
  std::size_t dimension_;
  std::size_t ngram_;
};

}  // namespace dialkg
