#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mdlvae/numerics.hpp"

namespace mdlvae {

// Term -> d-vector store with optional concept-cluster labels (sign, meaning
// or reference groupings are plain strings here). Insertion order is kept.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return terms_.size(); }
  const std::vector<std::string>& terms() const noexcept { return terms_; }

  // Throws a domain error on an empty or duplicate term or a wrong length.
  void add(const std::string& term, Vector vector, std::optional<std::string> cluster = std::nullopt);

  bool contains(const std::string& term) const;
  // Throws a lookup error for unknown terms.
  const Vector& at(const std::string& term) const;
  std::optional<std::string> cluster(const std::string& term) const;

  // Rows in insertion order.
  Matrix as_matrix() const;

 private:
  std::size_t dim_;
  std::vector<std::string> terms_;
  std::map<std::string, Vector> vectors_;
  std::map<std::string, std::string> clusters_;
};

struct ConceptVector {
  std::string label;
  Vector vector;
  std::vector<std::string> members;
};

ConceptVector combine_sum(const EmbeddingTable& table, std::span<const std::string> terms,
                          const std::string& label);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Mean cosine similarity between the combined vector and each member.
double semantic_coherence(const ConceptVector& concept_vector, const EmbeddingTable& table);

// Mean pairwise Euclidean distance over all unordered pairs of rows.
double dispersion(const Matrix& vectors);
double dispersion(const std::vector<Vector>& vectors);

// JSON: {"dim": d, "entries": {term: [..]}, "clusters": {term: label}}.
EmbeddingTable load_embedding_json(const std::string& path);
void save_embedding_json(const EmbeddingTable& table, const std::string& path);
// CSV: first column is the term, remaining columns are floats. A header row
// is accepted when its second cell is not numeric.
EmbeddingTable load_embedding_csv(const std::string& path);

}  // namespace mdlvae
