#include "mdlvae/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "mdlvae/error.hpp"
#include "text_io.hpp"

namespace mdlvae {

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim) {
  if (dim == 0) fail(ErrorKind::domain, "embedding dimension must be positive");
}

void EmbeddingTable::add(const std::string& term, Vector vector, std::optional<std::string> cluster) {
  if (term.empty()) fail(ErrorKind::domain, "embedding term must be non-empty");
  if (vectors_.contains(term)) fail(ErrorKind::domain, "duplicate embedding term '" + term + "'");
  if (vector.size() != dim_) {
    fail(ErrorKind::shape, "embedding for '" + term + "' has length " + std::to_string(vector.size()) +
                               ", expected " + std::to_string(dim_));
  }
  for (double v : vector)
    if (!std::isfinite(v)) fail(ErrorKind::numeric, "embedding for '" + term + "' is not finite");
  terms_.push_back(term);
  vectors_.emplace(term, std::move(vector));
  if (cluster) clusters_.emplace(term, std::move(*cluster));
}

bool EmbeddingTable::contains(const std::string& term) const { return vectors_.contains(term); }

const Vector& EmbeddingTable::at(const std::string& term) const {
  const auto it = vectors_.find(term);
  if (it == vectors_.end()) fail(ErrorKind::lookup, "unknown embedding term '" + term + "'");
  return it->second;
}

std::optional<std::string> EmbeddingTable::cluster(const std::string& term) const {
  const auto it = clusters_.find(term);
  if (it == clusters_.end()) return std::nullopt;
  return it->second;
}

Matrix EmbeddingTable::as_matrix() const {
  Matrix m(terms_.size(), dim_);
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const Vector& v = vectors_.at(terms_[i]);
    std::copy(v.begin(), v.end(), m.row(i).begin());
  }
  return m;
}

ConceptVector combine_sum(const EmbeddingTable& table, std::span<const std::string> terms,
                          const std::string& label) {
  if (terms.empty()) fail(ErrorKind::domain, "combine_sum: empty term list");
  ConceptVector out{label, Vector(table.dim(), 0.0), {terms.begin(), terms.end()}};
  // Summing in sorted order makes the result independent of the caller's order.
  std::vector<std::string> sorted(terms.begin(), terms.end());
  std::sort(sorted.begin(), sorted.end());
  for (const auto& term : sorted) {
    const Vector& v = table.at(term);
    for (std::size_t j = 0; j < v.size(); ++j) out.vector[j] += v[j];
  }
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorKind::shape, "cosine_similarity: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) fail(ErrorKind::domain, "cosine_similarity: zero-norm vector");
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

double semantic_coherence(const ConceptVector& concept_vector, const EmbeddingTable& table) {
  if (concept_vector.members.empty()) fail(ErrorKind::domain, "semantic_coherence: concept has no members");
  double total = 0.0;
  for (const auto& member : concept_vector.members) {
    total += cosine_similarity(concept_vector.vector, table.at(member));
  }
  return total / static_cast<double>(concept_vector.members.size());
}

double dispersion(const Matrix& vectors) {
  const std::size_t n = vectors.rows();
  if (n < 2) fail(ErrorKind::domain, "dispersion: needs at least two vectors");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = vectors.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto b = vectors.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
      total += std::sqrt(s);
    }
  }
  return total / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

double dispersion(const std::vector<Vector>& vectors) {
  if (vectors.size() < 2) fail(ErrorKind::domain, "dispersion: needs at least two vectors");
  const std::size_t d = vectors.front().size();
  Matrix m(vectors.size(), d);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != d) fail(ErrorKind::shape, "dispersion: vectors differ in length");
    std::copy(vectors[i].begin(), vectors[i].end(), m.row(i).begin());
  }
  return dispersion(m);
}

EmbeddingTable load_embedding_json(const std::string& path) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(detail::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, "embedding file '" + path + "': " + e.what());
  }
  if (!doc.contains("dim") || !doc.contains("entries") || !doc["entries"].is_object()) {
    fail(ErrorKind::parse, "embedding file '" + path + "' needs 'dim' and an 'entries' object");
  }
  try {
    EmbeddingTable table(doc["dim"].get<std::size_t>());
    const auto clusters = doc.value("clusters", nlohmann::ordered_json::object());
    for (const auto& [term, values] : doc["entries"].items()) {
      std::optional<std::string> cluster;
      if (clusters.contains(term)) cluster = clusters[term].get<std::string>();
      table.add(term, values.get<Vector>(), cluster);
    }
    return table;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, "embedding file '" + path + "': " + e.what());
  }
}

void save_embedding_json(const EmbeddingTable& table, const std::string& path) {
  nlohmann::ordered_json doc;
  doc["dim"] = table.dim();
  doc["entries"] = nlohmann::ordered_json::object();
  doc["clusters"] = nlohmann::ordered_json::object();
  for (const auto& term : table.terms()) {
    doc["entries"][term] = table.at(term);
    if (auto c = table.cluster(term)) doc["clusters"][term] = *c;
  }
  detail::write_file(path, doc.dump(2) + "\n");
}

EmbeddingTable load_embedding_csv(const std::string& path) {
  const auto lines = detail::read_lines(path);
  std::optional<EmbeddingTable> table;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = detail::split_csv_line(lines[i]);
    if (cells.size() < 2) fail(ErrorKind::parse, path + ":" + std::to_string(i + 1) + ": expected term and values");
    if (i == 0 && !detail::parse_double(cells[1])) continue;  // header
    Vector values;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const auto v = detail::parse_double(cells[c]);
      if (!v) {
        fail(ErrorKind::parse, path + ": non-numeric cell '" + cells[c] + "' at line " + std::to_string(i + 1) +
                                   " column " + std::to_string(c + 1));
      }
      values.push_back(*v);
    }
    if (!table) table.emplace(values.size());
    table->add(cells[0], std::move(values));
  }
  if (!table) fail(ErrorKind::parse, "embedding CSV '" + path + "' has no rows");
  return std::move(*table);
}

}  // namespace mdlvae
