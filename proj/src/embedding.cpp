#include "tpot/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "tpot/error.hpp"

namespace tpot {

bool operator==(const BackendDescriptor& a, const BackendDescriptor& b) {
  return a.name == b.name && a.dimension == b.dimension && a.max_tokens == b.max_tokens;
}

std::vector<Embedding> embed_batch(std::span<const std::string> texts, EmbeddingBackend& backend) {
  require(!texts.empty(), "embed_batch: empty text list");
  for (std::size_t i = 0; i < texts.size(); ++i) {
    require(!texts[i].empty(), "embed_batch: text " + std::to_string(i) + " is empty");
  }
  const auto dim = backend.descriptor().dimension;
  auto out = backend.embed(texts);
  if (out.size() != texts.size()) {
    fail(ErrorKind::Backend, "backend returned " + std::to_string(out.size()) + " vectors for " +
                                 std::to_string(texts.size()) + " texts");
  }
  for (const auto& v : out) {
    if (v.size() != dim) {
      fail(ErrorKind::Backend, "backend returned a " + std::to_string(v.size()) +
                                   "-dimensional vector, declared " + std::to_string(dim));
    }
    for (double x : v) {
      if (!std::isfinite(x)) fail(ErrorKind::Backend, "backend returned a non-finite value");
    }
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "dimension mismatch: " + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  const double ab = dot(a, b);
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double c = ab / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

Embedding mean_pool(std::span<const Embedding> vectors) {
  require(!vectors.empty(), "mean_pool: empty vector list");
  Embedding out(vectors.front().size(), 0.0);
  for (const auto& v : vectors) {
    require(v.size() == out.size(), "mean_pool: mixed dimensions");
    for (std::size_t i = 0; i < v.size(); ++i) out[i] += v[i];
  }
  const double n = static_cast<double>(vectors.size());
  for (auto& x : out) x /= n;
  return out;
}

void round_to_f32(Embedding& v) {
  for (auto& x : v) x = static_cast<double>(static_cast<float>(x));
}

}  // namespace tpot
