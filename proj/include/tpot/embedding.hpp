#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tpot {

// Embedding values are always representable as f32 (backends round at the
// boundary) but arithmetic is carried out in double.
using Embedding = std::vector<double>;

struct BackendDescriptor {
  std::string name;
  std::size_t dimension = 768;
  std::size_t max_tokens = 512;
};

bool operator==(const BackendDescriptor& a, const BackendDescriptor& b);

// Contract every sentence encoder satisfies. Implementations must be safe to
// call from several threads at once.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;

  virtual BackendDescriptor descriptor() const = 0;

  // One vector per text, order preserved; texts longer than max_tokens are
  // truncated before pooling.
  std::vector<Embedding> embed(std::span<const std::string> texts) {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return do_embed(texts);
  }

  // Untruncated token counts.
  virtual std::vector<std::size_t> count_tokens(std::span<const std::string> texts) = 0;

  // Number of embed calls that reached the underlying encoder.
  virtual std::uint64_t encoder_calls() const { return calls_.load(std::memory_order_relaxed); }

 protected:
  virtual std::vector<Embedding> do_embed(std::span<const std::string> texts) = 0;

 private:
  std::atomic<std::uint64_t> calls_{0};
};

// Validating front door: rejects empty input and checks that the backend
// honored its declared dimension and produced finite values.
std::vector<Embedding> embed_batch(std::span<const std::string> texts, EmbeddingBackend& backend);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);

// Cosine similarity; 0 when either vector is all zero.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

Embedding mean_pool(std::span<const Embedding> vectors);

// Round every entry to the nearest f32, the precision backends deliver.
void round_to_f32(Embedding& v);

}  // namespace tpot
