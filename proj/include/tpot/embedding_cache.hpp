#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include "tpot/embedding.hpp"

namespace tpot {

// Append-only on-disk map from (backend name, exact text) to embedding.
//
// File layout: the magic bytes "TPOTCACHE1", then records of
//   u32 key length | key bytes | u32 dim | dim x f32
// all little endian. A truncated trailing record (interrupted write) is
// ignored on load and overwritten by the next append.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::filesystem::path file);

  std::optional<Embedding> find(std::string_view backend, std::string_view text) const;
  void insert(std::string_view backend, std::string_view text, const Embedding& v);

  std::size_t size() const;
  const std::filesystem::path& path() const { return path_; }

  static std::string key(std::string_view backend, std::string_view text);

 private:
  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, Embedding> entries_;
  std::ofstream out_;
};

// Serves repeated texts from the cache and forwards only misses (deduplicated)
// to the wrapped encoder.
class CachingBackend : public EmbeddingBackend {
 public:
  CachingBackend(std::unique_ptr<EmbeddingBackend> inner, std::shared_ptr<EmbeddingCache> cache);

  BackendDescriptor descriptor() const override { return descriptor_; }
  std::vector<std::size_t> count_tokens(std::span<const std::string> texts) override {
    return inner_->count_tokens(texts);
  }
  std::uint64_t encoder_calls() const override { return inner_->encoder_calls(); }

  EmbeddingBackend& inner() { return *inner_; }

 protected:
  std::vector<Embedding> do_embed(std::span<const std::string> texts) override;

 private:
  std::unique_ptr<EmbeddingBackend> inner_;
  std::shared_ptr<EmbeddingCache> cache_;
  BackendDescriptor descriptor_;
};

}  // namespace tpot
