#pragma once

#include <memory>
#include <mutex>
#include <string>

#include "tpot/embedding.hpp"

namespace tpot {

// Client for the embedding sidecar:
//   GET  /info      -> {"name", "dim", "max_tokens"}
//   POST /embed     {"texts": [...]} -> {"model", "dim", "max_tokens", "embeddings": [[...]]}
//   POST /tokenize  {"texts": [...]} -> {"counts": [...]}
// Requests are chunked to at most kMaxBatch texts and retried on transport
// failure.
class HttpBackend : public EmbeddingBackend {
 public:
  static constexpr std::size_t kMaxBatch = 256;

  explicit HttpBackend(const std::string& base_url, int retries = 3);
  ~HttpBackend() override;

  BackendDescriptor descriptor() const override { return descriptor_; }
  std::vector<std::size_t> count_tokens(std::span<const std::string> texts) override;

 protected:
  std::vector<Embedding> do_embed(std::span<const std::string> texts) override;

 private:
  std::string post(const std::string& path, const std::string& body);

  struct Impl;
  std::unique_ptr<Impl> impl_;
  int retries_;
  BackendDescriptor descriptor_;
};

}  // namespace tpot
