#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "tpot/catalog.hpp"
#include "tpot/embedding.hpp"

namespace tpot {

inline constexpr std::size_t kDefaultTestDimension = 96;

struct BackendSpec {
  enum class Kind { Test, Http } kind = Kind::Test;
  std::uint64_t seed = 0;
  std::size_t dimension = kDefaultTestDimension;
  std::size_t max_tokens = 512;
  std::string url;
};

// "test:<seed>[:<dim>[:<max_tokens>]]" or "http:<url>", e.g.
// "http:http://127.0.0.1:8471".
BackendSpec parse_backend_spec(std::string_view spec);

// Builds the encoder. A test backend with room for the synthetic lexicon gets
// it registered. With a cache directory the encoder is wrapped in a
// CachingBackend over <cache_dir>/embeddings.bin.
std::unique_ptr<EmbeddingBackend> open_backend(const BackendSpec& spec, const Catalog& catalog,
                                               const std::optional<std::filesystem::path>& cache_dir);

}  // namespace tpot
