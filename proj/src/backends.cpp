#include "tpot/backends.hpp"

#include <charconv>

#include "tpot/embedding_cache.hpp"
#include "tpot/error.hpp"
#include "tpot/http_backend.hpp"
#include "tpot/synthetic.hpp"
#include "tpot/test_backend.hpp"

namespace tpot {

namespace {

template <class T>
T parse_number(std::string_view text, std::string_view what) {
  T value{};
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    fail(ErrorKind::Validation, "backend spec: bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

// Topic directions used by the synthetic lexicon.
constexpr std::size_t kLexiconDirections = kItemCount + kFacetCount;

}  // namespace

BackendSpec parse_backend_spec(std::string_view spec) {
  BackendSpec out;
  if (spec.starts_with("http:")) {
    out.kind = BackendSpec::Kind::Http;
    out.url = std::string(spec.substr(5));
    if (out.url.empty()) fail(ErrorKind::Validation, "backend spec: http needs a URL");
    return out;
  }
  if (!spec.starts_with("test:")) {
    fail(ErrorKind::Validation, "backend spec '" + std::string(spec) + "': expected test:<seed> or http:<url>");
  }
  std::vector<std::string_view> parts;
  auto rest = spec.substr(5);
  while (true) {
    const auto colon = rest.find(':');
    parts.push_back(rest.substr(0, colon));
    if (colon == std::string_view::npos) break;
    rest = rest.substr(colon + 1);
  }
  if (parts.size() > 3) fail(ErrorKind::Validation, "backend spec: too many fields in '" + std::string(spec) + "'");
  out.seed = parse_number<std::uint64_t>(parts[0], "seed");
  if (parts.size() > 1) out.dimension = parse_number<std::size_t>(parts[1], "dimension");
  if (parts.size() > 2) out.max_tokens = parse_number<std::size_t>(parts[2], "max_tokens");
  if (out.dimension < 2) fail(ErrorKind::Validation, "backend spec: dimension must be at least 2");
  if (out.max_tokens < 1) fail(ErrorKind::Validation, "backend spec: max_tokens must be positive");
  return out;
}

std::unique_ptr<EmbeddingBackend> open_backend(const BackendSpec& spec, const Catalog& catalog,
                                               const std::optional<std::filesystem::path>& cache_dir) {
  std::unique_ptr<EmbeddingBackend> backend;
  if (spec.kind == BackendSpec::Kind::Http) {
    backend = std::make_unique<HttpBackend>(spec.url);
  } else {
    auto test = std::make_unique<TestBackend>(spec.seed, spec.dimension, spec.max_tokens);
    const std::size_t background = spec.dimension >= 16 ? spec.dimension / 8 : (spec.dimension >= 4 ? 2 : 1);
    if (spec.dimension - background >= kLexiconDirections) register_synthetic_lexicon(*test, catalog);
    backend = std::move(test);
  }
  if (!cache_dir) return backend;
  std::error_code ec;
  std::filesystem::create_directories(*cache_dir, ec);
  if (ec) fail(ErrorKind::Validation, "cannot create cache directory " + cache_dir->string() + ": " + ec.message());
  auto cache = std::make_shared<EmbeddingCache>(*cache_dir / "embeddings.bin");
  return std::make_unique<CachingBackend>(std::move(backend), std::move(cache));
}

}  // namespace tpot
