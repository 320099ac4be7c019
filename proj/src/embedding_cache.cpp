#include "tpot/embedding_cache.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <vector>

#include "tpot/error.hpp"

namespace tpot {

namespace {

constexpr std::string_view kMagic = "TPOTCACHE1";

static_assert(std::endian::native == std::endian::little,
              "cache I/O assumes a little-endian host");

bool read_u32(std::istream& in, std::uint32_t& v) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof v));
}

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

}  // namespace

std::string EmbeddingCache::key(std::string_view backend, std::string_view text) {
  std::string k(backend);
  k.push_back('\0');
  k.append(text);
  return k;
}

EmbeddingCache::EmbeddingCache(std::filesystem::path file) : path_(std::move(file)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());

  std::uintmax_t valid_bytes = 0;
  if (std::filesystem::exists(path_)) {
    std::ifstream in(path_, std::ios::binary);
    std::string magic(kMagic.size(), '\0');
    in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
    if (!in || magic != kMagic) {
      fail(ErrorKind::Validation, "embedding cache " + path_.string() + " has a bad header");
    }
    valid_bytes = kMagic.size();
    while (true) {
      std::uint32_t klen = 0;
      std::uint32_t dim = 0;
      if (!read_u32(in, klen)) break;
      std::string k(klen, '\0');
      if (!in.read(k.data(), klen) || !read_u32(in, dim)) break;
      std::vector<float> buf(dim);
      if (!in.read(reinterpret_cast<char*>(buf.data()),
                   static_cast<std::streamsize>(dim * sizeof(float)))) {
        break;
      }
      entries_[std::move(k)] = Embedding(buf.begin(), buf.end());
      valid_bytes += 8 + klen + dim * sizeof(float);
    }
    in.close();
    if (valid_bytes != std::filesystem::file_size(path_)) {
      std::filesystem::resize_file(path_, valid_bytes);
    }
    out_.open(path_, std::ios::binary | std::ios::app);
  } else {
    out_.open(path_, std::ios::binary | std::ios::trunc);
    out_.write(kMagic.data(), static_cast<std::streamsize>(kMagic.size()));
    out_.flush();
  }
  if (!out_) fail(ErrorKind::Validation, "cannot open embedding cache " + path_.string());
}

std::optional<Embedding> EmbeddingCache::find(std::string_view backend, std::string_view text) const {
  std::shared_lock lock(mutex_);
  if (auto it = entries_.find(key(backend, text)); it != entries_.end()) return it->second;
  return std::nullopt;
}

void EmbeddingCache::insert(std::string_view backend, std::string_view text, const Embedding& v) {
  auto k = key(backend, text);
  std::unique_lock lock(mutex_);
  if (entries_.contains(k)) return;
  std::vector<float> buf(v.begin(), v.end());
  write_u32(out_, static_cast<std::uint32_t>(k.size()));
  out_.write(k.data(), static_cast<std::streamsize>(k.size()));
  write_u32(out_, static_cast<std::uint32_t>(buf.size()));
  out_.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
  out_.flush();
  entries_.emplace(std::move(k), Embedding(buf.begin(), buf.end()));
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

CachingBackend::CachingBackend(std::unique_ptr<EmbeddingBackend> inner,
                               std::shared_ptr<EmbeddingCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)), descriptor_(inner_->descriptor()) {}

std::vector<Embedding> CachingBackend::do_embed(std::span<const std::string> texts) {
  std::vector<Embedding> out(texts.size());
  std::vector<std::string> misses;
  std::unordered_map<std::string_view, std::size_t> miss_index;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (auto hit = cache_->find(descriptor_.name, texts[i])) {
      out[i] = std::move(*hit);
    } else if (!miss_index.contains(texts[i])) {
      miss_index.emplace(texts[i], misses.size());
      misses.push_back(texts[i]);
    }
  }
  if (!misses.empty()) {
    auto fresh = inner_->embed(misses);
    if (fresh.size() != misses.size()) {
      fail(ErrorKind::Backend, "backend returned the wrong number of vectors");
    }
    for (std::size_t m = 0; m < misses.size(); ++m) {
      round_to_f32(fresh[m]);
      cache_->insert(descriptor_.name, misses[m], fresh[m]);
    }
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (out[i].empty()) out[i] = fresh[miss_index.at(texts[i])];
    }
  }
  return out;
}

}  // namespace tpot
