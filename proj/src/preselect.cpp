#include "tpot/preselect.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "tpot/error.hpp"

namespace tpot {

std::string_view to_string(TargetLevel level) {
  switch (level) {
    case TargetLevel::Trait: return "trait";
    case TargetLevel::Facet: return "facet";
    case TargetLevel::Item: return "item";
  }
  return "?";
}

TargetLevel parse_target_level(std::string_view s) {
  if (s == "trait") return TargetLevel::Trait;
  if (s == "facet") return TargetLevel::Facet;
  if (s == "item") return TargetLevel::Item;
  fail(ErrorKind::Validation, "unknown target level '" + std::string(s) + "'");
}

double relevance(std::span<const double> sentence, const TargetEmbedding& target) {
  require(!target.forward.empty() && target.forward.size() == target.reverse.size(),
          "target " + target.target_id + " needs matching forward and reverse sentences");
  double beta = -1.0;
  for (std::size_t j = 0; j < target.forward.size(); ++j) {
    beta = std::max(beta, cosine_similarity(sentence, target.forward[j]));
    beta = std::max(beta, cosine_similarity(sentence, target.reverse[j]));
  }
  return std::clamp(beta, 0.0, 1.0);
}

RelevanceProfile relevance_profile(std::span<const Embedding> sentences,
                                   const TargetEmbedding& target, double delta) {
  require(delta >= 0.0 && delta < 1.0, "delta must lie in [0, 1)");
  RelevanceProfile p;
  p.alphas.reserve(sentences.size());
  p.kept.reserve(sentences.size());
  double mass = 0.0;
  for (const auto& x : sentences) {
    double a = relevance(x, target);
    const bool keep = a >= delta;
    if (!keep) a = 0.0;
    p.alphas.push_back(a);
    p.kept.push_back(keep);
    mass += a;
  }
  p.weights.assign(sentences.size(), 0.0);
  if (mass > 0.0) {
    for (std::size_t n = 0; n < sentences.size(); ++n) p.weights[n] = p.alphas[n] / mass;
  }
  return p;
}

DocumentEmbedding tpot_document_embedding(std::span<const Embedding> sentences,
                                          const TargetEmbedding& target, double delta,
                                          RelevanceProfile* profile) {
  require(!sentences.empty(), "document embedding needs at least one sentence");
  auto p = relevance_profile(sentences, target, delta);
  DocumentEmbedding doc;
  doc.target_id = target.target_id;
  doc.vector.assign(sentences.front().size(), 0.0);
  for (std::size_t n = 0; n < sentences.size(); ++n) {
    const double w = p.weights[n];
    if (w == 0.0) continue;
    ++doc.n_sentences_used;
    const auto& x = sentences[n];
    require(x.size() == doc.vector.size(), "sentence embeddings differ in dimension");
    for (std::size_t d = 0; d < x.size(); ++d) doc.vector[d] += w * x[d];
  }
  if (profile) *profile = std::move(p);
  return doc;
}

DocumentEmbedding model1_document_embedding(const std::string& text, EmbeddingBackend& backend) {
  require(text.find_first_not_of(" \t\r\n") != std::string::npos, "model 1 needs a non-empty essay");
  const std::string texts[] = {text};
  auto v = embed_batch(texts, backend);
  return {std::move(v.front()), std::string(kUntargeted), 1};
}

ItemEmbeddings embed_catalog(const Catalog& catalog, EmbeddingBackend& backend) {
  std::vector<std::string> texts;
  for (const auto& item : catalog.items()) {
    texts.push_back(item.statement);
    texts.push_back(item.reverse_statement);
  }
  auto vectors = embed_batch(texts, backend);
  ItemEmbeddings out;
  out.backend = backend.descriptor();
  for (std::size_t i = 0; i < catalog.items().size(); ++i) {
    out.statements.push_back(std::move(vectors[2 * i]));
    out.reverses.push_back(std::move(vectors[2 * i + 1]));
  }
  return out;
}

namespace {

constexpr std::string_view kArchiveMagic = "TPOTARCH1\n";
static_assert(std::endian::native == std::endian::little);

}  // namespace

void save_item_embeddings(const std::filesystem::path& path, const ItemEmbeddings& archive) {
  require(archive.statements.size() == archive.reverses.size(), "archive: unpaired statements");
  nlohmann::ordered_json header;
  header["name"] = archive.backend.name;
  header["dim"] = archive.backend.dimension;
  header["max_tokens"] = archive.backend.max_tokens;
  header["items"] = archive.statements.size();
  const auto h = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Validation, "cannot write archive " + path.string());
  out.write(kArchiveMagic.data(), static_cast<std::streamsize>(kArchiveMagic.size()));
  const auto len = static_cast<std::uint32_t>(h.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  auto put = [&](const Embedding& v) {
    require(v.size() == archive.backend.dimension, "archive: vector dimension mismatch");
    std::vector<float> buf(v.begin(), v.end());
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  };
  for (std::size_t i = 0; i < archive.statements.size(); ++i) {
    put(archive.statements[i]);
    put(archive.reverses[i]);
  }
  if (!out) fail(ErrorKind::Validation, "error writing archive " + path.string());
}

ItemEmbeddings load_item_embeddings(const std::filesystem::path& path,
                                    const BackendDescriptor* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Missing, "target-embedding archive not found: " + path.string());
  std::string magic(kArchiveMagic.size(), '\0');
  in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || magic != kArchiveMagic) fail(ErrorKind::Validation, "archive " + path.string() + ": bad header");
  std::string h(len, '\0');
  in.read(h.data(), len);
  ItemEmbeddings out;
  std::size_t items = 0;
  try {
    auto header = nlohmann::json::parse(h);
    out.backend.name = header.at("name").get<std::string>();
    out.backend.dimension = header.at("dim").get<std::size_t>();
    out.backend.max_tokens = header.at("max_tokens").get<std::size_t>();
    items = header.at("items").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Validation, "archive " + path.string() + ": " + e.what());
  }
  if (expected && !(out.backend == *expected)) {
    fail(ErrorKind::Contract, "archive " + path.string() + " was built with backend '" +
                                  out.backend.name + "' (dim " + std::to_string(out.backend.dimension) +
                                  "), experiment uses '" + expected->name + "' (dim " +
                                  std::to_string(expected->dimension) + ")");
  }
  auto get = [&] {
    std::vector<float> buf(out.backend.dimension);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) fail(ErrorKind::Validation, "archive " + path.string() + " is truncated");
    return Embedding(buf.begin(), buf.end());
  };
  for (std::size_t i = 0; i < items; ++i) {
    out.statements.push_back(get());
    out.reverses.push_back(get());
  }
  return out;
}

std::vector<std::string> target_ids(const Catalog& catalog, TargetLevel level) {
  std::vector<std::string> ids;
  switch (level) {
    case TargetLevel::Trait:
      for (const auto& t : catalog.traits()) ids.push_back(t.acronym);
      break;
    case TargetLevel::Facet:
      for (const auto& f : catalog.facets()) ids.push_back(f.acronym);
      break;
    case TargetLevel::Item:
      for (const auto& item : catalog.items()) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "I%02d", item.item_id);
        ids.emplace_back(buf);
      }
      break;
  }
  return ids;
}

std::vector<TargetEmbedding> build_targets(const Catalog& catalog, const ItemEmbeddings& items,
                                           TargetLevel level) {
  require(items.statements.size() == catalog.items().size() &&
              items.reverses.size() == catalog.items().size(),
          "item embeddings do not cover the catalog");
  const auto ids = target_ids(catalog, level);
  std::vector<TargetEmbedding> out;
  auto make = [&](const std::string& id, const std::vector<std::size_t>& members) {
    TargetEmbedding t;
    t.target_id = id;
    for (auto i : members) {
      t.forward.push_back(items.statements[i]);
      t.reverse.push_back(items.reverses[i]);
    }
    out.push_back(std::move(t));
  };
  switch (level) {
    case TargetLevel::Trait:
      for (std::size_t t = 0; t < catalog.traits().size(); ++t) make(ids[t], catalog.trait_items(t));
      break;
    case TargetLevel::Facet:
      for (std::size_t f = 0; f < catalog.facets().size(); ++f) make(ids[f], catalog.facet_items(f));
      break;
    case TargetLevel::Item:
      for (std::size_t i = 0; i < catalog.items().size(); ++i) make(ids[i], {i});
      break;
  }
  return out;
}

}  // namespace tpot
