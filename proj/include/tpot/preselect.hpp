#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tpot/catalog.hpp"
#include "tpot/embedding.hpp"

namespace tpot {

enum class TargetLevel { Trait, Facet, Item };

std::string_view to_string(TargetLevel level);
TargetLevel parse_target_level(std::string_view s);

// Item-sentence embeddings for one prediction target: the statements of its
// items and their reverses (one item for an item target, 4 for a facet, 12 for
// a trait).
struct TargetEmbedding {
  std::string target_id;
  std::vector<Embedding> forward;
  std::vector<Embedding> reverse;
};

struct RelevanceProfile {
  std::vector<double> alphas;   // after thresholding: 0 for discarded sentences
  std::vector<double> weights;  // alpha / sum(alpha), or all 0 if nothing survives
  std::vector<bool> kept;
};

struct DocumentEmbedding {
  Embedding vector;
  std::string target_id;
  std::size_t n_sentences_used = 0;
};

inline constexpr double kDefaultDelta = 0.2;
inline constexpr std::string_view kUntargeted = "untargeted";

// max(0, max_j max(cos(x, z_j), cos(x, z^r_j))), clamped to [0, 1].
double relevance(std::span<const double> sentence, const TargetEmbedding& target);

// Alphas below delta are zeroed and marked discarded before the weights are
// normalized over the surviving mass.
RelevanceProfile relevance_profile(std::span<const Embedding> sentences,
                                   const TargetEmbedding& target, double delta);

// Relevance-weighted average of the sentence embeddings. When no sentence
// survives the threshold the result is the zero vector with
// n_sentences_used == 0.
DocumentEmbedding tpot_document_embedding(std::span<const Embedding> sentences,
                                          const TargetEmbedding& target, double delta,
                                          RelevanceProfile* profile = nullptr);

// Whole-essay embedding in a single backend call; the backend truncates at its
// token limit. The essay counts as one input sentence.
DocumentEmbedding model1_document_embedding(const std::string& text, EmbeddingBackend& backend);

// Embeddings of every catalog statement and reverse statement, indexed by
// catalog item position.
struct ItemEmbeddings {
  BackendDescriptor backend;
  std::vector<Embedding> statements;
  std::vector<Embedding> reverses;
};

ItemEmbeddings embed_catalog(const Catalog& catalog, EmbeddingBackend& backend);

// Archive: "TPOTARCH1\n", u32 header length, JSON header
// {"name","dim","max_tokens","items"}, then per item the statement and the
// reverse as dim x f32 little endian.
void save_item_embeddings(const std::filesystem::path& path, const ItemEmbeddings& archive);
// Loading against an expected backend rejects any descriptor mismatch.
ItemEmbeddings load_item_embeddings(const std::filesystem::path& path,
                                    const BackendDescriptor* expected = nullptr);

std::vector<std::string> target_ids(const Catalog& catalog, TargetLevel level);
std::vector<TargetEmbedding> build_targets(const Catalog& catalog, const ItemEmbeddings& items,
                                           TargetLevel level);

}  // namespace tpot
