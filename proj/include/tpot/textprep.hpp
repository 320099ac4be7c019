#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tpot/catalog.hpp"

namespace tpot {

class EmbeddingBackend;

struct EssayRecord {
  std::string author_id;
  std::string text;
  std::optional<ResponseSheet> responses;
};

struct SentenceSet {
  std::string author_id;
  std::vector<std::string> sentences;
};

// Nearest-rank percentiles at 25/50/75/95.
using PercentileRow = std::array<long long, 4>;

struct CorpusStats {
  PercentileRow tokens_per_essay{};
  PercentileRow tokens_per_sentence{};
  PercentileRow sentences_per_essay{};
};

inline constexpr std::array<int, 4> kStatPercentiles{25, 50, 75, 95};

// Rule-based splitter: a sentence ends at a run of . ! ? (plus any closing
// quotes or brackets) followed by whitespace or end of text, and at blank
// lines. Known abbreviations and <PLACEHOLDER> tokens never end a sentence.
std::vector<std::string> split_sentences(std::string_view text);
SentenceSet split_sentences(const EssayRecord& essay);

// Nearest-rank percentile over an unsorted sample; p in (0, 100].
long long nearest_rank_percentile(std::vector<long long> values, int p);

CorpusStats corpus_stats(const std::vector<EssayRecord>& dataset, EmbeddingBackend& counter);

// Percentile table for humans, and the machine-readable counterpart.
std::string format_corpus_stats(const CorpusStats& stats);
std::string corpus_stats_json(const CorpusStats& stats);

// JSON Lines dataset; line numbers in errors are 1-based.
std::vector<EssayRecord> parse_dataset(std::string_view jsonl);
std::vector<EssayRecord> load_dataset(const std::filesystem::path& path);
std::string dataset_line(const EssayRecord& record);

}  // namespace tpot
