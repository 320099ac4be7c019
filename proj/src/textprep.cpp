#include "tpot/textprep.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tpot/embedding.hpp"
#include "tpot/error.hpp"

namespace tpot {

namespace {

constexpr std::array<std::string_view, 32> kAbbreviations{
    "mr.",   "mrs.",  "ms.",  "dr.",   "prof.", "sr.",  "jr.",   "st.",
    "vs.",   "etc.",  "e.g.", "i.e.",  "a.m.",  "p.m.", "u.s.",  "u.k.",
    "jan.",  "feb.",  "aug.", "sept.", "oct.",  "nov.", "dec.",  "approx.",
    "dept.", "inc.",  "ltd.", "co.",   "fig.",  "mt.",  "ave.",  "gen."};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Length of a <PLACEHOLDER> token starting at pos, or 0.
std::size_t placeholder_length(std::string_view text, std::size_t pos) {
  if (text[pos] != '<') return 0;
  for (std::size_t j = pos + 1; j < text.size() && j < pos + 40; ++j) {
    const char c = text[j];
    if (c == '>') return j > pos + 1 ? j - pos + 1 : 0;
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return 0;
  }
  return 0;
}

// The word ending at (and including) the period at `dot`, lowercased.
bool is_abbreviation(std::string_view text, std::size_t dot) {
  std::size_t start = dot;
  while (start > 0 && !is_space(text[start - 1])) --start;
  std::string word(text.substr(start, dot - start + 1));
  while (!word.empty() && (word.front() == '(' || word.front() == '"' || word.front() == '\'')) {
    word.erase(word.begin());
  }
  std::transform(word.begin(), word.end(), word.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end();
}

// A line break followed by optional blanks and another line break.
std::size_t blank_line_length(std::string_view text, std::size_t pos) {
  if (text[pos] != '\n') return 0;
  for (std::size_t j = pos + 1; j < text.size(); ++j) {
    if (text[j] == '\n') return j - pos + 1;
    if (!is_space(text[j])) return 0;
  }
  return 0;
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  auto emit = [&](std::size_t from, std::size_t to) {
    auto s = trim(text.substr(from, to - from));
    if (!s.empty()) out.emplace_back(s);
  };

  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (auto len = placeholder_length(text, i)) {
      i += len;
      continue;
    }
    if (auto len = blank_line_length(text, i)) {
      emit(start, i);
      i += len;
      start = i;
      continue;
    }
    if (!is_terminal(text[i])) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < text.size() && is_terminal(text[end])) ++end;
    const bool single_period = (end - i == 1 && text[i] == '.');
    while (end < text.size() && is_closer(text[end])) ++end;
    const bool at_break = end == text.size() || is_space(text[end]);
    if (at_break && !(single_period && is_abbreviation(text, i))) {
      emit(start, end);
      start = end;
    }
    i = end;
  }
  emit(start, text.size());
  return out;
}

SentenceSet split_sentences(const EssayRecord& essay) {
  return {essay.author_id, split_sentences(essay.text)};
}

long long nearest_rank_percentile(std::vector<long long> values, int p) {
  require(!values.empty(), "percentile of an empty sample");
  require(p > 0 && p <= 100, "percentile must be in (0, 100]");
  std::sort(values.begin(), values.end());
  // rank = ceil(p/100 * n), computed in integers to avoid rounding surprises.
  const auto n = values.size();
  std::size_t rank = (static_cast<std::size_t>(p) * n + 99) / 100;
  rank = std::max<std::size_t>(rank, 1);
  return values[rank - 1];
}

CorpusStats corpus_stats(const std::vector<EssayRecord>& dataset, EmbeddingBackend& counter) {
  require(!dataset.empty(), "corpus statistics need at least one essay");
  constexpr std::size_t kBatch = 64;

  std::vector<std::string> essays;
  std::vector<std::string> sentences;
  std::vector<long long> sentences_per_essay;
  for (const auto& record : dataset) {
    essays.push_back(record.text);
    auto split = split_sentences(record.text);
    sentences_per_essay.push_back(static_cast<long long>(split.size()));
    for (auto& s : split) sentences.push_back(std::move(s));
  }

  auto count_all = [&](const std::vector<std::string>& texts, const char* what) {
    std::vector<long long> counts;
    counts.reserve(texts.size());
    for (std::size_t b = 0; b * kBatch < texts.size(); ++b) {
      const auto first = b * kBatch;
      const auto last = std::min(texts.size(), first + kBatch);
      std::vector<std::size_t> batch;
      try {
        batch = counter.count_tokens(std::span(texts).subspan(first, last - first));
      } catch (const std::exception& e) {
        fail(ErrorKind::Backend, std::string("token counting failed on ") + what + " batch " +
                                     std::to_string(b) + ": " + e.what());
      }
      if (batch.size() != last - first) {
        fail(ErrorKind::Backend, std::string("token counter returned wrong count for ") + what +
                                     " batch " + std::to_string(b));
      }
      for (auto c : batch) counts.push_back(static_cast<long long>(c));
    }
    return counts;
  };

  const auto essay_tokens = count_all(essays, "essay");
  const auto sentence_tokens = count_all(sentences, "sentence");

  CorpusStats stats;
  for (std::size_t k = 0; k < kStatPercentiles.size(); ++k) {
    stats.tokens_per_essay[k] = nearest_rank_percentile(essay_tokens, kStatPercentiles[k]);
    stats.tokens_per_sentence[k] =
        sentence_tokens.empty() ? 0 : nearest_rank_percentile(sentence_tokens, kStatPercentiles[k]);
    stats.sentences_per_essay[k] = nearest_rank_percentile(sentences_per_essay, kStatPercentiles[k]);
  }
  return stats;
}

std::string format_corpus_stats(const CorpusStats& stats) {
  std::ostringstream os;
  os << std::left << std::setw(18) << "Statistics type";
  for (int p : kStatPercentiles) os << std::right << std::setw(8) << (std::to_string(p) + "%");
  os << '\n';
  auto row = [&](const char* label, const PercentileRow& values) {
    os << std::left << std::setw(18) << label;
    for (auto v : values) os << std::right << std::setw(8) << v;
    os << '\n';
  };
  row("tokens/essay", stats.tokens_per_essay);
  row("tokens/sentence", stats.tokens_per_sentence);
  row("sentences/essay", stats.sentences_per_essay);
  return os.str();
}

std::string corpus_stats_json(const CorpusStats& stats) {
  nlohmann::ordered_json doc;
  doc["percentiles"] = kStatPercentiles;
  doc["tokens_per_essay"] = stats.tokens_per_essay;
  doc["tokens_per_sentence"] = stats.tokens_per_sentence;
  doc["sentences_per_essay"] = stats.sentences_per_essay;
  return doc.dump(2) + "\n";
}

std::vector<EssayRecord> parse_dataset(std::string_view jsonl) {
  std::vector<EssayRecord> out;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    auto nl = jsonl.find('\n', pos);
    if (nl == std::string_view::npos) nl = jsonl.size();
    auto line = trim(jsonl.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;

    auto bad = [&](const std::string& why) -> void {
      fail(ErrorKind::Validation, "dataset line " + std::to_string(line_no) + ": " + why);
    };
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      bad("malformed JSON");
    }
    if (!doc.is_object()) bad("expected a JSON object");
    EssayRecord record;
    try {
      record.author_id = doc.at("author_id").get<std::string>();
      record.text = doc.at("text").get<std::string>();
      if (doc.contains("responses") && !doc["responses"].is_null()) {
        const auto& arr = doc["responses"];
        if (!arr.is_array() || arr.size() != kItemCount) bad("responses must hold 60 integers");
        ResponseSheet sheet;
        sheet.author_id = record.author_id;
        for (std::size_t i = 0; i < kItemCount; ++i) {
          if (!arr[i].is_number_integer()) bad("response " + std::to_string(i + 1) + " is not an integer");
          const int r = arr[i].get<int>();
          if (r < 1 || r > 5) {
            bad("item " + std::to_string(i + 1) + ": response " + std::to_string(r) + " outside 1..5");
          }
          sheet.responses[i] = r;
        }
        record.responses = sheet;
      }
    } catch (const nlohmann::json::exception& e) {
      bad(e.what());
    }
    if (record.author_id.empty()) bad("empty author_id");
    if (trim(record.text).empty()) bad("empty text");
    if (!seen.insert(record.author_id).second) bad("duplicate author_id " + record.author_id);
    out.push_back(std::move(record));
  }
  if (out.empty()) fail(ErrorKind::Validation, "dataset: no records");
  return out;
}

std::vector<EssayRecord> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Validation, "dataset: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str());
}

std::string dataset_line(const EssayRecord& record) {
  nlohmann::ordered_json doc;
  doc["author_id"] = record.author_id;
  doc["text"] = record.text;
  if (record.responses) {
    doc["responses"] = record.responses->responses;
  } else {
    doc["responses"] = nullptr;
  }
  return doc.dump();
}

}  // namespace tpot
