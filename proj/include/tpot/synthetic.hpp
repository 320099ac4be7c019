#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "tpot/catalog.hpp"
#include "tpot/test_backend.hpp"
#include "tpot/textprep.hpp"

namespace tpot {

// Planted-signal essays for the test backend. Every author gets a latent
// level per facet; item scores scatter around it and the matching survey
// responses are recorded. The essay states most items as a short sentence
// "<adverb> <keyword>" whose adverb (never .. always) follows the item score,
// shuffled together with off-topic filler.
struct SyntheticOptions {
  std::size_t authors = 400;
  std::uint64_t seed = 7;
  double item_inclusion = 0.75;   // chance an item is mentioned at all
  double adverb_jitter = 0.15;    // chance the adverb is off by one level
  std::size_t min_distractors = 15;
  std::size_t max_distractors = 30;
  double facet_spread = 0.8;      // sd of the latent facet level around 3
  double item_spread = 0.7;       // sd of item scores around the facet level
};

std::vector<EssayRecord> synthetic_corpus(const Catalog& catalog, const SyntheticOptions& options = {});

// Essays made only of filler sentences, with random survey responses.
std::vector<EssayRecord> off_topic_corpus(std::size_t authors, std::uint64_t seed, std::size_t sentences = 20);

// Keyword of an item in the synthetic lexicon, e.g. "outgoing" for item 1.
std::string_view synthetic_keyword(int item_id);
inline constexpr std::array<std::string_view, 5> kSyntheticAdverbs{"never", "rarely", "sometimes", "often",
                                                                   "always"};

// Topic per item, polarity axis per facet: catalog statements and reverses
// are registered verbatim, "<adverb> <keyword>" phrases with the polarity of
// their score level. Needs 75 topic directions, so a dimension of at least 88.
void register_synthetic_lexicon(TestBackend& backend, const Catalog& catalog);

}  // namespace tpot
