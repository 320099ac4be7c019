#include "tpot/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "tpot/error.hpp"

namespace tpot {

namespace {

constexpr std::array<std::string_view, kItemCount> kKeywords{
    "outgoing",    "softhearted",   "orderly",     "stressed",  "artsy",
    "assertive",   "respectful",    "hardworking", "discouraged", "curious",
    "eager",       "accepting",     "dependable",  "moody",     "inventive",
    "loud",        "sympathetic",   "systematic",  "tense",     "fascinated",
    "dominant",    "peaceable",     "motivated",   "insecure",  "philosophical",
    "active",      "forgiving",     "careful",     "volatile",  "creative",
    "extroverted", "helpful",       "neat",        "worried",   "aesthetic",
    "influential", "gracious",      "efficient",   "sad",       "thoughtful",
    "energetic",   "openhearted",   "reliable",    "excitable", "imaginative",
    "talkative",   "warm",          "tidy",        "anxious",   "poetic",
    "leading",     "courteous",     "persistent",  "depressed", "abstract",
    "enthusiastic", "charitable",   "responsible", "temperamental", "original"};

// Frames around the "<adverb> <keyword>" phrase; none of their words are
// registered.
constexpr std::array<std::string_view, 8> kFrames{
    "I think I am {} most of the time.",
    "People tell me I am {} around them.",
    "Looking back on this year, I was {}.",
    "At school I am {} with the others.",
    "Honestly, I would say I am {} these days.",
    "My family thinks I am {} at home.",
    "When I am with friends I am {}.",
    "In new situations I tend to be {}.",
};

constexpr std::array<std::string_view, 40> kFiller{
    "The bus was late again this morning so I walked to class.",
    "My roommate <PERSON> cooked pasta for everyone last night.",
    "I still need to finish the lab report for chemistry.",
    "We drove to <LOCATION> over the weekend to visit my aunt.",
    "The weather has been cold and rainy all week.",
    "I bought a new backpack because the zipper on my old one broke.",
    "My phone battery dies faster than it used to.",
    "The library closes at midnight during exam season.",
    "I had a sandwich and an apple for lunch today.",
    "On <DATE_TIME> we have a quiz in statistics.",
    "The dining hall ran out of coffee before nine.",
    "My brother plays baseball for his high school team.",
    "I watched two episodes of a cooking show before bed.",
    "There is construction on the road next to my dorm.",
    "Our professor posted the slides after the lecture.",
    "I called <PERSON> to ask about the homework.",
    "The parking lot behind the gym is always full.",
    "My laptop needs a software update tonight.",
    "We are reading a novel about a family of farmers.",
    "I signed up for an intramural volleyball league.",
    "The elevator in my building has been broken since <DATE_TIME>.",
    "My mom sent me a package with snacks and socks.",
    "I am writing this essay at a table near the window.",
    "The grocery store on campus raised its prices.",
    "I need to renew my driver license next month.",
    "Our group project meets every Thursday afternoon.",
    "I moved here from <LOCATION> two years ago.",
    "The campus shuttle stops in front of the museum.",
    "I forgot my umbrella at the coffee shop.",
    "Next semester I plan to take a history class.",
    "The printer in the computer lab is out of paper.",
    "We have a long weekend coming up soon.",
    "My cousin just adopted a small gray cat.",
    "I spent the afternoon doing laundry and cleaning.",
    "The football game was on television in the lounge.",
    "I walked past the old theater on my way home.",
    "The textbook for biology costs more than I expected.",
    "I usually take the stairs instead of the elevator.",
    "There was a fire drill in the middle of the night.",
    "Our neighbor <PERSON> has a very loud truck.",
};

// <random>'s distributions are implementation defined; these are not.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double normal(std::mt19937_64& rng) {
  const double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t below(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

template <class T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(rng, i)]);
}

std::string author_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "syn%04zu", i + 1);
  return buf;
}

std::string join(const std::vector<std::string>& sentences) {
  std::string text;
  for (const auto& s : sentences) {
    if (!text.empty()) text += ' ';
    text += s;
  }
  return text;
}

std::string framed(std::string_view frame, std::string_view phrase) {
  std::string out(frame);
  out.replace(out.find("{}"), 2, phrase);
  return out;
}

int clamp_score(double v) { return static_cast<int>(std::clamp(std::lround(v), 1L, 5L)); }

double level_polarity(int level) { return (level - 3) / 2.0; }

std::string item_topic(int id) { return "item:" + std::to_string(id); }
std::string facet_axis(const Catalog& catalog, std::size_t facet) { return "facet:" + catalog.facets()[facet].acronym; }

}  // namespace

std::string_view synthetic_keyword(int item_id) {
  require(item_id >= 1 && item_id <= static_cast<int>(kItemCount), "item id out of range");
  return kKeywords[static_cast<std::size_t>(item_id - 1)];
}

void register_synthetic_lexicon(TestBackend& backend, const Catalog& catalog) {
  for (const auto& item : catalog.items()) {
    const auto topic = item_topic(item.item_id);
    const auto axis = facet_axis(catalog, item.facet);
    const double sign = item.reverse_keyed ? -1.0 : 1.0;
    backend.register_text(item.statement, {topic, axis, sign});
    backend.register_text(item.reverse_statement, {topic, axis, -sign});
    for (std::size_t l = 0; l < kSyntheticAdverbs.size(); ++l) {
      const int level = static_cast<int>(l) + 1;
      backend.register_phrase(std::string(kSyntheticAdverbs[l]) + " " + std::string(synthetic_keyword(item.item_id)),
                              {topic, axis, level_polarity(level)});
    }
  }
}

std::vector<EssayRecord> synthetic_corpus(const Catalog& catalog, const SyntheticOptions& o) {
  require(o.authors > 0, "synthetic corpus needs at least one author");
  require(o.min_distractors <= o.max_distractors, "distractor range is empty");
  std::mt19937_64 rng(o.seed);
  std::vector<EssayRecord> out;
  out.reserve(o.authors);
  for (std::size_t a = 0; a < o.authors; ++a) {
    std::vector<double> latent(catalog.facets().size());
    for (auto& v : latent) v = 3.0 + o.facet_spread * normal(rng);

    ResponseSheet sheet;
    sheet.author_id = author_name(a);
    std::vector<std::string> sentences;
    for (const auto& item : catalog.items()) {
      const int score = clamp_score(latent[item.facet] + o.item_spread * normal(rng));
      sheet.responses[static_cast<std::size_t>(item.item_id - 1)] = item.reverse_keyed ? 6 - score : score;
      if (uniform01(rng) >= o.item_inclusion) continue;
      int level = score;
      if (uniform01(rng) < o.adverb_jitter) level = std::clamp(level + (uniform01(rng) < 0.5 ? -1 : 1), 1, 5);
      const auto phrase = std::string(kSyntheticAdverbs[static_cast<std::size_t>(level - 1)]) + " " +
                          std::string(synthetic_keyword(item.item_id));
      sentences.push_back(framed(kFrames[below(rng, kFrames.size())], phrase));
    }
    const auto n_filler = o.min_distractors + below(rng, o.max_distractors - o.min_distractors + 1);
    for (std::size_t k = 0; k < n_filler; ++k) sentences.emplace_back(kFiller[below(rng, kFiller.size())]);
    shuffle(sentences, rng);

    EssayRecord record;
    record.author_id = sheet.author_id;
    record.text = join(sentences);
    record.responses = sheet;
    out.push_back(std::move(record));
  }
  return out;
}

std::vector<EssayRecord> off_topic_corpus(std::size_t authors, std::uint64_t seed, std::size_t sentences) {
  require(authors > 0 && sentences > 0, "off-topic corpus needs authors and sentences");
  std::mt19937_64 rng(seed);
  std::vector<EssayRecord> out;
  for (std::size_t a = 0; a < authors; ++a) {
    ResponseSheet sheet;
    sheet.author_id = "off" + author_name(a).substr(3);
    for (auto& r : sheet.responses) r = static_cast<int>(below(rng, 5)) + 1;
    std::vector<std::string> text;
    for (std::size_t k = 0; k < sentences; ++k) text.emplace_back(kFiller[below(rng, kFiller.size())]);
    out.push_back({sheet.author_id, join(text), sheet});
  }
  return out;
}

}  // namespace tpot
