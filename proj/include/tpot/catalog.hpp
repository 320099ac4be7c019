#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tpot {

inline constexpr std::size_t kItemCount = 60;
inline constexpr std::size_t kFacetCount = 15;
inline constexpr std::size_t kTraitCount = 5;
inline constexpr std::size_t kItemsPerFacet = 4;
inline constexpr std::size_t kFacetsPerTrait = 3;

struct TraitId {
  std::string acronym;  // "O", "C", "E", "A", "N"
  std::string name;
};

struct FacetId {
  std::string acronym;  // e.g. "A_Com"
  std::string name;
  std::size_t trait = 0;  // index into Catalog::traits()
};

struct ItemDefinition {
  int item_id = 0;  // 1..60
  std::string statement;
  std::string reverse_statement;
  std::size_t facet = 0;  // index into Catalog::facets()
  bool reverse_keyed = false;
};

// The BFI-2 instrument. Immutable after construction; every structural
// invariant is checked by the constructor.
class Catalog {
 public:
  Catalog(std::vector<ItemDefinition> items, std::vector<FacetId> facets,
          std::vector<TraitId> traits);

  const std::vector<ItemDefinition>& items() const { return items_; }
  const std::vector<FacetId>& facets() const { return facets_; }
  const std::vector<TraitId>& traits() const { return traits_; }

  // Item by 1-based id.
  const ItemDefinition& item(int item_id) const;

  // Positions into items() / facets(), in catalog order.
  const std::vector<std::size_t>& facet_items(std::size_t facet) const {
    return facet_items_[facet];
  }
  const std::vector<std::size_t>& trait_facets(std::size_t trait) const {
    return trait_facets_[trait];
  }
  std::vector<std::size_t> trait_items(std::size_t trait) const;

  std::size_t facet_index(std::string_view acronym) const;
  std::size_t trait_index(std::string_view acronym) const;

 private:
  std::vector<ItemDefinition> items_;
  std::vector<FacetId> facets_;
  std::vector<TraitId> traits_;
  std::vector<std::vector<std::size_t>> facet_items_;
  std::vector<std::vector<std::size_t>> trait_facets_;
};

struct ResponseSheet {
  std::string author_id;
  std::array<int, kItemCount> responses{};  // responses[item_id - 1], each in 1..5
};

struct ScoreSheet {
  std::array<double, kItemCount> item_scores{};
  std::array<double, kFacetCount> facet_scores{};
  std::array<double, kTraitCount> trait_scores{};
};

// Score of a single answered item: the response itself, or 6 - response when
// the item is reverse keyed. item_id is only used in the error message.
double item_score(int response, bool reverse_keyed, int item_id = 0);

ScoreSheet score_sheet(const ResponseSheet& responses, const Catalog& catalog);

// Facet and trait means over already-scored items.
void derive_facets_and_traits(const Catalog& catalog, ScoreSheet& sheet);

Catalog parse_catalog(std::string_view json_text);
Catalog load_catalog(const std::filesystem::path& path);

// The bundled BFI-2 catalog compiled into the library.
const Catalog& builtin_catalog();
std::string_view builtin_catalog_json();

}  // namespace tpot
