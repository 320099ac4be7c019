#include "tpot/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tpot/error.hpp"

namespace tpot {

namespace {

void check(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::Validation, "catalog: " + what);
}

}  // namespace

Catalog::Catalog(std::vector<ItemDefinition> items, std::vector<FacetId> facets,
                 std::vector<TraitId> traits)
    : items_(std::move(items)), facets_(std::move(facets)), traits_(std::move(traits)) {
  check(items_.size() == kItemCount,
        "expected " + std::to_string(kItemCount) + " items, found " + std::to_string(items_.size()));
  check(facets_.size() == kFacetCount,
        "expected " + std::to_string(kFacetCount) + " facets, found " + std::to_string(facets_.size()));
  check(traits_.size() == kTraitCount,
        "expected " + std::to_string(kTraitCount) + " traits, found " + std::to_string(traits_.size()));

  std::set<std::string> acronyms;
  for (const auto& t : traits_) check(acronyms.insert(t.acronym).second, "duplicate acronym " + t.acronym);
  for (const auto& f : facets_) check(acronyms.insert(f.acronym).second, "duplicate acronym " + f.acronym);

  trait_facets_.assign(traits_.size(), {});
  for (std::size_t f = 0; f < facets_.size(); ++f) {
    check(facets_[f].trait < traits_.size(), "facet " + facets_[f].acronym + " has unknown trait");
    trait_facets_[facets_[f].trait].push_back(f);
  }
  for (std::size_t t = 0; t < traits_.size(); ++t) {
    check(trait_facets_[t].size() == kFacetsPerTrait,
          "trait " + traits_[t].acronym + " owns " + std::to_string(trait_facets_[t].size()) +
              " facets, expected 3");
  }

  // Items are kept sorted by id so that item(id) is a direct lookup.
  std::sort(items_.begin(), items_.end(),
            [](const auto& a, const auto& b) { return a.item_id < b.item_id; });
  facet_items_.assign(facets_.size(), {});
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto& item = items_[i];
    check(item.item_id == static_cast<int>(i) + 1,
          "item ids must be unique and cover 1..60 (problem near id " + std::to_string(item.item_id) + ")");
    check(!item.statement.empty() && !item.reverse_statement.empty(),
          "item " + std::to_string(item.item_id) + " has an empty statement");
    check(item.statement != item.reverse_statement,
          "item " + std::to_string(item.item_id) + " statement equals its reverse");
    check(item.facet < facets_.size(), "item " + std::to_string(item.item_id) + " has unknown facet");
    facet_items_[item.facet].push_back(i);
  }
  for (std::size_t f = 0; f < facets_.size(); ++f) {
    check(facet_items_[f].size() == kItemsPerFacet,
          "facet " + facets_[f].acronym + " has " + std::to_string(facet_items_[f].size()) +
              " items, expected 4");
  }
}

const ItemDefinition& Catalog::item(int item_id) const {
  require(item_id >= 1 && item_id <= static_cast<int>(items_.size()),
          "item id out of range: " + std::to_string(item_id));
  return items_[static_cast<std::size_t>(item_id - 1)];
}

std::vector<std::size_t> Catalog::trait_items(std::size_t trait) const {
  std::vector<std::size_t> out;
  for (auto f : trait_facets_.at(trait)) {
    out.insert(out.end(), facet_items_[f].begin(), facet_items_[f].end());
  }
  return out;
}

std::size_t Catalog::facet_index(std::string_view acronym) const {
  for (std::size_t f = 0; f < facets_.size(); ++f) {
    if (facets_[f].acronym == acronym) return f;
  }
  fail(ErrorKind::Validation, "unknown facet acronym '" + std::string(acronym) + "'");
}

std::size_t Catalog::trait_index(std::string_view acronym) const {
  for (std::size_t t = 0; t < traits_.size(); ++t) {
    if (traits_[t].acronym == acronym) return t;
  }
  fail(ErrorKind::Validation, "unknown trait acronym '" + std::string(acronym) + "'");
}

double item_score(int response, bool reverse_keyed, int item_id) {
  if (response < 1 || response > 5) {
    fail(ErrorKind::Validation, "item " + std::to_string(item_id) + ": response " +
                                    std::to_string(response) + " outside 1..5");
  }
  return reverse_keyed ? 6.0 - response : static_cast<double>(response);
}

void derive_facets_and_traits(const Catalog& catalog, ScoreSheet& sheet) {
  for (std::size_t f = 0; f < catalog.facets().size(); ++f) {
    double sum = 0.0;
    for (auto i : catalog.facet_items(f)) sum += sheet.item_scores[i];
    sheet.facet_scores[f] = sum / static_cast<double>(catalog.facet_items(f).size());
  }
  for (std::size_t t = 0; t < catalog.traits().size(); ++t) {
    double sum = 0.0;
    for (auto f : catalog.trait_facets(t)) sum += sheet.facet_scores[f];
    sheet.trait_scores[t] = sum / static_cast<double>(catalog.trait_facets(t).size());
  }
}

ScoreSheet score_sheet(const ResponseSheet& responses, const Catalog& catalog) {
  ScoreSheet sheet;
  for (std::size_t i = 0; i < catalog.items().size(); ++i) {
    const auto& item = catalog.items()[i];
    sheet.item_scores[i] = item_score(responses.responses[i], item.reverse_keyed, item.item_id);
  }
  derive_facets_and_traits(catalog, sheet);
  return sheet;
}

Catalog parse_catalog(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Validation, std::string("catalog: parse error: ") + e.what());
  }
  try {
    std::vector<TraitId> traits;
    for (const auto& t : doc.at("traits")) {
      traits.push_back({t.at("acronym").get<std::string>(), t.value("name", "")});
    }
    std::vector<FacetId> facets;
    for (const auto& f : doc.at("facets")) {
      FacetId id{f.at("acronym").get<std::string>(), f.value("name", ""), 0};
      const auto trait = f.at("trait").get<std::string>();
      bool found = false;
      for (std::size_t t = 0; t < traits.size(); ++t) {
        if (traits[t].acronym == trait) {
          id.trait = t;
          found = true;
        }
      }
      check(found, "facet " + id.acronym + " refers to unknown trait " + trait);
      facets.push_back(std::move(id));
    }
    std::vector<ItemDefinition> items;
    for (const auto& it : doc.at("items")) {
      ItemDefinition item;
      item.item_id = it.at("id").get<int>();
      item.statement = it.at("statement").get<std::string>();
      item.reverse_statement = it.at("reverse_statement").get<std::string>();
      item.reverse_keyed = it.at("reverse_keyed").get<bool>();
      const auto facet = it.at("facet").get<std::string>();
      bool found = false;
      for (std::size_t f = 0; f < facets.size(); ++f) {
        if (facets[f].acronym == facet) {
          item.facet = f;
          found = true;
        }
      }
      check(found, "item " + std::to_string(item.item_id) + " refers to unknown facet " + facet);
      items.push_back(std::move(item));
    }
    return Catalog(std::move(items), std::move(facets), std::move(traits));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Validation, std::string("catalog: ") + e.what());
  }
}

Catalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Validation, "catalog: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_catalog(buf.str());
}

const Catalog& builtin_catalog() {
  static const Catalog catalog = parse_catalog(builtin_catalog_json());
  return catalog;
}

}  // namespace tpot
