#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tpot/error.hpp"
#include "tpot/experiment.hpp"
#include "tpot/synthetic.hpp"
#include "tpot/test_backend.hpp"

using namespace tpot;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  const Catalog& catalog = builtin_catalog();
  TestBackend backend{1, 96};
  Corpus corpus;
  ItemEmbeddings items;

  explicit Fixture(std::size_t authors, std::uint64_t seed = 7) {
    register_synthetic_lexicon(backend, catalog);
    SyntheticOptions options;
    options.authors = authors;
    options.seed = seed;
    corpus = prepare_corpus(synthetic_corpus(catalog, options), catalog, backend, true);
    items = embed_catalog(catalog, backend);
  }
};

ExperimentConfig quick(ModelKind model, TargetLevel level) {
  ExperimentConfig c;
  c.model = model;
  c.level = level;
  c.folds = 3;
  c.seed = 5;
  c.train.epochs = 3;
  c.train.hidden = 8;
  return c;
}

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "tpot_experiment_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("mae examples") {
  std::vector<double> p{3, 3}, y{2, 4};
  CHECK(mae(p, y) == 1.0);
  CHECK(mae(y, y) == 0.0);
  std::vector<double> shorter{1};
  CHECK_THROWS_AS(mae(p, shorter), Error);
  CHECK_THROWS_AS(mae({}, {}), Error);
}

TEST_CASE("accuracy examples") {
  std::vector<double> p{3.0, 3.6}, y{3.4, 3.0};
  CHECK(accuracy_at(p, y, 0.5) == 0.5);
  std::vector<double> a{1, 5}, b{5, 1};
  CHECK(accuracy_at(a, b, 0.5) == 0.0);
  std::vector<double> edge{3.5}, truth{3.0};
  CHECK(accuracy_at(edge, truth, 0.5) == 1.0);
  CHECK_THROWS_AS(accuracy_at(edge, truth, 0.0), Error);
  CHECK_THROWS_AS(accuracy_at(a, truth, 0.5), Error);
}

TEST_CASE("metric oracles on random data") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> score(1.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<double> p(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = score(rng);
      y[i] = score(rng);
    }
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += std::abs(p[i] - y[i]);
      if (std::abs(p[i] - y[i]) <= 0.5) ++hits;
    }
    CHECK(std::abs(mae(p, y) - sum / static_cast<double>(n)) < 1e-12);
    CHECK(mae(p, y) == mae(y, p));
    CHECK(accuracy_at(p, y, 0.5) == static_cast<double>(hits) / static_cast<double>(n));
    CHECK(accuracy_at(p, y, 0.75) >= accuracy_at(p, y, 0.5));
  }
}

TEST_CASE("mean and sample std") {
  std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
  CHECK(mean_of(v) == 5.0);
  CHECK(sample_std(v) == doctest::Approx(std::sqrt(32.0 / 7.0)).epsilon(1e-12));
  std::vector<double> one{3.0};
  CHECK(sample_std(one) == 0.0);
}

TEST_CASE("baseline predictor") {
  std::vector<double> a{2, 4};
  CHECK(baseline_predict(a) == 3.0);
  std::vector<double> b{3.5, 3.5, 3.5};
  CHECK(baseline_predict(b) == 3.5);
  CHECK_THROWS_AS(baseline_predict({}), Error);
}

TEST_CASE("fold sizes and partition") {
  const auto folds = make_folds(100, 10, 0);
  REQUIRE(folds.size() == 10);
  std::set<std::vector<std::size_t>> test_sets;
  for (const auto& f : folds) {
    CHECK(f.test.size() == 20);
    CHECK(f.validation.size() == 8);
    CHECK(f.train.size() == 72);
    std::vector<std::size_t> all;
    all.insert(all.end(), f.train.begin(), f.train.end());
    all.insert(all.end(), f.validation.begin(), f.validation.end());
    all.insert(all.end(), f.test.begin(), f.test.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
    test_sets.insert(f.test);
  }
  CHECK(test_sets.size() > 1);
  CHECK(folds[0].fold_id == 1);
  CHECK(folds[9].seed == fold_seed(0, 10));

  for (std::size_t n : {10, 11, 37, 400}) {
    const auto f = make_folds(n, 2, 3).front();
    const std::size_t test = static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(n)));
    CHECK(f.test.size() == test);
    CHECK(f.validation.size() == std::max<std::size_t>(1, (n - test) / 10));
  }
}

TEST_CASE("folds are deterministic") {
  const auto a = make_folds(57, 10, 12);
  const auto b = make_folds(57, 10, 12);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].test == b[k].test);
    CHECK(a[k].validation == b[k].validation);
    CHECK(a[k].train == b[k].train);
  }
  CHECK(make_folds(57, 10, 13)[0].test != a[0].test);
}

TEST_CASE("rotated folds cover every author in test") {
  const auto folds = make_folds(50, 5, 4, FoldStrategy::Rotate);
  std::set<std::size_t> seen;
  for (const auto& f : folds) {
    CHECK(f.test.size() == 10);
    seen.insert(f.test.begin(), f.test.end());
  }
  CHECK(seen.size() == 50);
  CHECK(parse_fold_strategy("rotate") == FoldStrategy::Rotate);
  CHECK_THROWS_AS(parse_fold_strategy("stratified"), Error);
}

TEST_CASE("too few authors for folds") {
  try {
    make_folds(9, 10, 0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
  }
}

TEST_CASE("aggregation examples") {
  const auto& catalog = builtin_catalog();
  std::vector<double> facets(15, 3.0);
  for (auto f : catalog.trait_facets(catalog.trait_index("A"))) facets[f] = 4.0;
  const auto set = aggregate_predictions(TargetLevel::Facet, facets, catalog);
  CHECK(set.traits[catalog.trait_index("A")] == 4.0);
  CHECK(set.items.empty());

  std::vector<double> items(60, 3.0);
  const auto com = catalog.facet_index("A_Com");
  double v = 1.0;
  for (auto i : catalog.facet_items(com)) items[i] = v++;
  const auto item_set = aggregate_predictions(TargetLevel::Item, items, catalog);
  CHECK(item_set.facets[com] == 2.5);

  const auto flat = aggregate_predictions(TargetLevel::Item, std::vector<double>(60, 3.0), catalog);
  for (double f : flat.facets) CHECK(f == 3.0);
  for (double t : flat.traits) CHECK(t == 3.0);
}

TEST_CASE("aggregation by id reports the missing child") {
  const auto& catalog = builtin_catalog();
  std::map<std::string, double> values;
  for (const auto& f : catalog.facets()) values[f.acronym] = 3.0;
  CHECK(aggregate_predictions(TargetLevel::Facet, values, catalog).traits.size() == 5);
  values.erase("N_Dep");
  try {
    aggregate_predictions(TargetLevel::Facet, values, catalog);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Contract);
    CHECK(std::string(e.what()).find("N_Dep") != std::string::npos);
  }
}

TEST_CASE("aggregation paths commute") {
  const auto& catalog = builtin_catalog();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> score(1.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> items(60);
    for (auto& v : items) v = score(rng);
    const auto set = aggregate_predictions(TargetLevel::Item, items, catalog);
    for (std::size_t t = 0; t < 5; ++t) {
      const auto members = catalog.trait_items(t);
      double direct = 0.0;
      for (auto i : members) direct += items[i];
      direct /= static_cast<double>(members.size());
      CHECK(std::abs(direct - set.traits[t]) < 1e-12);
    }
  }
}

TEST_CASE("experiment config validation") {
  ExperimentConfig c;
  CHECK_NOTHROW(validate(c));
  c.delta = 1.0;
  CHECK_THROWS_AS(validate(c), Error);
  c.delta = -0.1;
  CHECK_THROWS_AS(validate(c), Error);
  c = {};
  c.epsilon = 0.0;
  CHECK_THROWS_AS(validate(c), Error);
  c = {};
  c.model = ModelKind::M3;
  c.level = TargetLevel::Facet;
  CHECK_THROWS_AS(validate(c), Error);
  CHECK(parse_model_kind("m2") == ModelKind::M2);
  CHECK_THROWS_AS(parse_model_kind("m4"), Error);
}

TEST_CASE("baseline report matches a loop oracle") {
  Fixture fx(40);
  const auto config = quick(ModelKind::Baseline, TargetLevel::Facet);
  const auto report = run_experiment(fx.corpus, {}, fx.catalog, config);
  const auto folds = make_folds(40, config.folds, config.seed);
  REQUIRE(report.folds.size() == folds.size());

  for (std::size_t f = 0; f < fx.catalog.facets().size(); ++f) {
    const auto& row = report.target(fx.catalog.facets()[f].acronym);
    CHECK(!row.derived);
    for (std::size_t k = 0; k < folds.size(); ++k) {
      double mean = 0.0;
      std::size_t count = 0;
      for (const auto* part : {&folds[k].train, &folds[k].validation}) {
        for (auto a : *part) {
          mean += fx.corpus.authors[a].truth->facet_scores[f];
          ++count;
        }
      }
      mean /= static_cast<double>(count);
      double err = 0.0, hits = 0.0;
      for (auto a : folds[k].test) {
        const double d = std::abs(mean - fx.corpus.authors[a].truth->facet_scores[f]);
        err += d;
        if (d <= 0.5) hits += 1.0;
      }
      const auto n_test = static_cast<double>(folds[k].test.size());
      CHECK(std::abs(row.mae[k] - err / n_test) < 1e-12);
      CHECK(std::abs(row.acc[k] - hits / n_test) < 1e-12);
    }
    CHECK(std::abs(row.mae_mean - mean_of(row.mae)) < 1e-15);
    CHECK(std::abs(row.mae_std - sample_std(row.mae)) < 1e-15);
  }
  CHECK(report.target("A").derived);
  CHECK_THROWS_AS(report.target("I01"), Error);
}

TEST_CASE("item-level ordinal report covers the hierarchy") {
  Fixture fx(24);
  auto config = quick(ModelKind::M3, TargetLevel::Item);
  config.folds = 2;
  config.train.epochs = 1;
  config.jobs = 4;
  const auto features = build_features(config.model, config.level, fx.corpus, fx.catalog, fx.backend, fx.items,
                                       config.delta);
  CHECK(features.targets() == 60);
  const auto report = run_experiment(fx.corpus, features, fx.catalog, config);
  CHECK(report.targets.size() == 80);
  std::size_t items = 0, facets = 0, traits = 0;
  for (const auto& t : report.targets) {
    if (t.target.size() == 1) {
      ++traits;
      CHECK(t.derived);
    } else if (t.target[0] == 'I') {
      ++items;
      CHECK(!t.derived);
    } else {
      ++facets;
      CHECK(t.derived);
    }
  }
  CHECK(items == 60);
  CHECK(facets == 15);
  CHECK(traits == 5);
}

TEST_CASE("reports are deterministic across thread counts") {
  Fixture fx(30);
  auto config = quick(ModelKind::M2, TargetLevel::Trait);
  const auto features = build_features(config.model, config.level, fx.corpus, fx.catalog, fx.backend, fx.items,
                                       config.delta);
  const auto a = report_json(run_experiment(fx.corpus, features, fx.catalog, config));
  config.jobs = 3;
  const auto b = report_json(run_experiment(fx.corpus, features, fx.catalog, config));
  CHECK(a == b);

  const auto doc = nlohmann::json::parse(a);
  CHECK(doc["model"] == "m2");
  CHECK(doc["level"] == "trait");
  CHECK(doc["epsilon"] == 0.5);
  CHECK(doc["folds"].size() == 3);
  for (const auto& key : {"mae_mean", "mae_std", "acc_mean", "acc_std"}) CHECK(doc["targets"]["O"].contains(key));
}

TEST_CASE("fold failures name the fold and target") {
  Fixture fx(20);
  auto config = quick(ModelKind::M1, TargetLevel::Trait);
  config.train.learning_rate = 1e308;
  const auto features = build_features(config.model, config.level, fx.corpus, fx.catalog, fx.backend, fx.items,
                                       config.delta);
  try {
    run_experiment(fx.corpus, features, fx.catalog, config);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).rfind("fold ", 0) == 0);
    CHECK(std::string(e.what()).find("target ") != std::string::npos);
  }
}

TEST_CASE("features for each model") {
  Fixture fx(12);
  CHECK(build_features(ModelKind::Baseline, TargetLevel::Trait, fx.corpus, fx.catalog, fx.backend, fx.items, 0.2)
            .empty());
  const auto m1 = build_features(ModelKind::M1, TargetLevel::Facet, fx.corpus, fx.catalog, fx.backend, fx.items, 0.2);
  CHECK(m1.targets() == 15);
  CHECK(m1.authors() == 12);
  CHECK(m1.dimension() == 96);
  CHECK(std::equal(m1.at(3, 0).begin(), m1.at(3, 0).end(), m1.at(3, 14).begin()));

  std::ostringstream dump;
  const auto m2 = build_features(ModelKind::M2, TargetLevel::Facet, fx.corpus, fx.catalog, fx.backend, fx.items, 0.2,
                                 &dump);
  std::istringstream lines(dump.str());
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("alphas"));
    CHECK(j["alphas"].size() == j["kept"].size());
    ++count;
  }
  CHECK(count == 12 * 15);
  // Planted statements reach their facet.
  std::size_t used = 0;
  for (std::size_t a = 0; a < 12; ++a) used += m2.sentences_used(a, fx.catalog.facet_index("E_Soc"));
  CHECK(used > 0);

  ItemEmbeddings wrong = fx.items;
  for (auto& e : wrong.statements) e.resize(8);
  CHECK_THROWS_AS(build_features(ModelKind::M2, TargetLevel::Trait, fx.corpus, fx.catalog, fx.backend, wrong, 0.2),
                  Error);
}

TEST_CASE("prepare_corpus requires responses when asked") {
  const auto& catalog = builtin_catalog();
  TestBackend backend(1, 32);
  std::vector<EssayRecord> records{{"a1", "Hello there. General chat.", std::nullopt}};
  CHECK(prepare_corpus(records, catalog, backend, false).authors.size() == 1);
  CHECK_THROWS_WITH_AS(prepare_corpus(records, catalog, backend, true), doctest::Contains("a1"), Error);
}

TEST_CASE("comparison table") {
  Fixture fx(20);
  const auto base = run_experiment(fx.corpus, {}, fx.catalog, quick(ModelKind::Baseline, TargetLevel::Trait));
  auto better = base;
  better.model = ModelKind::M2;
  for (auto& t : better.targets) {
    t.mae_mean = 0.25;
    t.acc_mean = 0.9;
  }
  const std::vector<MetricReport> reports{base, better};
  const auto table = comparison_table(reports);
  CHECK(table.rfind("Trait Prediction: MAE (lower is better)\n", 0) == 0);
  CHECK(table.find("Trait Prediction: ACC (higher is better) at epsilon=0.5") != std::string::npos);
  CHECK(table.find("**0.250**") != std::string::npos);
  CHECK(table.find("**0.900**") != std::string::npos);
  std::size_t rows = 0;
  std::istringstream in(table);
  std::string line;
  while (std::getline(in, line)) {
    if (line.size() > 1 && line[1] == ' ' && std::string("OCEAN").find(line[0]) != std::string::npos) ++rows;
  }
  CHECK(rows == 10);

  const std::vector<MetricReport> single{base};
  CHECK(comparison_table(single).find("**") == std::string::npos);
  CHECK_THROWS_AS(comparison_table({}), Error);
}

TEST_CASE("prediction with stored heads") {
  Fixture fx(20);
  auto config = quick(ModelKind::M2, TargetLevel::Facet);
  config.folds = 1;
  const auto features = build_features(config.model, config.level, fx.corpus, fx.catalog, fx.backend, fx.items,
                                       config.delta);
  const auto dir = fresh_dir("predict");
  run_experiment(fx.corpus, features, fx.catalog, config, {dir});
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) files += e.is_regular_file();
  CHECK(files == 15);
  CHECK(fs::exists(checkpoint_path(dir, 1, "A_Com")));
  CHECK(checkpoint_path(dir, 1, "A_Com").parent_path().filename() == "fold01");

  const auto preds = predict_with_checkpoints(fx.corpus, features, fx.catalog, TargetLevel::Facet, dir, 1);
  REQUIRE(preds.size() == 20);
  for (const auto& p : preds) {
    CHECK(p.scores.facets.size() == 15);
    for (double v : p.scores.facets) CHECK((v >= 1.0 && v <= 5.0));
    CHECK(p.sentences_used.size() == 15);
  }
  const auto doc = nlohmann::json::parse(predictions_json(preds, fx.catalog));
  CHECK(doc.size() == 20);
  CHECK(doc[0]["facets"].size() == 15);
  CHECK(doc[0]["traits"].size() == 5);
  CHECK(!doc[0].contains("items"));

  // Off-topic essays keep nothing and fall back to the zero document.
  const auto off = prepare_corpus(off_topic_corpus(6, 3), fx.catalog, fx.backend, false);
  const auto off_features = build_features(config.model, config.level, off, fx.catalog, fx.backend, fx.items,
                                           config.delta);
  for (const auto& p : predict_with_checkpoints(off, off_features, fx.catalog, TargetLevel::Facet, dir, 1)) {
    for (const auto& [id, n] : p.sentences_used) CHECK(n == 0);
  }

  try {
    predict_with_checkpoints(fx.corpus, features, fx.catalog, TargetLevel::Facet, dir, 2);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Missing);
    CHECK(std::string(e.what()).find("fold 2, target O_Int") != std::string::npos);
  }
}
