#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tpot/tpot.h"

namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "tpot_capi_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string last_error() { return tpot_last_error(); }

}  // namespace

TEST_CASE("version and status codes") {
  CHECK(std::string(tpot_version()) == "1.0.0");
  CHECK(TPOT_OK == 0);
  CHECK(TPOT_ERR_MISSING == 3);
  CHECK(TPOT_ERR_BACKEND == 4);
}

TEST_CASE("item scoring") {
  double v = 0;
  REQUIRE(tpot_item_score(2, 1, &v) == TPOT_OK);
  CHECK(v == 4.0);
  REQUIRE(tpot_item_score(2, 0, &v) == TPOT_OK);
  CHECK(v == 2.0);
  CHECK(tpot_item_score(6, 0, &v) == TPOT_ERR_INVALID);
  CHECK(last_error().find("6") != std::string::npos);
  CHECK(tpot_item_score(3, 0, nullptr) == TPOT_ERR_CONTRACT);
}

TEST_CASE("score sheets through the catalog handle") {
  tpot_catalog* catalog = nullptr;
  REQUIRE(tpot_catalog_open(nullptr, &catalog) == TPOT_OK);
  int responses[60];
  for (int& r : responses) r = 3;
  double items[60], facets[15], traits[5];
  REQUIRE(tpot_score_sheet(catalog, responses, items, facets, traits) == TPOT_OK);
  for (double t : traits) CHECK(t == 3.0);
  responses[0] = 0;
  CHECK(tpot_score_sheet(catalog, responses, items, facets, traits) == TPOT_ERR_INVALID);
  CHECK(tpot_score_sheet(nullptr, responses, items, facets, traits) == TPOT_ERR_CONTRACT);
  tpot_catalog_free(catalog);

  tpot_catalog* missing = nullptr;
  CHECK(tpot_catalog_open("/nonexistent/catalog.json", &missing) == TPOT_ERR_INVALID);
  CHECK(missing == nullptr);
  tpot_catalog_free(nullptr);
}

TEST_CASE("numerics") {
  const double a[3] = {1, 2, 3}, b[3] = {4, 5, 6};
  double c = 0;
  REQUIRE(tpot_cosine(a, b, 3, &c) == TPOT_OK);
  CHECK(c == doctest::Approx(32.0 / std::sqrt(14.0 * 77.0)).epsilon(1e-12));
  const double zero[3] = {0, 0, 0};
  REQUIRE(tpot_cosine(a, zero, 3, &c) == TPOT_OK);
  CHECK(c == 0.0);

  double cum[6], interval[5];
  int prediction = 0;
  REQUIRE(tpot_ordinal(2.6, 0.3, cum, interval, &prediction) == TPOT_OK);
  CHECK(prediction == 3);
  CHECK(cum[0] <= cum[5]);
  CHECK(tpot_ordinal(3.0, 0.0, cum, interval, &prediction) != TPOT_OK);

  // Two sentences against one item: one on the forward axis, one orthogonal.
  const double sentences[4] = {1, 0, 0, 1};
  const double forward[2] = {1, 0};
  const double reverse[2] = {-1, 0};
  double alphas[2], weights[2];
  int kept[2];
  REQUIRE(tpot_relevance_profile(sentences, 2, forward, reverse, 1, 2, 0.2, alphas, weights, kept) == TPOT_OK);
  CHECK(alphas[0] == 1.0);
  CHECK(alphas[1] == 0.0);
  CHECK(weights[0] == 1.0);
  CHECK(kept[0] == 1);
  CHECK(kept[1] == 0);
}

TEST_CASE("test backend through the handle") {
  tpot_catalog* catalog = nullptr;
  REQUIRE(tpot_catalog_open(nullptr, &catalog) == TPOT_OK);
  tpot_backend* backend = nullptr;
  REQUIRE(tpot_backend_open("test:1:32", catalog, nullptr, &backend) == TPOT_OK);
  char* name = nullptr;
  size_t dim = 0, max_tokens = 0;
  REQUIRE(tpot_backend_describe(backend, &name, &dim, &max_tokens) == TPOT_OK);
  CHECK(std::string(name).find("test") != std::string::npos);
  CHECK(dim == 32);
  CHECK(max_tokens == 512);
  tpot_string_free(name);

  const char* texts[2] = {"I like hiking.", "The sky is blue."};
  std::vector<double> out(64);
  REQUIRE(tpot_backend_embed(backend, texts, 2, out.data(), out.size()) == TPOT_OK);
  double norm = 0;
  for (std::size_t i = 0; i < 32; ++i) norm += out[i] * out[i];
  CHECK(norm == doctest::Approx(1.0));
  CHECK(tpot_backend_encoder_calls(backend) == 1);
  CHECK(tpot_backend_embed(backend, texts, 2, out.data(), 10) == TPOT_ERR_CONTRACT);
  tpot_backend_free(backend);

  CHECK(tpot_backend_open("bogus", catalog, nullptr, &backend) == TPOT_ERR_INVALID);
  CHECK(tpot_backend_open("http:http://127.0.0.1:1", catalog, nullptr, &backend) == TPOT_ERR_BACKEND);
  tpot_catalog_free(catalog);
}

TEST_CASE("datasets, training and prediction") {
  const auto dir = fresh_dir("pipeline");
  tpot_catalog* catalog = nullptr;
  REQUIRE(tpot_catalog_open(nullptr, &catalog) == TPOT_OK);
  const auto data_path = (dir / "synthetic.jsonl").string();
  REQUIRE(tpot_dataset_write_synthetic(catalog, data_path.c_str(), 20, 7, 0) == TPOT_OK);
  tpot_dataset* dataset = nullptr;
  REQUIRE(tpot_dataset_load(data_path.c_str(), &dataset) == TPOT_OK);
  CHECK(tpot_dataset_size(dataset) == 20);

  tpot_dataset* none = nullptr;
  CHECK(tpot_dataset_load((dir / "absent.jsonl").string().c_str(), &none) == TPOT_ERR_INVALID);

  tpot_backend* backend = nullptr;
  REQUIRE(tpot_backend_open("test:1", catalog, (dir / "cache").string().c_str(), &backend) == TPOT_OK);

  char* table = nullptr;
  char* json = nullptr;
  REQUIRE(tpot_corpus_stats(dataset, backend, &table, &json) == TPOT_OK);
  CHECK(std::string(table).find("tokens/essay") != std::string::npos);
  tpot_string_free(table);
  tpot_string_free(json);

  const auto archive = (dir / "items.bin").string();
  REQUIRE(tpot_embed_catalog(catalog, backend, archive.c_str()) == TPOT_OK);
  CHECK(fs::exists(archive));

  tpot_run_options options;
  tpot_run_options_init(&options);
  CHECK(options.delta == 0.2);
  CHECK(options.epsilon == 0.5);
  CHECK(options.folds == 10);
  const auto out = (dir / "out").string();
  options.model = "m2";
  options.level = "trait";
  options.folds = 2;
  options.epochs = 2;
  options.hidden = 8;
  options.archive = archive.c_str();
  options.out_dir = out.c_str();
  REQUIRE(tpot_train(catalog, dataset, backend, &options) == TPOT_OK);
  CHECK(fs::exists(fs::path(out) / "report_m2_trait.json"));
  CHECK(fs::exists(fs::path(out) / "checkpoints" / "m2-trait" / "fold02" / "N.ckpt"));

  const auto preds = (dir / "preds.json").string();
  REQUIRE(tpot_predict(catalog, dataset, backend, &options, nullptr, 1, preds.c_str()) == TPOT_OK);
  CHECK(fs::file_size(preds) > 0);
  CHECK(tpot_predict(catalog, dataset, backend, &options, nullptr, 3, preds.c_str()) == TPOT_ERR_MISSING);
  CHECK(last_error().find("fold 3, target O") != std::string::npos);
  CHECK(tpot_predict(catalog, dataset, backend, &options, nullptr, 0, preds.c_str()) == TPOT_ERR_INVALID);

  options.model = "baseline,m1";
  REQUIRE(tpot_eval(catalog, dataset, backend, &options, &table) == TPOT_OK);
  CHECK(std::string(table).find("Trait Prediction: MAE") != std::string::npos);
  tpot_string_free(table);
  CHECK(fs::exists(fs::path(out) / "comparison_trait.txt"));

  options.delta = 1.5;
  CHECK(tpot_train(catalog, dataset, backend, &options) == TPOT_ERR_INVALID);
  options.delta = 0.2;
  options.model = "m3";
  CHECK(tpot_train(catalog, dataset, backend, &options) == TPOT_ERR_INVALID);

  tpot_backend_free(backend);
  tpot_dataset_free(dataset);
  tpot_catalog_free(catalog);
}

TEST_CASE("null arguments are contract errors") {
  CHECK(tpot_catalog_open(nullptr, nullptr) == TPOT_ERR_CONTRACT);
  CHECK(tpot_dataset_load(nullptr, nullptr) == TPOT_ERR_CONTRACT);
  CHECK(tpot_cosine(nullptr, nullptr, 3, nullptr) == TPOT_ERR_CONTRACT);
  CHECK(!last_error().empty());
}
