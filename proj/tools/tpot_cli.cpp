// Command line front end over the C interface.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "tpot/tpot.h"

namespace {

constexpr const char* kSeedHelp = R"(Seeds: every command derives its randomness from --seed S.
  fold k (1-based) uses seed S + 1000*k for its split,
  the head for target t (0-based, catalog order) in fold k uses S + 1000*k + t,
  the test backend "test:<seed>" keys its noise on its own seed.)";

int exit_code(tpot_status s) {
  switch (s) {
    case TPOT_OK: return 0;
    case TPOT_ERR_INVALID:
    case TPOT_ERR_CONTRACT: return 2;
    case TPOT_ERR_MISSING: return 3;
    case TPOT_ERR_BACKEND: return 4;
    default: return 1;
  }
}

struct Failure {
  tpot_status status;
};

void check(tpot_status s) {
  if (s != TPOT_OK) throw Failure{s};
}

struct Options {
  std::string dataset;
  std::string catalog;
  std::string backend = "http:http://127.0.0.1:8471";
  std::string out = "out";
  std::string model = "m2";
  std::string level = "trait";
  std::string strategy = "resample";
  std::string archive;
  std::string checkpoints;
  std::string output;
  std::string json;
  double delta = 0.2;
  double epsilon = 0.5;
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  bool dump_relevance = false;
  std::size_t epochs = 200;
  std::size_t patience = 10;
  std::size_t batch_size = 32;
  std::size_t hidden = 300;
  double learning_rate = 1e-3;
  int fold = 1;
  std::size_t authors = 400;
  bool off_topic = false;
  bool no_cache = false;
};

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using CatalogPtr = std::unique_ptr<tpot_catalog, Deleter<tpot_catalog, tpot_catalog_free>>;
using DatasetPtr = std::unique_ptr<tpot_dataset, Deleter<tpot_dataset, tpot_dataset_free>>;
using BackendPtr = std::unique_ptr<tpot_backend, Deleter<tpot_backend, tpot_backend_free>>;

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { tpot_string_free(s); }
};

CatalogPtr open_catalog(const Options& o) {
  tpot_catalog* c = nullptr;
  check(tpot_catalog_open(o.catalog.empty() ? nullptr : o.catalog.c_str(), &c));
  return CatalogPtr(c);
}

DatasetPtr open_dataset(const Options& o) {
  tpot_dataset* d = nullptr;
  check(tpot_dataset_load(o.dataset.c_str(), &d));
  return DatasetPtr(d);
}

std::string cache_dir(const Options& o) {
  if (o.no_cache) return {};
  if (const char* env = std::getenv("TPOT_CACHE_DIR"); env && *env) return env;
  return (std::filesystem::path(o.out) / "cache").string();
}

BackendPtr open_backend(const Options& o, const tpot_catalog* catalog) {
  tpot_backend* b = nullptr;
  const auto cache = cache_dir(o);
  check(tpot_backend_open(o.backend.c_str(), catalog, cache.empty() ? nullptr : cache.c_str(), &b));
  return BackendPtr(b);
}

tpot_run_options run_options(const Options& o) {
  tpot_run_options r;
  tpot_run_options_init(&r);
  r.model = o.model.c_str();
  r.level = o.level.c_str();
  r.strategy = o.strategy.c_str();
  r.delta = o.delta;
  r.epsilon = o.epsilon;
  r.folds = o.folds;
  r.seed = o.seed;
  r.jobs = o.jobs;
  r.archive = o.archive.empty() ? nullptr : o.archive.c_str();
  r.out_dir = o.out.c_str();
  r.dump_relevance = o.dump_relevance ? 1 : 0;
  r.epochs = o.epochs;
  r.patience = o.patience;
  r.batch_size = o.batch_size;
  r.hidden = o.hidden;
  r.learning_rate = o.learning_rate;
  return r;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f || std::fwrite(text.data(), 1, text.size(), f) != text.size()) {
    if (f) std::fclose(f);
    std::fprintf(stderr, "error: cannot write %s\n", path.string().c_str());
    throw Failure{TPOT_ERR_INVALID};
  }
  std::fclose(f);
}

void cmd_stats(const Options& o) {
  auto catalog = open_catalog(o);
  auto dataset = open_dataset(o);
  auto backend = open_backend(o, catalog.get());
  OwnedString table, json;
  check(tpot_corpus_stats(dataset.get(), backend.get(), &table.s, &json.s));
  std::fputs(table.s, stdout);
  write_file(o.json.empty() ? std::filesystem::path(o.out) / "stats.json" : std::filesystem::path(o.json), json.s);
}

void cmd_embed_catalog(const Options& o) {
  auto catalog = open_catalog(o);
  auto backend = open_backend(o, catalog.get());
  const auto archive = o.archive.empty() ? (std::filesystem::path(o.out) / "item_embeddings.bin").string() : o.archive;
  check(tpot_embed_catalog(catalog.get(), backend.get(), archive.c_str()));
  std::printf("wrote %s (encoder calls: %llu)\n", archive.c_str(),
              static_cast<unsigned long long>(tpot_backend_encoder_calls(backend.get())));
}

void cmd_train(const Options& o) {
  auto catalog = open_catalog(o);
  auto dataset = open_dataset(o);
  auto backend = open_backend(o, catalog.get());
  const auto r = run_options(o);
  check(tpot_train(catalog.get(), dataset.get(), backend.get(), &r));
  std::printf("checkpoints under %s\n",
              (std::filesystem::path(o.out) / "checkpoints" / (o.model + "-" + o.level)).string().c_str());
}

void cmd_eval(const Options& o) {
  auto catalog = open_catalog(o);
  auto dataset = open_dataset(o);
  auto backend = open_backend(o, catalog.get());
  const auto r = run_options(o);
  OwnedString table;
  check(tpot_eval(catalog.get(), dataset.get(), backend.get(), &r, &table.s));
  std::fputs(table.s, stdout);
}

void cmd_predict(const Options& o) {
  auto catalog = open_catalog(o);
  auto dataset = open_dataset(o);
  auto backend = open_backend(o, catalog.get());
  const auto r = run_options(o);
  check(tpot_predict(catalog.get(), dataset.get(), backend.get(), &r,
                     o.checkpoints.empty() ? nullptr : o.checkpoints.c_str(), o.fold,
                     o.output.empty() ? nullptr : o.output.c_str()));
}

void cmd_synth(const Options& o) {
  auto catalog = open_catalog(o);
  const auto path = o.output.empty() ? (std::filesystem::path(o.out) / "synthetic.jsonl").string() : o.output;
  check(tpot_dataset_write_synthetic(catalog.get(), path.c_str(), o.authors, o.seed, o.off_topic ? 1 : 0));
}

void add_common(CLI::App* app, Options& o) {
  app->add_option("--catalog", o.catalog, "Catalog JSON (default: bundled BFI-2)");
  app->add_option("--backend", o.backend, "Encoder: test:<seed>[:<dim>[:<max_tokens>]] or http:<url>")
      ->capture_default_str();
  app->add_option("--out", o.out, "Output directory")->capture_default_str();
  app->add_option("--seed", o.seed, "Master seed")->capture_default_str();
  app->add_flag("--no-cache", o.no_cache, "Do not use the embedding cache (default <out>/cache, or $TPOT_CACHE_DIR)");
}

void add_run(CLI::App* app, Options& o, bool model_list) {
  app->add_option("--dataset", o.dataset, "JSON Lines dataset")->required();
  app->add_option("--model", o.model, model_list ? "baseline|m1|m2|m3, comma separated" : "baseline|m1|m2|m3")
      ->capture_default_str();
  app->add_option("--level", o.level, "trait|facet|item")->capture_default_str();
  app->add_option("--delta", o.delta, "Relevance threshold in [0, 1)")->capture_default_str();
  app->add_option("--epsilon", o.epsilon, "Tolerance of the accuracy metric")->capture_default_str();
  app->add_option("--folds", o.folds, "Number of folds")->capture_default_str();
  app->add_option("--strategy", o.strategy, "resample|rotate")->capture_default_str();
  app->add_option("--jobs", o.jobs, "Parallel (fold, target) workers")->capture_default_str();
  app->add_option("--archive", o.archive, "Item embedding archive from embed-catalog");
  app->add_flag("--dump-relevance", o.dump_relevance, "Write per-sentence relevance profiles as JSON Lines");
  app->add_option("--epochs", o.epochs, "Maximum training epochs")->capture_default_str();
  app->add_option("--patience", o.patience, "Early stopping patience")->capture_default_str();
  app->add_option("--batch-size", o.batch_size, "Mini-batch size")->capture_default_str();
  app->add_option("--hidden", o.hidden, "Hidden units")->capture_default_str();
  app->add_option("--lr", o.learning_rate, "Adam learning rate")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Personality trait prediction from essays with targeted sentence preselection"};
  app.footer(kSeedHelp);
  app.set_config("--config", "", "TOML/INI file with option values; flags take precedence");
  app.require_subcommand(1);
  Options o;

  auto* stats = app.add_subcommand("stats", "Token and sentence statistics of a dataset");
  add_common(stats, o);
  stats->add_option("--dataset", o.dataset, "JSON Lines dataset")->required();
  stats->add_option("--json", o.json, "Where to write the JSON statistics (default <out>/stats.json)");

  auto* embed = app.add_subcommand("embed-catalog", "Embed catalog statements and reverses into an archive");
  add_common(embed, o);
  embed->add_option("--archive", o.archive, "Archive path (default <out>/item_embeddings.bin)");

  auto* train = app.add_subcommand("train", "Cross-validated training; writes one checkpoint per fold and target");
  add_common(train, o);
  add_run(train, o, false);

  auto* eval = app.add_subcommand("eval", "Cross-validated evaluation of one or more models");
  add_common(eval, o);
  add_run(eval, o, true);

  auto* predict = app.add_subcommand("predict", "Apply the heads of one fold to new essays");
  add_common(predict, o);
  add_run(predict, o, false);
  predict->add_option("--checkpoints", o.checkpoints, "Checkpoint directory (default <out>/checkpoints/<model>-<level>)");
  predict->add_option("--fold", o.fold, "Fold whose heads are applied")->capture_default_str();
  predict->add_option("--output", o.output, "Predictions file (default <out>/predictions.json)");

  auto* synth = app.add_subcommand("synth", "Write a synthetic planted-signal dataset");
  add_common(synth, o);
  synth->add_option("--authors", o.authors, "Number of authors")->capture_default_str();
  synth->add_option("--output", o.output, "Dataset path (default <out>/synthetic.jsonl)");
  synth->add_flag("--off-topic", o.off_topic, "Only filler sentences");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*stats) cmd_stats(o);
    else if (*embed) cmd_embed_catalog(o);
    else if (*train) cmd_train(o);
    else if (*eval) cmd_eval(o);
    else if (*predict) cmd_predict(o);
    else if (*synth) cmd_synth(o);
  } catch (const Failure& f) {
    if (*tpot_last_error()) std::fprintf(stderr, "error: %s\n", tpot_last_error());
    return exit_code(f.status);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
