#include "tpot/tpot.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "tpot/backends.hpp"
#include "tpot/catalog.hpp"
#include "tpot/error.hpp"
#include "tpot/experiment.hpp"
#include "tpot/preselect.hpp"
#include "tpot/synthetic.hpp"
#include "tpot/textprep.hpp"

struct tpot_catalog {
  tpot::Catalog catalog;
};

struct tpot_dataset {
  std::vector<tpot::EssayRecord> records;
};

struct tpot_backend {
  std::unique_ptr<tpot::EmbeddingBackend> backend;
};

namespace {

thread_local std::string g_last_error;

tpot_status status_of(tpot::ErrorKind kind) {
  switch (kind) {
    case tpot::ErrorKind::Internal: return TPOT_ERR_INTERNAL;
    case tpot::ErrorKind::Validation: return TPOT_ERR_INVALID;
    case tpot::ErrorKind::Contract: return TPOT_ERR_CONTRACT;
    case tpot::ErrorKind::Missing: return TPOT_ERR_MISSING;
    case tpot::ErrorKind::Backend: return TPOT_ERR_BACKEND;
  }
  return TPOT_ERR_INTERNAL;
}

template <class Fn>
tpot_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return TPOT_OK;
  } catch (const tpot::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return TPOT_ERR_INTERNAL;
}

template <class T>
T& deref(T* p, const char* what) {
  if (!p) tpot::fail(tpot::ErrorKind::Contract, std::string(what) + " is null");
  return *p;
}

template <class T>
T* checked(T* p, const char* what) {
  if (!p) tpot::fail(tpot::ErrorKind::Contract, std::string(what) + " is null");
  return p;
}

char* copy_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) tpot::fail(tpot::ErrorKind::Validation, "cannot write " + path.string());
  out << content;
  if (!out) tpot::fail(tpot::ErrorKind::Validation, "write failed: " + path.string());
}

std::string str_or(const char* s, const char* fallback) { return s ? s : fallback; }

std::vector<tpot::ModelKind> parse_models(const std::string& list) {
  std::vector<tpot::ModelKind> out;
  std::stringstream ss(list);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    out.push_back(tpot::parse_model_kind(part));
  }
  if (out.empty()) tpot::fail(tpot::ErrorKind::Validation, "no model given");
  return out;
}

tpot::ExperimentConfig experiment_config(const tpot_run_options& o, tpot::ModelKind model) {
  tpot::ExperimentConfig c;
  c.model = model;
  c.level = tpot::parse_target_level(str_or(o.level, "trait"));
  c.strategy = tpot::parse_fold_strategy(str_or(o.strategy, "resample"));
  c.delta = o.delta;
  c.epsilon = o.epsilon;
  c.folds = o.folds;
  c.seed = o.seed;
  c.jobs = o.jobs;
  c.train.epochs = o.epochs;
  c.train.patience = o.patience;
  c.train.batch_size = o.batch_size;
  c.train.hidden = o.hidden;
  c.train.learning_rate = o.learning_rate;
  c.train.seed = o.seed;
  tpot::validate(c);
  return c;
}

std::filesystem::path out_dir(const tpot_run_options& o) {
  if (!o.out_dir || !*o.out_dir) tpot::fail(tpot::ErrorKind::Validation, "an output directory is required");
  return o.out_dir;
}

std::string run_name(const tpot::ExperimentConfig& c) {
  return std::string(tpot::to_string(c.model)) + "_" + std::string(tpot::to_string(c.level));
}

bool needs_items(tpot::ModelKind m) { return m == tpot::ModelKind::M2 || m == tpot::ModelKind::M3; }

tpot::ItemEmbeddings item_embeddings(const tpot::Catalog& catalog, tpot::EmbeddingBackend& backend,
                                     const tpot_run_options& o) {
  const auto descriptor = backend.descriptor();
  if (o.archive && *o.archive) return tpot::load_item_embeddings(o.archive, &descriptor);
  return tpot::embed_catalog(catalog, backend);
}

tpot::FeatureSet features_for(const tpot::ExperimentConfig& c, const tpot::Corpus& corpus,
                              const tpot::Catalog& catalog, tpot::EmbeddingBackend& backend,
                              const tpot::ItemEmbeddings& items, const tpot_run_options& o) {
  std::ofstream dump;
  if (o.dump_relevance && needs_items(c.model)) {
    const auto path = out_dir(o) / ("relevance_" + run_name(c) + ".jsonl");
    std::filesystem::create_directories(path.parent_path());
    dump.open(path, std::ios::binary | std::ios::trunc);
    if (!dump) tpot::fail(tpot::ErrorKind::Validation, "cannot write " + path.string());
  }
  return tpot::build_features(c.model, c.level, corpus, catalog, backend, items, c.delta,
                              dump.is_open() ? &dump : nullptr);
}

std::filesystem::path default_checkpoints(const tpot_run_options& o, const tpot::ExperimentConfig& c) {
  return out_dir(o) / "checkpoints" / (std::string(tpot::to_string(c.model)) + "-" + std::string(tpot::to_string(c.level)));
}

}  // namespace

extern "C" {

const char* tpot_last_error(void) { return g_last_error.c_str(); }

const char* tpot_version(void) { return "1.0.0"; }

void tpot_string_free(char* s) { std::free(s); }

tpot_status tpot_catalog_open(const char* path, tpot_catalog** out) {
  return guarded([&] {
    auto& slot = deref(out, "out");
    slot = nullptr;
    auto c = std::make_unique<tpot_catalog>(
        tpot_catalog{path ? tpot::load_catalog(path) : tpot::builtin_catalog()});
    slot = c.release();
  });
}

void tpot_catalog_free(tpot_catalog* catalog) { delete catalog; }

tpot_status tpot_item_score(int response, int reverse_keyed, double* out) {
  return guarded([&] { deref(out, "out") = tpot::item_score(response, reverse_keyed != 0); });
}

tpot_status tpot_score_sheet(const tpot_catalog* catalog, const int responses[60], double items[60],
                             double facets[15], double traits[5]) {
  return guarded([&] {
    const auto& c = deref(catalog, "catalog").catalog;
    checked(responses, "responses");
    tpot::ResponseSheet sheet;
    std::copy(responses, responses + tpot::kItemCount, sheet.responses.begin());
    const auto s = tpot::score_sheet(sheet, c);
    if (items) std::copy(s.item_scores.begin(), s.item_scores.end(), items);
    if (facets) std::copy(s.facet_scores.begin(), s.facet_scores.end(), facets);
    if (traits) std::copy(s.trait_scores.begin(), s.trait_scores.end(), traits);
  });
}

tpot_status tpot_dataset_load(const char* path, tpot_dataset** out) {
  return guarded([&] {
    auto& slot = deref(out, "out");
    slot = nullptr;
    auto d = std::make_unique<tpot_dataset>(tpot_dataset{tpot::load_dataset(checked(path, "path"))});
    slot = d.release();
  });
}

size_t tpot_dataset_size(const tpot_dataset* dataset) { return dataset ? dataset->records.size() : 0; }

void tpot_dataset_free(tpot_dataset* dataset) { delete dataset; }

tpot_status tpot_dataset_write_synthetic(const tpot_catalog* catalog, const char* path, size_t authors,
                                         uint64_t seed, int off_topic) {
  return guarded([&] {
    const auto& c = deref(catalog, "catalog").catalog;
    tpot::SyntheticOptions options;
    options.authors = authors;
    options.seed = seed;
    const auto records = off_topic ? tpot::off_topic_corpus(authors, seed) : tpot::synthetic_corpus(c, options);
    std::string text;
    for (const auto& r : records) text += tpot::dataset_line(r) + "\n";
    write_text(checked(path, "path"), text);
  });
}

tpot_status tpot_backend_open(const char* spec, const tpot_catalog* catalog, const char* cache_dir,
                              tpot_backend** out) {
  return guarded([&] {
    auto& slot = deref(out, "out");
    slot = nullptr;
    const auto parsed = tpot::parse_backend_spec(checked(spec, "spec"));
    std::optional<std::filesystem::path> cache;
    if (cache_dir && *cache_dir) cache = cache_dir;
    auto b = std::make_unique<tpot_backend>(
        tpot_backend{tpot::open_backend(parsed, deref(catalog, "catalog").catalog, cache)});
    slot = b.release();
  });
}

void tpot_backend_free(tpot_backend* backend) { delete backend; }

tpot_status tpot_backend_describe(const tpot_backend* backend, char** name, size_t* dim, size_t* max_tokens) {
  return guarded([&] {
    const auto d = deref(backend, "backend").backend->descriptor();
    if (name) *name = copy_string(d.name);
    if (dim) *dim = d.dimension;
    if (max_tokens) *max_tokens = d.max_tokens;
  });
}

uint64_t tpot_backend_encoder_calls(const tpot_backend* backend) {
  return backend ? backend->backend->encoder_calls() : 0;
}

tpot_status tpot_backend_embed(tpot_backend* backend, const char* const* texts, size_t n, double* out,
                               size_t out_len) {
  return guarded([&] {
    auto& b = *deref(backend, "backend").backend;
    checked(texts, "texts");
    std::vector<std::string> input;
    for (size_t i = 0; i < n; ++i) input.emplace_back(checked(texts[i], "text"));
    const auto dim = b.descriptor().dimension;
    if (out_len < n * dim) {
      tpot::fail(tpot::ErrorKind::Contract, "output buffer holds " + std::to_string(out_len) + " values, need " +
                                                std::to_string(n * dim));
    }
    const auto vectors = tpot::embed_batch(input, b);
    for (size_t i = 0; i < n; ++i) std::copy(vectors[i].begin(), vectors[i].end(), checked(out, "out") + i * dim);
  });
}

tpot_status tpot_corpus_stats(const tpot_dataset* dataset, tpot_backend* backend, char** table, char** json) {
  return guarded([&] {
    const auto stats = tpot::corpus_stats(deref(dataset, "dataset").records, *deref(backend, "backend").backend);
    if (table) *table = copy_string(tpot::format_corpus_stats(stats));
    if (json) *json = copy_string(tpot::corpus_stats_json(stats));
  });
}

tpot_status tpot_embed_catalog(const tpot_catalog* catalog, tpot_backend* backend, const char* archive) {
  return guarded([&] {
    const auto items = tpot::embed_catalog(deref(catalog, "catalog").catalog, *deref(backend, "backend").backend);
    const std::filesystem::path path = checked(archive, "archive");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    tpot::save_item_embeddings(path, items);
  });
}

void tpot_run_options_init(tpot_run_options* o) {
  if (!o) return;
  const tpot::TrainConfig train;
  *o = tpot_run_options{};
  o->model = "m2";
  o->level = "trait";
  o->strategy = "resample";
  o->delta = tpot::kDefaultDelta;
  o->epsilon = tpot::kDefaultEpsilon;
  o->folds = tpot::kDefaultFolds;
  o->seed = 0;
  o->jobs = 1;
  o->archive = nullptr;
  o->out_dir = nullptr;
  o->dump_relevance = 0;
  o->epochs = train.epochs;
  o->patience = train.patience;
  o->batch_size = train.batch_size;
  o->hidden = train.hidden;
  o->learning_rate = train.learning_rate;
}

tpot_status tpot_train(const tpot_catalog* catalog, const tpot_dataset* dataset, tpot_backend* backend,
                       const tpot_run_options* options) {
  return guarded([&] {
    const auto& o = deref(options, "options");
    const auto& c = deref(catalog, "catalog").catalog;
    auto& b = *deref(backend, "backend").backend;
    const auto models = parse_models(str_or(o.model, ""));
    if (models.size() != 1) tpot::fail(tpot::ErrorKind::Validation, "train takes exactly one model");
    const auto config = experiment_config(o, models.front());
    const auto dir = out_dir(o);

    const auto corpus = tpot::prepare_corpus(deref(dataset, "dataset").records, c, b, true);
    const auto items = needs_items(config.model) ? item_embeddings(c, b, o) : tpot::ItemEmbeddings{};
    const auto features = features_for(config, corpus, c, b, items, o);
    tpot::RunArtifacts artifacts;
    artifacts.checkpoint_dir = default_checkpoints(o, config);
    const auto report = tpot::run_experiment(corpus, features, c, config, artifacts);
    write_text(dir / ("report_" + run_name(config) + ".json"), tpot::report_json(report));
  });
}

tpot_status tpot_eval(const tpot_catalog* catalog, const tpot_dataset* dataset, tpot_backend* backend,
                      const tpot_run_options* options, char** table) {
  return guarded([&] {
    const auto& o = deref(options, "options");
    const auto& c = deref(catalog, "catalog").catalog;
    auto& b = *deref(backend, "backend").backend;
    std::vector<tpot::ExperimentConfig> configs;
    for (auto m : parse_models(str_or(o.model, ""))) configs.push_back(experiment_config(o, m));
    const auto dir = out_dir(o);

    const auto corpus = tpot::prepare_corpus(deref(dataset, "dataset").records, c, b, true);
    tpot::ItemEmbeddings items;
    for (const auto& config : configs) {
      if (needs_items(config.model)) {
        items = item_embeddings(c, b, o);
        break;
      }
    }
    std::vector<tpot::MetricReport> reports;
    for (const auto& config : configs) {
      const auto features = features_for(config, corpus, c, b, items, o);
      reports.push_back(tpot::run_experiment(corpus, features, c, config));
      write_text(dir / ("report_" + run_name(config) + ".json"), tpot::report_json(reports.back()));
    }
    const auto text = tpot::comparison_table(reports);
    write_text(dir / ("comparison_" + std::string(tpot::to_string(configs.front().level)) + ".txt"), text);
    if (table) *table = copy_string(text);
  });
}

tpot_status tpot_predict(const tpot_catalog* catalog, const tpot_dataset* dataset, tpot_backend* backend,
                         const tpot_run_options* options, const char* checkpoint_dir, int fold,
                         const char* output_path) {
  return guarded([&] {
    const auto& o = deref(options, "options");
    const auto& c = deref(catalog, "catalog").catalog;
    auto& b = *deref(backend, "backend").backend;
    const auto models = parse_models(str_or(o.model, ""));
    if (models.size() != 1) tpot::fail(tpot::ErrorKind::Validation, "predict takes exactly one model");
    const auto config = experiment_config(o, models.front());
    if (fold < 1) tpot::fail(tpot::ErrorKind::Validation, "fold ids start at 1");
    const std::filesystem::path dir =
        checkpoint_dir && *checkpoint_dir ? std::filesystem::path(checkpoint_dir) : default_checkpoints(o, config);
    // Fail on a missing head before any embedding work.
    for (const auto& id : tpot::target_ids(c, config.level)) {
      const auto path = tpot::checkpoint_path(dir, fold, id);
      if (!std::filesystem::exists(path)) {
        tpot::fail(tpot::ErrorKind::Missing, "missing checkpoint for fold " + std::to_string(fold) + ", target " +
                                                 id + " (" + path.string() + ")");
      }
    }
    const auto corpus = tpot::prepare_corpus(deref(dataset, "dataset").records, c, b, false);
    const auto items = needs_items(config.model) ? item_embeddings(c, b, o) : tpot::ItemEmbeddings{};
    const auto features = features_for(config, corpus, c, b, items, o);
    const auto predictions = tpot::predict_with_checkpoints(corpus, features, c, config.level, dir, fold);
    const std::filesystem::path target =
        output_path && *output_path ? std::filesystem::path(output_path) : out_dir(o) / "predictions.json";
    write_text(target, tpot::predictions_json(predictions, c));
  });
}

tpot_status tpot_cosine(const double* a, const double* b, size_t n, double* out) {
  return guarded([&] {
    deref(out, "out") = tpot::cosine_similarity({checked(a, "a"), n}, {checked(b, "b"), n});
  });
}

tpot_status tpot_relevance_profile(const double* sentences, size_t n_sentences, const double* forward,
                                   const double* reverse, size_t n_items, size_t dim, double delta, double* alphas,
                                   double* weights, int* kept) {
  return guarded([&] {
    tpot::require(dim > 0 && n_items > 0, "relevance needs a dimension and at least one item");
    std::vector<tpot::Embedding> s;
    for (size_t i = 0; i < n_sentences; ++i) {
      s.emplace_back(checked(sentences, "sentences") + i * dim, sentences + (i + 1) * dim);
    }
    tpot::TargetEmbedding target;
    target.target_id = "capi";
    for (size_t j = 0; j < n_items; ++j) {
      target.forward.emplace_back(checked(forward, "forward") + j * dim, forward + (j + 1) * dim);
      target.reverse.emplace_back(checked(reverse, "reverse") + j * dim, reverse + (j + 1) * dim);
    }
    const auto p = tpot::relevance_profile(s, target, delta);
    for (size_t i = 0; i < n_sentences; ++i) {
      if (alphas) alphas[i] = p.alphas[i];
      if (weights) weights[i] = p.weights[i];
      if (kept) kept[i] = p.kept[i] ? 1 : 0;
    }
  });
}

tpot_status tpot_ordinal(double mu, double s, double cum[6], double interval[5], int* prediction) {
  return guarded([&] {
    const auto out = tpot::ordinal_from_location_scale(mu, s);
    if (cum) std::copy(out.cum.begin(), out.cum.end(), cum);
    if (interval) std::copy(out.interval.begin(), out.interval.end(), interval);
    if (prediction) *prediction = out.prediction;
  });
}

}  // extern "C"
