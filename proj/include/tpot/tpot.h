/* C interface of the tpot library. Every function returns a tpot_status;
 * on failure tpot_last_error() describes the problem (thread local, valid
 * until the next call on the same thread). Strings handed out by the library
 * are released with tpot_string_free. */
#ifndef TPOT_TPOT_H
#define TPOT_TPOT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TPOT_API __declspec(dllexport)
#else
#define TPOT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tpot_status {
  TPOT_OK = 0,
  TPOT_ERR_INTERNAL = 1,
  TPOT_ERR_INVALID = 2,  /* bad input or configuration */
  TPOT_ERR_MISSING = 3,  /* missing file or artifact */
  TPOT_ERR_BACKEND = 4,  /* encoder or transport failure */
  TPOT_ERR_CONTRACT = 5  /* inconsistent artifacts or arguments */
} tpot_status;

typedef struct tpot_catalog tpot_catalog;
typedef struct tpot_dataset tpot_dataset;
typedef struct tpot_backend tpot_backend;

TPOT_API const char* tpot_last_error(void);
TPOT_API const char* tpot_version(void);
TPOT_API void tpot_string_free(char* s);

/* ---- catalog and scoring ---- */

/* path == NULL selects the bundled BFI-2 catalog. */
TPOT_API tpot_status tpot_catalog_open(const char* path, tpot_catalog** out);
TPOT_API void tpot_catalog_free(tpot_catalog* catalog);

TPOT_API tpot_status tpot_item_score(int response, int reverse_keyed, double* out);
/* responses[i] answers item i + 1. */
TPOT_API tpot_status tpot_score_sheet(const tpot_catalog* catalog, const int responses[60], double items[60],
                                      double facets[15], double traits[5]);

/* ---- datasets ---- */

TPOT_API tpot_status tpot_dataset_load(const char* path, tpot_dataset** out);
TPOT_API size_t tpot_dataset_size(const tpot_dataset* dataset);
TPOT_API void tpot_dataset_free(tpot_dataset* dataset);

/* Planted-signal corpus (off_topic == 0) or filler-only essays, as JSON Lines. */
TPOT_API tpot_status tpot_dataset_write_synthetic(const tpot_catalog* catalog, const char* path, size_t authors,
                                                  uint64_t seed, int off_topic);

/* ---- backends ---- */

/* spec: "test:<seed>[:<dim>[:<max_tokens>]]" or "http:<url>". cache_dir may be NULL. */
TPOT_API tpot_status tpot_backend_open(const char* spec, const tpot_catalog* catalog, const char* cache_dir,
                                       tpot_backend** out);
TPOT_API void tpot_backend_free(tpot_backend* backend);
TPOT_API tpot_status tpot_backend_describe(const tpot_backend* backend, char** name, size_t* dim,
                                           size_t* max_tokens);
/* Calls that reached the underlying encoder (cache hits excluded). */
TPOT_API uint64_t tpot_backend_encoder_calls(const tpot_backend* backend);
/* out receives n * dim doubles. */
TPOT_API tpot_status tpot_backend_embed(tpot_backend* backend, const char* const* texts, size_t n, double* out,
                                        size_t out_len);

/* ---- commands ---- */

TPOT_API tpot_status tpot_corpus_stats(const tpot_dataset* dataset, tpot_backend* backend, char** table,
                                       char** json);

/* Embeds the 60 statements and their reverses and writes the archive. */
TPOT_API tpot_status tpot_embed_catalog(const tpot_catalog* catalog, tpot_backend* backend, const char* archive);

typedef struct tpot_run_options {
  const char* model;     /* baseline | m1 | m2 | m3; eval accepts a comma separated list */
  const char* level;     /* trait | facet | item */
  const char* strategy;  /* resample | rotate */
  double delta;
  double epsilon;
  size_t folds;
  uint64_t seed;
  size_t jobs;
  const char* archive;  /* item embedding archive; NULL embeds the catalog on the fly */
  const char* out_dir;
  int dump_relevance;
  /* head training */
  size_t epochs;
  size_t patience;
  size_t batch_size;
  size_t hidden;
  double learning_rate;
} tpot_run_options;

TPOT_API void tpot_run_options_init(tpot_run_options* options);

/* Cross-validated training; writes <out>/checkpoints/<model>-<level>/foldNN/<target>.ckpt
 * and <out>/report_<model>_<level>.json. */
TPOT_API tpot_status tpot_train(const tpot_catalog* catalog, const tpot_dataset* dataset, tpot_backend* backend,
                                const tpot_run_options* options);
/* Writes one report per model and <out>/comparison_<level>.txt; table gets the
 * comparison text. */
TPOT_API tpot_status tpot_eval(const tpot_catalog* catalog, const tpot_dataset* dataset, tpot_backend* backend,
                               const tpot_run_options* options, char** table);
/* Applies the heads of one fold to the dataset and writes JSON predictions to
 * output_path. checkpoint_dir == NULL uses <out>/checkpoints/<model>-<level>. */
TPOT_API tpot_status tpot_predict(const tpot_catalog* catalog, const tpot_dataset* dataset, tpot_backend* backend,
                                  const tpot_run_options* options, const char* checkpoint_dir, int fold,
                                  const char* output_path);

/* ---- numerics ---- */

TPOT_API tpot_status tpot_cosine(const double* a, const double* b, size_t n, double* out);
/* sentences: n_sentences x dim; forward and reverse: n_items x dim.
 * alphas, weights: n_sentences; kept: n_sentences (0/1). */
TPOT_API tpot_status tpot_relevance_profile(const double* sentences, size_t n_sentences, const double* forward,
                                            const double* reverse, size_t n_items, size_t dim, double delta,
                                            double* alphas, double* weights, int* kept);
TPOT_API tpot_status tpot_ordinal(double mu, double s, double cum[6], double interval[5], int* prediction);

#ifdef __cplusplus
}
#endif

#endif
