#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tpot/catalog.hpp"
#include "tpot/embedding.hpp"
#include "tpot/preselect.hpp"
#include "tpot/textprep.hpp"
#include "tpot/training.hpp"

namespace tpot {

enum class ModelKind { Baseline, M1, M2, M3 };
enum class FoldStrategy { Resample, Rotate };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view s);
FoldStrategy parse_fold_strategy(std::string_view s);

inline constexpr double kDefaultEpsilon = 0.5;
inline constexpr std::size_t kDefaultFolds = 10;

// ---- metrics ---------------------------------------------------------------

double mae(std::span<const double> predictions, std::span<const double> truths);
// Fraction with |prediction - truth| <= epsilon.
double accuracy_at(std::span<const double> predictions, std::span<const double> truths, double epsilon);
double mean_of(std::span<const double> values);
// Sample standard deviation (N - 1); 0 for fewer than two values.
double sample_std(std::span<const double> values);

// Constant predictor emitting the training mean.
double baseline_predict(std::span<const double> train_scores);

// ---- folds -----------------------------------------------------------------

struct FoldPlan {
  int fold_id = 0;  // 1-based
  std::uint64_t seed = 0;
  // Positions into the dataset, ascending.
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

// |test| = round(0.2 n); |validation| = max(1, floor(0.1 (n - |test|))).
// Resample draws an independent permutation per fold from seed + 1000 * fold;
// Rotate shuffles once with `seed` and slides the test window around it.
std::vector<FoldPlan> make_folds(std::size_t dataset_size, std::size_t n_folds, std::uint64_t seed,
                                 FoldStrategy strategy = FoldStrategy::Resample);

inline std::uint64_t fold_seed(std::uint64_t seed, int fold_id) {
  return seed + 1000ull * static_cast<std::uint64_t>(fold_id);
}
inline std::uint64_t head_seed(std::uint64_t seed, int fold_id, std::size_t target_index) {
  return fold_seed(seed, fold_id) + target_index;
}

// ---- aggregation -----------------------------------------------------------

struct PredictionSet {
  TargetLevel level = TargetLevel::Trait;
  std::vector<double> items;   // empty unless level == Item
  std::vector<double> facets;  // empty when level == Trait
  std::vector<double> traits;
};

// Values in catalog order at `level`; coarser levels are arithmetic means of
// their children.
PredictionSet aggregate_predictions(TargetLevel level, std::span<const double> values,
                                    const Catalog& catalog);
// Keyed by target id (acronym or "Inn"); a missing child is a contract error.
PredictionSet aggregate_predictions(TargetLevel level, const std::map<std::string, double>& values,
                                    const Catalog& catalog);

// ---- prepared corpus and features -----------------------------------------

struct AuthorData {
  std::string author_id;
  std::string text;
  std::optional<ScoreSheet> truth;
  std::vector<Embedding> sentences;
};

struct Corpus {
  BackendDescriptor backend;
  std::vector<AuthorData> authors;
};

// Splits and embeds every essay; with require_truth every record must carry
// responses.
Corpus prepare_corpus(const std::vector<EssayRecord>& records, const Catalog& catalog,
                      EmbeddingBackend& backend, bool require_truth);

// Head inputs for one (model, level): x(author, target). Model 1 shares one
// vector per author across targets.
class FeatureSet {
 public:
  FeatureSet() = default;

  static FeatureSet shared(std::vector<Embedding> per_author, std::size_t n_targets);
  static FeatureSet targeted(std::vector<std::vector<DocumentEmbedding>> per_author_target);

  std::span<const double> at(std::size_t author, std::size_t target) const;
  std::size_t sentences_used(std::size_t author, std::size_t target) const;
  std::size_t authors() const { return n_authors_; }
  std::size_t targets() const { return n_targets_; }
  std::size_t dimension() const;
  bool empty() const { return n_authors_ == 0; }
  // Number of (author, target) documents with no surviving sentence.
  std::size_t degenerate_count(std::span<const std::size_t> authors) const;

 private:
  std::size_t n_authors_ = 0;
  std::size_t n_targets_ = 0;
  bool shared_ = false;
  std::vector<Embedding> vectors_;
  std::vector<std::size_t> used_;
};

// Baseline needs no features; Model 1 embeds each whole essay; Models 2 and 3
// pool sentences per target. The optional dump receives one JSON line per
// (author, target) relevance profile.
FeatureSet build_features(ModelKind model, TargetLevel level, const Corpus& corpus,
                          const Catalog& catalog, EmbeddingBackend& backend,
                          const ItemEmbeddings& items, double delta, std::ostream* relevance_dump = nullptr);

// ---- experiments -----------------------------------------------------------

struct ExperimentConfig {
  ModelKind model = ModelKind::M2;
  TargetLevel level = TargetLevel::Trait;
  double delta = kDefaultDelta;
  double epsilon = kDefaultEpsilon;
  std::size_t folds = kDefaultFolds;
  std::uint64_t seed = 0;
  FoldStrategy strategy = FoldStrategy::Resample;
  TrainConfig train;
  std::size_t jobs = 1;
};

void validate(const ExperimentConfig& config);

struct TargetMetrics {
  std::string target;
  bool derived = false;
  std::vector<double> mae;  // one per fold
  std::vector<double> acc;
  double mae_mean = 0.0, mae_std = 0.0, acc_mean = 0.0, acc_std = 0.0;
};

struct FoldSummary {
  int fold_id = 0;
  std::size_t n_train = 0, n_validation = 0, n_test = 0;
  std::size_t degenerate_documents = 0;  // among test authors
};

struct MetricReport {
  ModelKind model = ModelKind::Baseline;
  TargetLevel level = TargetLevel::Trait;
  double epsilon = kDefaultEpsilon;
  double delta = kDefaultDelta;
  std::uint64_t seed = 0;
  std::vector<FoldSummary> folds;
  std::vector<TargetMetrics> targets;  // trait blocks: trait, its facets, their items

  const TargetMetrics& target(std::string_view id) const;
};

// When set, one checkpoint per (fold, target) is written under
// <checkpoint_dir>/fold<NN>/<target>.ckpt.
struct RunArtifacts {
  std::optional<std::filesystem::path> checkpoint_dir;
};

MetricReport run_experiment(const Corpus& corpus, const FeatureSet& features, const Catalog& catalog,
                            const ExperimentConfig& config, const RunArtifacts& artifacts = {});

std::string report_json(const MetricReport& report);
// Side-by-side MAE and ACC tables, best value per row wrapped in ** **.
std::string comparison_table(std::span<const MetricReport> reports);

// ---- prediction with stored heads -----------------------------------------

struct AuthorPrediction {
  std::string author_id;
  PredictionSet scores;
  std::map<std::string, std::size_t> sentences_used;  // per trained target
};

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int fold_id,
                                      std::string_view target);

std::vector<AuthorPrediction> predict_with_checkpoints(const Corpus& corpus, const FeatureSet& features,
                                                       const Catalog& catalog, TargetLevel level,
                                                       const std::filesystem::path& checkpoint_dir,
                                                       int fold_id);

std::string predictions_json(const std::vector<AuthorPrediction>& predictions, const Catalog& catalog);

}  // namespace tpot
