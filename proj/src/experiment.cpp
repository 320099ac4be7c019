#include "tpot/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "tpot/error.hpp"

namespace tpot {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Baseline: return "baseline";
    case ModelKind::M1: return "m1";
    case ModelKind::M2: return "m2";
    case ModelKind::M3: return "m3";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "baseline") return ModelKind::Baseline;
  if (s == "m1") return ModelKind::M1;
  if (s == "m2") return ModelKind::M2;
  if (s == "m3") return ModelKind::M3;
  fail(ErrorKind::Validation, "unknown model '" + std::string(s) + "' (expected baseline|m1|m2|m3)");
}

FoldStrategy parse_fold_strategy(std::string_view s) {
  if (s == "resample") return FoldStrategy::Resample;
  if (s == "rotate") return FoldStrategy::Rotate;
  fail(ErrorKind::Validation, "unknown fold strategy '" + std::string(s) + "' (expected resample|rotate)");
}

// ---- metrics ---------------------------------------------------------------

namespace {

void check_pair(std::span<const double> p, std::span<const double> t) {
  require(p.size() == t.size(), "prediction/truth length mismatch: " + std::to_string(p.size()) +
                                    " vs " + std::to_string(t.size()));
  require(!p.empty(), "metrics need at least one prediction");
}

}  // namespace

double mae(std::span<const double> predictions, std::span<const double> truths) {
  check_pair(predictions, truths);
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) sum += std::abs(predictions[i] - truths[i]);
  return sum / static_cast<double>(predictions.size());
}

double accuracy_at(std::span<const double> predictions, std::span<const double> truths, double epsilon) {
  check_pair(predictions, truths);
  require(epsilon > 0.0, "epsilon must be positive");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (std::abs(predictions[i] - truths[i]) <= epsilon) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

double mean_of(std::span<const double> values) {
  require(!values.empty(), "mean of an empty sample");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double baseline_predict(std::span<const double> train_scores) {
  require(!train_scores.empty(), "baseline needs training scores");
  return mean_of(train_scores);
}

// ---- folds -----------------------------------------------------------------

std::vector<FoldPlan> make_folds(std::size_t n, std::size_t n_folds, std::uint64_t seed,
                                 FoldStrategy strategy) {
  if (n < 10) {
    fail(ErrorKind::Validation, "dataset too small for cross validation: " + std::to_string(n) +
                                    " authors, need at least 10");
  }
  require(n_folds >= 1, "need at least one fold");
  const std::size_t n_test = (2 * n + 5) / 10;  // round(0.2 n)
  const std::size_t n_rest = n - n_test;
  const std::size_t n_val = std::max<std::size_t>(1, n_rest / 10);

  auto shuffled = [n](std::uint64_t s) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(s);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng() % i]);
    return perm;
  };
  const auto rotation = shuffled(seed);

  std::vector<FoldPlan> plans;
  for (std::size_t k = 0; k < n_folds; ++k) {
    FoldPlan plan;
    plan.fold_id = static_cast<int>(k) + 1;
    plan.seed = fold_seed(seed, plan.fold_id);
    std::vector<std::size_t> perm;
    if (strategy == FoldStrategy::Resample) {
      perm = shuffled(plan.seed);
    } else {
      // Test window first, then the remaining authors in rotation order.
      const std::size_t start = k * n / n_folds;
      perm.reserve(n);
      for (std::size_t i = 0; i < n; ++i) perm.push_back(rotation[(start + i) % n]);
    }
    plan.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
    plan.validation.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test),
                           perm.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
    plan.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), perm.end());
    std::sort(plan.test.begin(), plan.test.end());
    std::sort(plan.validation.begin(), plan.validation.end());
    std::sort(plan.train.begin(), plan.train.end());
    plans.push_back(std::move(plan));
  }
  return plans;
}

// ---- aggregation -----------------------------------------------------------

PredictionSet aggregate_predictions(TargetLevel level, std::span<const double> values,
                                    const Catalog& catalog) {
  PredictionSet out;
  out.level = level;
  switch (level) {
    case TargetLevel::Item:
      require(values.size() == catalog.items().size(), "item predictions must cover all 60 items");
      out.items.assign(values.begin(), values.end());
      for (std::size_t f = 0; f < catalog.facets().size(); ++f) {
        double sum = 0.0;
        for (auto i : catalog.facet_items(f)) sum += out.items[i];
        out.facets.push_back(sum / static_cast<double>(catalog.facet_items(f).size()));
      }
      break;
    case TargetLevel::Facet:
      require(values.size() == catalog.facets().size(), "facet predictions must cover all 15 facets");
      out.facets.assign(values.begin(), values.end());
      break;
    case TargetLevel::Trait:
      require(values.size() == catalog.traits().size(), "trait predictions must cover all 5 traits");
      out.traits.assign(values.begin(), values.end());
      return out;
  }
  for (std::size_t t = 0; t < catalog.traits().size(); ++t) {
    double sum = 0.0;
    for (auto f : catalog.trait_facets(t)) sum += out.facets[f];
    out.traits.push_back(sum / static_cast<double>(catalog.trait_facets(t).size()));
  }
  return out;
}

PredictionSet aggregate_predictions(TargetLevel level, const std::map<std::string, double>& values,
                                    const Catalog& catalog) {
  std::vector<double> ordered;
  for (const auto& id : target_ids(catalog, level)) {
    auto it = values.find(id);
    require(it != values.end(), "missing prediction for " + id);
    ordered.push_back(it->second);
  }
  return aggregate_predictions(level, ordered, catalog);
}

// ---- corpus and features ---------------------------------------------------

Corpus prepare_corpus(const std::vector<EssayRecord>& records, const Catalog& catalog,
                      EmbeddingBackend& backend, bool require_truth) {
  require(!records.empty(), "no records");
  Corpus corpus;
  corpus.backend = backend.descriptor();
  std::vector<std::string> pending;
  std::vector<std::size_t> owner;
  auto flush = [&] {
    if (pending.empty()) return;
    auto vectors = embed_batch(pending, backend);
    for (std::size_t k = 0; k < vectors.size(); ++k) {
      corpus.authors[owner[k]].sentences.push_back(std::move(vectors[k]));
    }
    pending.clear();
    owner.clear();
  };
  for (const auto& record : records) {
    AuthorData author;
    author.author_id = record.author_id;
    author.text = record.text;
    if (record.responses) {
      author.truth = score_sheet(*record.responses, catalog);
    } else if (require_truth) {
      fail(ErrorKind::Validation, "author " + record.author_id + " has no survey responses");
    }
    corpus.authors.push_back(std::move(author));
    for (auto& s : split_sentences(record.text)) {
      pending.push_back(std::move(s));
      owner.push_back(corpus.authors.size() - 1);
    }
    if (pending.size() >= 512) flush();
  }
  flush();
  return corpus;
}

FeatureSet FeatureSet::shared(std::vector<Embedding> per_author, std::size_t n_targets) {
  FeatureSet fs;
  fs.n_authors_ = per_author.size();
  fs.n_targets_ = n_targets;
  fs.shared_ = true;
  fs.vectors_ = std::move(per_author);
  fs.used_.assign(fs.n_authors_, 1);
  return fs;
}

FeatureSet FeatureSet::targeted(std::vector<std::vector<DocumentEmbedding>> docs) {
  FeatureSet fs;
  fs.n_authors_ = docs.size();
  fs.n_targets_ = docs.empty() ? 0 : docs.front().size();
  for (auto& row : docs) {
    require(row.size() == fs.n_targets_, "feature rows differ in target count");
    for (auto& d : row) {
      fs.vectors_.push_back(std::move(d.vector));
      fs.used_.push_back(d.n_sentences_used);
    }
  }
  return fs;
}

std::span<const double> FeatureSet::at(std::size_t author, std::size_t target) const {
  require(author < n_authors_ && target < n_targets_, "feature index out of range");
  return shared_ ? vectors_[author] : vectors_[author * n_targets_ + target];
}

std::size_t FeatureSet::sentences_used(std::size_t author, std::size_t target) const {
  require(author < n_authors_ && target < n_targets_, "feature index out of range");
  return shared_ ? used_[author] : used_[author * n_targets_ + target];
}

std::size_t FeatureSet::dimension() const { return vectors_.empty() ? 0 : vectors_.front().size(); }

std::size_t FeatureSet::degenerate_count(std::span<const std::size_t> authors) const {
  std::size_t count = 0;
  for (auto a : authors) {
    for (std::size_t t = 0; t < n_targets_; ++t) {
      if (sentences_used(a, t) == 0) ++count;
    }
  }
  return count;
}

FeatureSet build_features(ModelKind model, TargetLevel level, const Corpus& corpus,
                          const Catalog& catalog, EmbeddingBackend& backend,
                          const ItemEmbeddings& items, double delta, std::ostream* relevance_dump) {
  const auto n_targets = target_ids(catalog, level).size();
  switch (model) {
    case ModelKind::Baseline:
      return {};
    case ModelKind::M1: {
      std::vector<Embedding> docs;
      constexpr std::size_t kChunk = 64;
      for (std::size_t first = 0; first < corpus.authors.size(); first += kChunk) {
        std::vector<std::string> texts;
        for (std::size_t a = first; a < std::min(corpus.authors.size(), first + kChunk); ++a) {
          texts.push_back(corpus.authors[a].text);
        }
        for (auto& v : embed_batch(texts, backend)) docs.push_back(std::move(v));
      }
      return FeatureSet::shared(std::move(docs), n_targets);
    }
    case ModelKind::M2:
    case ModelKind::M3:
      break;
  }
  if (items.backend.dimension != corpus.backend.dimension) {
    fail(ErrorKind::Contract, "item embeddings have dimension " + std::to_string(items.backend.dimension) +
                                  ", corpus embeddings " + std::to_string(corpus.backend.dimension));
  }
  const auto targets = build_targets(catalog, items, level);
  std::vector<std::vector<DocumentEmbedding>> docs(corpus.authors.size());
  for (std::size_t a = 0; a < corpus.authors.size(); ++a) {
    const auto& author = corpus.authors[a];
    for (const auto& target : targets) {
      RelevanceProfile profile;
      docs[a].push_back(tpot_document_embedding(author.sentences, target, delta, &profile));
      if (relevance_dump) {
        nlohmann::ordered_json line;
        line["author_id"] = author.author_id;
        line["target"] = target.target_id;
        line["alphas"] = profile.alphas;
        line["kept"] = profile.kept;
        line["n_used"] = docs[a].back().n_sentences_used;
        *relevance_dump << line.dump() << '\n';
      }
    }
  }
  return FeatureSet::targeted(std::move(docs));
}

// ---- experiments -----------------------------------------------------------

void validate(const ExperimentConfig& c) {
  if (!(c.delta >= 0.0 && c.delta < 1.0)) fail(ErrorKind::Validation, "delta must lie in [0, 1)");
  if (!(c.epsilon > 0.0)) fail(ErrorKind::Validation, "epsilon must be positive");
  if (c.folds < 1) fail(ErrorKind::Validation, "need at least one fold");
  if (c.jobs < 1) fail(ErrorKind::Validation, "jobs must be at least 1");
  if (c.model == ModelKind::M3 && c.level != TargetLevel::Item) {
    fail(ErrorKind::Validation, "model m3 predicts items; use --level item");
  }
  validate(c.train);
}

const TargetMetrics& MetricReport::target(std::string_view id) const {
  for (const auto& t : targets) {
    if (t.target == id) return t;
  }
  fail(ErrorKind::Contract, "report has no target " + std::string(id));
}

namespace {

double truth_at(const ScoreSheet& s, TargetLevel level, std::size_t index) {
  switch (level) {
    case TargetLevel::Item: return s.item_scores[index];
    case TargetLevel::Facet: return s.facet_scores[index];
    case TargetLevel::Trait: return s.trait_scores[index];
  }
  return 0.0;
}

double prediction_at(const PredictionSet& p, TargetLevel level, std::size_t index) {
  switch (level) {
    case TargetLevel::Item: return p.items[index];
    case TargetLevel::Facet: return p.facets[index];
    case TargetLevel::Trait: return p.traits[index];
  }
  return 0.0;
}

struct ReportRow {
  std::string id;
  TargetLevel level;
  std::size_t index;
  bool derived;
};

std::vector<ReportRow> report_rows(const Catalog& catalog, TargetLevel trained) {
  const auto item_ids = target_ids(catalog, TargetLevel::Item);
  std::vector<ReportRow> rows;
  for (std::size_t t = 0; t < catalog.traits().size(); ++t) {
    rows.push_back({catalog.traits()[t].acronym, TargetLevel::Trait, t, trained != TargetLevel::Trait});
    if (trained == TargetLevel::Trait) continue;
    for (auto f : catalog.trait_facets(t)) {
      rows.push_back({catalog.facets()[f].acronym, TargetLevel::Facet, f, trained == TargetLevel::Item});
      if (trained != TargetLevel::Item) continue;
      for (auto i : catalog.facet_items(f)) rows.push_back({item_ids[i], TargetLevel::Item, i, false});
    }
  }
  return rows;
}

struct TaskResult {
  std::vector<double> predictions;  // in fold.test order
  std::optional<Checkpoint> checkpoint;
};

TaskResult run_task(const Corpus& corpus, const FeatureSet& features, const ExperimentConfig& config,
                    const FoldPlan& fold, std::size_t target, const std::string& target_id,
                    bool keep_checkpoint) {
  auto truth = [&](std::size_t a) { return truth_at(*corpus.authors[a].truth, config.level, target); };
  TaskResult result;
  CheckpointHeader header;
  header.target = target_id;
  header.fold = fold.fold_id;
  header.backend = corpus.backend;
  header.seed = head_seed(config.seed, fold.fold_id, target);
  header.config = config.train;
  header.config.seed = header.seed;

  if (config.model == ModelKind::Baseline) {
    std::vector<double> scores;
    for (auto a : fold.train) scores.push_back(truth(a));
    for (auto a : fold.validation) scores.push_back(truth(a));
    const double mean = baseline_predict(scores);
    result.predictions.assign(fold.test.size(), mean);
    header.kind = HeadKind::Baseline;
    if (keep_checkpoint) result.checkpoint = Checkpoint{header, {mean}};
    return result;
  }

  auto examples = [&](const std::vector<std::size_t>& authors) {
    std::vector<Example> out;
    out.reserve(authors.size());
    for (auto a : authors) out.push_back({features.at(a, target), truth(a)});
    return out;
  };
  const auto train_set = examples(fold.train);
  const auto val_set = examples(fold.validation);
  std::vector<double> train_y;
  for (const auto& e : train_set) train_y.push_back(e.y);

  const auto dim = features.dimension();
  header.input_dim = dim;
  header.hidden = config.train.hidden;
  const std::uint64_t init_seed = header.seed ^ 0x9e3779b97f4a7c15ull;

  if (config.model == ModelKind::M3) {
    auto head = OrdinalHead::initialized(dim, config.train.hidden, init_seed);
    head.output_bias() = mean_of(train_y);
    auto trained = train(std::move(head), train_set, val_set, header.config);
    for (auto a : fold.test) {
      result.predictions.push_back(ordinal_forward(trained.head, features.at(a, target)).prediction);
    }
    header.kind = HeadKind::Ordinal;
    if (keep_checkpoint) {
      auto p = trained.head.params();
      result.checkpoint = Checkpoint{header, {p.begin(), p.end()}};
    }
  } else {
    auto head = RegressionHead::initialized(dim, config.train.hidden, init_seed);
    head.output_bias() = mean_of(train_y);
    auto trained = train(std::move(head), train_set, val_set, header.config);
    for (auto a : fold.test) {
      result.predictions.push_back(std::clamp(head_forward(trained.head, features.at(a, target)), 1.0, 5.0));
    }
    header.kind = HeadKind::Regression;
    if (keep_checkpoint) {
      auto p = trained.head.params();
      result.checkpoint = Checkpoint{header, {p.begin(), p.end()}};
    }
  }
  return result;
}

// Runs fn(i) for i in [0, n) on `jobs` threads; the first failure is rethrown.
template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t j = 0; j < std::min(jobs, n); ++j) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int fold_id,
                                      std::string_view target) {
  char fold[16];
  std::snprintf(fold, sizeof fold, "fold%02d", fold_id);
  return dir / fold / (std::string(target) + ".ckpt");
}

MetricReport run_experiment(const Corpus& corpus, const FeatureSet& features, const Catalog& catalog,
                            const ExperimentConfig& config, const RunArtifacts& artifacts) {
  validate(config);
  const auto n = corpus.authors.size();
  for (const auto& a : corpus.authors) {
    if (!a.truth) fail(ErrorKind::Validation, "author " + a.author_id + " has no survey responses");
  }
  const auto ids = target_ids(catalog, config.level);
  const auto n_targets = ids.size();
  if (config.model != ModelKind::Baseline) {
    require(features.authors() == n && features.targets() == n_targets,
            "features do not match the corpus and target level");
  }

  const auto folds = make_folds(n, config.folds, config.seed, config.strategy);
  const bool keep = artifacts.checkpoint_dir.has_value();
  std::vector<TaskResult> results(folds.size() * n_targets);
  parallel_for(results.size(), config.jobs, [&](std::size_t task) {
    const auto& fold = folds[task / n_targets];
    const auto target = task % n_targets;
    try {
      results[task] = run_task(corpus, features, config, fold, target, ids[target], keep);
    } catch (const Error& e) {
      throw Error(e.kind(), "fold " + std::to_string(fold.fold_id) + ", target " + ids[target] + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorKind::Internal, "fold " + std::to_string(fold.fold_id) + ", target " + ids[target] +
                                           ": " + e.what());
    }
  });

  if (keep) {
    for (std::size_t task = 0; task < results.size(); ++task) {
      const auto& cp = *results[task].checkpoint;
      save_checkpoint(checkpoint_path(*artifacts.checkpoint_dir, cp.header.fold, cp.header.target), cp);
    }
  }

  MetricReport report;
  report.model = config.model;
  report.level = config.level;
  report.epsilon = config.epsilon;
  report.delta = config.delta;
  report.seed = config.seed;
  const auto rows = report_rows(catalog, config.level);
  for (const auto& row : rows) report.targets.push_back({row.id, row.derived, {}, {}});

  for (std::size_t k = 0; k < folds.size(); ++k) {
    const auto& fold = folds[k];
    FoldSummary summary{fold.fold_id, fold.train.size(), fold.validation.size(), fold.test.size(), 0};
    if (!features.empty()) summary.degenerate_documents = features.degenerate_count(fold.test);
    report.folds.push_back(summary);

    std::vector<PredictionSet> predicted;
    for (std::size_t j = 0; j < fold.test.size(); ++j) {
      std::vector<double> values(n_targets);
      for (std::size_t t = 0; t < n_targets; ++t) values[t] = results[k * n_targets + t].predictions[j];
      predicted.push_back(aggregate_predictions(config.level, values, catalog));
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::vector<double> p, y;
      for (std::size_t j = 0; j < fold.test.size(); ++j) {
        p.push_back(prediction_at(predicted[j], rows[r].level, rows[r].index));
        y.push_back(truth_at(*corpus.authors[fold.test[j]].truth, rows[r].level, rows[r].index));
      }
      report.targets[r].mae.push_back(mae(p, y));
      report.targets[r].acc.push_back(accuracy_at(p, y, config.epsilon));
    }
  }
  for (auto& t : report.targets) {
    t.mae_mean = mean_of(t.mae);
    t.mae_std = sample_std(t.mae);
    t.acc_mean = mean_of(t.acc);
    t.acc_std = sample_std(t.acc);
  }
  return report;
}

std::string report_json(const MetricReport& report) {
  nlohmann::ordered_json doc;
  doc["model"] = to_string(report.model);
  doc["level"] = to_string(report.level);
  doc["epsilon"] = report.epsilon;
  doc["delta"] = report.delta;
  doc["seed"] = report.seed;
  doc["folds"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < report.folds.size(); ++k) {
    const auto& f = report.folds[k];
    nlohmann::ordered_json fold;
    fold["fold_id"] = f.fold_id;
    fold["n_train"] = f.n_train;
    fold["n_validation"] = f.n_validation;
    fold["n_test"] = f.n_test;
    fold["degenerate_documents"] = f.degenerate_documents;
    nlohmann::ordered_json m = nlohmann::ordered_json::object();
    nlohmann::ordered_json a = nlohmann::ordered_json::object();
    for (const auto& t : report.targets) {
      m[t.target] = t.mae[k];
      a[t.target] = t.acc[k];
    }
    fold["mae"] = std::move(m);
    fold["acc"] = std::move(a);
    doc["folds"].push_back(std::move(fold));
  }
  nlohmann::ordered_json targets = nlohmann::ordered_json::object();
  for (const auto& t : report.targets) {
    targets[t.target] = {{"mae_mean", t.mae_mean}, {"mae_std", t.mae_std},
                         {"acc_mean", t.acc_mean}, {"acc_std", t.acc_std},
                         {"derived", t.derived}};
  }
  doc["targets"] = std::move(targets);
  return doc.dump(2) + "\n";
}

std::string comparison_table(std::span<const MetricReport> reports) {
  require(!reports.empty(), "no reports to tabulate");
  for (const auto& r : reports) {
    require(r.level == reports.front().level && r.targets.size() == reports.front().targets.size(),
            "reports in one table must share a target level");
  }
  auto fixed3 = [](double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << v;
    return os.str();
  };
  std::string level(to_string(reports.front().level));
  level[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(level[0])));

  std::ostringstream os;
  auto section = [&](const char* title, bool lower_is_better) {
    os << level << " Prediction: " << title << (lower_is_better ? " (lower is better)" : " (higher is better)");
    if (!lower_is_better) os << " at epsilon=" << reports.front().epsilon;
    os << '\n';
    os << std::left << std::setw(10) << "target";
    for (const auto& r : reports) os << std::left << std::setw(22) << to_string(r.model);
    os << '\n';
    for (std::size_t row = 0; row < reports.front().targets.size(); ++row) {
      std::vector<std::string> means;
      for (const auto& r : reports) {
        const auto& t = r.targets[row];
        means.push_back(fixed3(lower_is_better ? t.mae_mean : t.acc_mean));
      }
      const auto best = lower_is_better ? *std::min_element(means.begin(), means.end())
                                        : *std::max_element(means.begin(), means.end());
      os << std::left << std::setw(10) << reports.front().targets[row].target;
      for (std::size_t m = 0; m < reports.size(); ++m) {
        const auto& t = reports[m].targets[row];
        const bool bold = reports.size() > 1 && means[m] == best;
        std::string cell = (bold ? "**" + means[m] + "**" : means[m]) + " +/- " +
                           fixed3(lower_is_better ? t.mae_std : t.acc_std);
        os << std::left << std::setw(22) << cell;
      }
      os << '\n';
    }
  };
  section("MAE", true);
  os << '\n';
  section("ACC", false);
  return os.str();
}

// ---- prediction ------------------------------------------------------------

std::vector<AuthorPrediction> predict_with_checkpoints(const Corpus& corpus, const FeatureSet& features,
                                                       const Catalog& catalog, TargetLevel level,
                                                       const std::filesystem::path& checkpoint_dir,
                                                       int fold_id) {
  const auto ids = target_ids(catalog, level);
  std::vector<Checkpoint> heads;
  for (const auto& id : ids) {
    const auto path = checkpoint_path(checkpoint_dir, fold_id, id);
    if (!std::filesystem::exists(path)) {
      fail(ErrorKind::Missing, "missing checkpoint for fold " + std::to_string(fold_id) + ", target " + id +
                                   " (" + path.string() + ")");
    }
    heads.push_back(load_checkpoint(path));
    const auto& h = heads.back().header;
    if (h.kind != HeadKind::Baseline) {
      require(!features.empty(), "checkpoint " + path.string() + " needs text features");
      require(h.input_dim == features.dimension(),
              "checkpoint " + path.string() + " expects input dimension " + std::to_string(h.input_dim) +
                  ", features have " + std::to_string(features.dimension()));
      require(h.backend == corpus.backend,
              "checkpoint " + path.string() + " was trained with backend '" + h.backend.name +
                  "', prediction uses '" + corpus.backend.name + "'");
    }
  }

  std::vector<RegressionHead> regression(ids.size());
  std::vector<OrdinalHead> ordinal(ids.size());
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (heads[t].header.kind == HeadKind::Regression) regression[t] = regression_head_from(heads[t]);
    if (heads[t].header.kind == HeadKind::Ordinal) ordinal[t] = ordinal_head_from(heads[t]);
  }

  std::vector<AuthorPrediction> out;
  for (std::size_t a = 0; a < corpus.authors.size(); ++a) {
    AuthorPrediction pred;
    pred.author_id = corpus.authors[a].author_id;
    std::vector<double> values(ids.size());
    for (std::size_t t = 0; t < ids.size(); ++t) {
      switch (heads[t].header.kind) {
        case HeadKind::Baseline:
          values[t] = heads[t].params.front();
          break;
        case HeadKind::Regression:
          values[t] = std::clamp(head_forward(regression[t], features.at(a, t)), 1.0, 5.0);
          break;
        case HeadKind::Ordinal:
          values[t] = ordinal_forward(ordinal[t], features.at(a, t)).prediction;
          break;
      }
      if (!features.empty()) pred.sentences_used[ids[t]] = features.sentences_used(a, t);
    }
    pred.scores = aggregate_predictions(level, values, catalog);
    out.push_back(std::move(pred));
  }
  return out;
}

std::string predictions_json(const std::vector<AuthorPrediction>& predictions, const Catalog& catalog) {
  const auto item_ids = target_ids(catalog, TargetLevel::Item);
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& p : predictions) {
    nlohmann::ordered_json entry;
    entry["author_id"] = p.author_id;
    entry["level"] = to_string(p.scores.level);
    if (!p.scores.items.empty()) {
      nlohmann::ordered_json items = nlohmann::ordered_json::object();
      for (std::size_t i = 0; i < p.scores.items.size(); ++i) items[item_ids[i]] = p.scores.items[i];
      entry["items"] = std::move(items);
    }
    if (!p.scores.facets.empty()) {
      nlohmann::ordered_json facets = nlohmann::ordered_json::object();
      for (std::size_t f = 0; f < p.scores.facets.size(); ++f) facets[catalog.facets()[f].acronym] = p.scores.facets[f];
      entry["facets"] = std::move(facets);
    }
    nlohmann::ordered_json traits = nlohmann::ordered_json::object();
    for (std::size_t t = 0; t < p.scores.traits.size(); ++t) traits[catalog.traits()[t].acronym] = p.scores.traits[t];
    entry["traits"] = std::move(traits);
    nlohmann::ordered_json used = nlohmann::ordered_json::object();
    for (const auto& [id, n] : p.sentences_used) used[id] = n;
    entry["sentences_used"] = std::move(used);
    doc.push_back(std::move(entry));
  }
  return doc.dump(2) + "\n";
}

}  // namespace tpot
