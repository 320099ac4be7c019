#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tpot/embedding.hpp"
#include "tpot/models.hpp"

namespace tpot {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  std::size_t patience = 10;
  std::size_t hidden = kDefaultHidden;
  double huber_delta = 1.0;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& config);

struct Example {
  std::span<const double> x;
  double y = 0.0;
};

struct EpochRecord {
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

template <class Head>
struct TrainResult {
  Head head;  // snapshot with the best validation loss
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_validation_loss = 0.0;
};

// Mini-batch Adam with a seeded shuffle per epoch and early stopping on the
// validation loss. Targets of the ordinal head must be integers in 1..5.
TrainResult<RegressionHead> train(RegressionHead head, std::span<const Example> train_set,
                                  std::span<const Example> validation_set, const TrainConfig& config);
TrainResult<OrdinalHead> train(OrdinalHead head, std::span<const Example> train_set,
                               std::span<const Example> validation_set, const TrainConfig& config);

double mean_loss(const RegressionHead& head, std::span<const Example> data, double huber_delta);
double mean_loss(const OrdinalHead& head, std::span<const Example> data, double huber_delta);

// ---- checkpoints ---------------------------------------------------------
//
// "TPOTHEAD1\n", u32 header length, JSON header, then the flat parameter block
// as little-endian f64. The header records the head kind and shape, the
// target and fold, the backend descriptor, the seed and the training config;
// loading checks the block length against the recorded shape.

enum class HeadKind { Baseline, Regression, Ordinal };

struct CheckpointHeader {
  HeadKind kind = HeadKind::Regression;
  std::string target;
  int fold = 0;
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  BackendDescriptor backend;
  std::uint64_t seed = 0;
  TrainConfig config;
};

struct Checkpoint {
  CheckpointHeader header;
  std::vector<double> params;  // for a baseline: the single training mean
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

RegressionHead regression_head_from(const Checkpoint& checkpoint);
OrdinalHead ordinal_head_from(const Checkpoint& checkpoint);

}  // namespace tpot
