#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "tpot/error.hpp"
#include "tpot/training.hpp"

using namespace tpot;
namespace fs = std::filesystem;

namespace {

struct Data {
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;

  std::vector<Example> examples(std::size_t first, std::size_t last) const {
    std::vector<Example> out;
    for (std::size_t i = first; i < last; ++i) out.push_back({xs[i], ys[i]});
    return out;
  }
};

// y = 3 + a.x + noise with x ~ N(0, 1/m).
Data linear_data(std::size_t n, std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> a(m);
  for (auto& v : a) v = normal(rng);
  Data d;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(m);
    double y = 3.0;
    for (std::size_t k = 0; k < m; ++k) {
      x[k] = normal(rng) / std::sqrt(static_cast<double>(m));
      y += a[k] * x[k];
    }
    d.xs.push_back(std::move(x));
    d.ys.push_back(y + 0.05 * normal(rng));
  }
  return d;
}

double train_mae(const RegressionHead& head, std::span<const Example> data) {
  double sum = 0.0;
  for (const auto& e : data) sum += std::abs(head_forward(head, e.x) - e.y);
  return sum / static_cast<double>(data.size());
}

TrainConfig small_config(std::uint64_t seed) {
  TrainConfig c;
  c.epochs = 40;
  c.hidden = 16;
  c.seed = seed;
  c.learning_rate = 1e-2;
  return c;
}

fs::path temp_path(const std::string& name) {
  auto dir = fs::temp_directory_path() / "tpot_training_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("training reduces error on linear data") {
  const auto data = linear_data(240, 8, 11);
  const auto train_set = data.examples(0, 200);
  const auto val_set = data.examples(200, 240);
  const auto config = small_config(5);
  const auto head = RegressionHead::initialized(8, config.hidden, 5);
  const double before = train_mae(head, train_set);
  const auto result = train(head, train_set, val_set, config);
  CHECK(train_mae(result.head, train_set) < before);
  CHECK(!result.history.empty());
  CHECK(result.best_validation_loss <= mean_loss(head, val_set, config.huber_delta));
}

TEST_CASE("training is deterministic for a seed") {
  const auto data = linear_data(120, 6, 3);
  const auto train_set = data.examples(0, 100);
  const auto val_set = data.examples(100, 120);
  const auto config = small_config(9);
  const auto head = RegressionHead::initialized(6, config.hidden, 9);
  const auto a = train(head, train_set, val_set, config);
  const auto b = train(head, train_set, val_set, config);
  REQUIRE(a.head.params().size() == b.head.params().size());
  for (std::size_t i = 0; i < a.head.params().size(); ++i) {
    CHECK(std::bit_cast<std::uint64_t>(a.head.params()[i]) ==
          std::bit_cast<std::uint64_t>(b.head.params()[i]));
  }

  auto other = config;
  other.seed = 10;
  const auto c = train(head, train_set, val_set, other);
  CHECK(!std::equal(a.head.params().begin(), a.head.params().end(), c.head.params().begin()));
}

TEST_CASE("constant targets converge to the constant") {
  auto data = linear_data(160, 8, 21);
  for (auto& y : data.ys) y = 3.0;
  const auto train_set = data.examples(0, 140);
  const auto val_set = data.examples(140, 160);
  TrainConfig config;
  config.seed = 2;
  const auto head = RegressionHead::initialized(8, config.hidden, 2);
  const auto result = train(head, train_set, val_set, config);
  double worst = 0.0;
  for (const auto& e : train_set) worst = std::max(worst, std::abs(head_forward(result.head, e.x) - 3.0));
  CHECK(worst < 0.05);
}

TEST_CASE("early stopping returns the best snapshot") {
  const auto data = linear_data(80, 4, 8);
  const auto train_set = data.examples(0, 60);
  const auto val_set = data.examples(60, 80);
  auto config = small_config(1);
  config.epochs = 200;
  config.patience = 3;
  const auto result = train(RegressionHead::initialized(4, config.hidden, 1), train_set, val_set, config);
  CHECK(result.history.size() <= config.epochs);
  CHECK(mean_loss(result.head, val_set, config.huber_delta) == result.best_validation_loss);
  if (result.best_epoch > 0) {
    CHECK(result.history[result.best_epoch - 1].validation_loss == result.best_validation_loss);
  }
}

TEST_CASE("ordinal training") {
  auto data = linear_data(120, 6, 4);
  for (auto& y : data.ys) y = std::clamp(std::round(y), 1.0, 5.0);
  const auto train_set = data.examples(0, 100);
  const auto val_set = data.examples(100, 120);
  const auto config = small_config(3);
  const auto head = OrdinalHead::initialized(6, config.hidden, 3);
  const auto result = train(head, train_set, val_set, config);
  CHECK(mean_loss(result.head, train_set, 1.0) < mean_loss(head, train_set, 1.0));

  auto bad = train_set;
  bad[0].y = 2.5;
  CHECK_THROWS_AS(train(head, bad, val_set, config), Error);
  bad[0].y = 6.0;
  CHECK_THROWS_AS(train(head, bad, val_set, config), Error);
}

TEST_CASE("training preconditions") {
  const auto data = linear_data(20, 3, 1);
  const auto set = data.examples(0, 20);
  const auto head = RegressionHead::initialized(3, 4, 1);
  auto config = small_config(1);
  CHECK_THROWS_AS(train(head, {}, set, config), Error);
  CHECK_THROWS_AS(train(head, set, {}, config), Error);
  config.learning_rate = 0.0;
  CHECK_THROWS_AS(train(head, set, set, config), Error);
}

TEST_CASE("non-finite loss aborts naming the epoch") {
  const auto data = linear_data(40, 3, 2);
  auto train_set = data.examples(0, 30);
  const auto val_set = data.examples(30, 40);
  train_set[7].y = std::numeric_limits<double>::quiet_NaN();
  try {
    train(RegressionHead::initialized(3, 4, 1), train_set, val_set, small_config(1));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Internal);
    CHECK(std::string(e.what()).find("epoch 0") != std::string::npos);
    CHECK(std::string(e.what()).find("batch 0") != std::string::npos);
  }
}

TEST_CASE("checkpoint round trip") {
  const auto head = RegressionHead::initialized(5, 7, 42);
  Checkpoint cp;
  cp.header.kind = HeadKind::Regression;
  cp.header.target = "A_Com";
  cp.header.fold = 3;
  cp.header.input_dim = 5;
  cp.header.hidden = 7;
  cp.header.backend = {"test-3", 16, 512};
  cp.header.seed = 99;
  cp.header.config.learning_rate = 0.003;
  cp.params.assign(head.params().begin(), head.params().end());
  const auto path = temp_path("roundtrip/nested/head.ckpt");
  save_checkpoint(path, cp);

  const auto back = load_checkpoint(path);
  CHECK(back.header.kind == HeadKind::Regression);
  CHECK(back.header.target == "A_Com");
  CHECK(back.header.fold == 3);
  CHECK(back.header.backend.name == "test-3");
  CHECK(back.header.backend.dimension == 16);
  CHECK(back.header.seed == 99);
  CHECK(back.header.config.learning_rate == 0.003);
  CHECK(back.params == cp.params);
  const auto restored = regression_head_from(back);
  std::vector<double> x{0.1, -0.2, 0.3, 0.0, 1.0};
  CHECK(head_forward(restored, x) == head_forward(head, x));
  CHECK_THROWS_AS(ordinal_head_from(back), Error);

  Checkpoint ord;
  ord.header.kind = HeadKind::Ordinal;
  ord.header.input_dim = 2;
  ord.header.hidden = 3;
  ord.params.assign(3 * 5 + 2, 0.25);
  save_checkpoint(temp_path("ordinal.ckpt"), ord);
  CHECK(ordinal_head_from(load_checkpoint(temp_path("ordinal.ckpt"))).params()[0] == 0.25);

  Checkpoint base;
  base.header.kind = HeadKind::Baseline;
  base.params = {3.25};
  save_checkpoint(temp_path("baseline.ckpt"), base);
  CHECK(load_checkpoint(temp_path("baseline.ckpt")).params == std::vector<double>{3.25});

  base.params = {1.0, 2.0};
  CHECK_THROWS_AS(save_checkpoint(temp_path("bad.ckpt"), base), Error);
}

TEST_CASE("damaged checkpoints are rejected") {
  try {
    load_checkpoint(temp_path("does-not-exist.ckpt"));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Missing);
  }

  Checkpoint cp;
  cp.header.kind = HeadKind::Regression;
  cp.header.input_dim = 2;
  cp.header.hidden = 2;
  cp.params.assign(2 * 4 + 1, 1.0);
  const auto path = temp_path("damaged.ckpt");
  save_checkpoint(path, cp);
  const auto size = fs::file_size(path);

  fs::resize_file(path, size - 3);
  CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("truncated"), Error);

  save_checkpoint(path, cp);
  { std::ofstream(path, std::ios::app | std::ios::binary) << 'x'; }
  CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("trailing"), Error);

  { std::ofstream(path, std::ios::binary | std::ios::trunc) << "not a checkpoint at all"; }
  CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("bad header"), Error);
}
