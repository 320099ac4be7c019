#include "tpot/training.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "tpot/error.hpp"

namespace tpot {

void validate(const TrainConfig& c) {
  require(c.learning_rate > 0.0, "learning rate must be positive");
  require(c.beta1 >= 0.0 && c.beta1 < 1.0 && c.beta2 >= 0.0 && c.beta2 < 1.0,
          "Adam betas must lie in [0, 1)");
  require(c.adam_epsilon > 0.0, "Adam epsilon must be positive");
  require(c.epochs > 0 && c.batch_size > 0 && c.patience > 0 && c.hidden > 0,
          "epochs, batch size, patience and hidden width must be positive");
  require(c.huber_delta > 0.0, "Huber transition point must be positive");
}

namespace {

double example_loss(const RegressionHead& head, const Example& e, double delta) {
  return huber_loss(head_forward(head, e.x), e.y, delta);
}

double example_loss(const OrdinalHead& head, const Example& e, double delta) {
  return ordinal_loss(ordinal_forward(head, e.x), static_cast<int>(std::lround(e.y)), delta);
}

double example_gradient(const RegressionHead& head, const Example& e, double delta,
                        RegressionHead& grad) {
  return accumulate_gradient(head, e.x, e.y, delta, grad);
}

double example_gradient(const OrdinalHead& head, const Example& e, double delta, OrdinalHead& grad) {
  return accumulate_gradient(head, e.x, static_cast<int>(std::lround(e.y)), delta, grad);
}

class Adam {
 public:
  Adam(std::size_t n, const TrainConfig& c) : m_(n, 0.0), v_(n, 0.0), c_(c) {}

  void step(std::span<double> params, std::span<const double> grad) {
    ++t_;
    const double bc1 = 1.0 - std::pow(c_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(c_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = c_.beta1 * m_[i] + (1.0 - c_.beta1) * grad[i];
      v_[i] = c_.beta2 * v_[i] + (1.0 - c_.beta2) * grad[i] * grad[i];
      const double mhat = m_[i] / bc1;
      const double vhat = v_[i] / bc2;
      params[i] -= c_.learning_rate * mhat / (std::sqrt(vhat) + c_.adam_epsilon);
    }
  }

 private:
  std::vector<double> m_, v_;
  TrainConfig c_;
  std::uint64_t t_ = 0;
};

template <class Head>
double mean_loss_impl(const Head& head, std::span<const Example> data, double delta) {
  require(!data.empty(), "mean loss over an empty set");
  double sum = 0.0;
  for (const auto& e : data) sum += example_loss(head, e, delta);
  return sum / static_cast<double>(data.size());
}

template <class Head>
TrainResult<Head> train_impl(Head head, std::span<const Example> train_set,
                             std::span<const Example> validation_set, const TrainConfig& config) {
  validate(config);
  require(!train_set.empty(), "training set is empty");
  require(!validation_set.empty(), "validation set is empty");

  std::mt19937_64 rng(config.seed);
  Adam adam(head.params().size(), config);
  Head grad(head.input_dim(), head.hidden());

  TrainResult<Head> result;
  result.head = head;
  result.best_validation_loss = mean_loss_impl(head, validation_set, config.huber_delta);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t stale = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates with raw engine output keeps the order platform independent.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng() % i]);
    }
    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t first = 0; first < order.size(); first += config.batch_size, ++batch_index) {
      const auto last = std::min(order.size(), first + config.batch_size);
      std::fill(grad.params().begin(), grad.params().end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t k = first; k < last; ++k) {
        batch_loss += example_gradient(head, train_set[order[k]], config.huber_delta, grad);
      }
      if (!std::isfinite(batch_loss)) {
        fail(ErrorKind::Internal, "training diverged: non-finite loss at epoch " +
                                      std::to_string(epoch) + ", batch " + std::to_string(batch_index));
      }
      const double scale = 1.0 / static_cast<double>(last - first);
      for (auto& g : grad.params()) g *= scale;
      adam.step(head.params(), grad.params());
      epoch_loss += batch_loss;
    }

    EpochRecord record;
    record.train_loss = epoch_loss / static_cast<double>(order.size());
    record.validation_loss = mean_loss_impl(head, validation_set, config.huber_delta);
    if (!std::isfinite(record.validation_loss)) {
      fail(ErrorKind::Internal, "training diverged: non-finite validation loss at epoch " +
                                    std::to_string(epoch));
    }
    result.history.push_back(record);
    if (record.validation_loss < result.best_validation_loss) {
      result.best_validation_loss = record.validation_loss;
      result.best_epoch = epoch + 1;
      result.head = head;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  return result;
}

constexpr std::string_view kCheckpointMagic = "TPOTHEAD1\n";
static_assert(std::endian::native == std::endian::little);

std::string_view kind_name(HeadKind k) {
  switch (k) {
    case HeadKind::Baseline: return "baseline";
    case HeadKind::Regression: return "regression";
    case HeadKind::Ordinal: return "ordinal";
  }
  return "?";
}

HeadKind parse_kind(const std::string& s) {
  if (s == "baseline") return HeadKind::Baseline;
  if (s == "regression") return HeadKind::Regression;
  if (s == "ordinal") return HeadKind::Ordinal;
  fail(ErrorKind::Validation, "checkpoint: unknown head kind '" + s + "'");
}

std::size_t expected_params(const CheckpointHeader& h) {
  switch (h.kind) {
    case HeadKind::Baseline: return 1;
    case HeadKind::Regression: return h.hidden * (h.input_dim + 2) + 1;
    case HeadKind::Ordinal: return h.hidden * (h.input_dim + 3) + 2;
  }
  return 0;
}

}  // namespace

TrainResult<RegressionHead> train(RegressionHead head, std::span<const Example> train_set,
                                  std::span<const Example> validation_set, const TrainConfig& config) {
  return train_impl(std::move(head), train_set, validation_set, config);
}

TrainResult<OrdinalHead> train(OrdinalHead head, std::span<const Example> train_set,
                               std::span<const Example> validation_set, const TrainConfig& config) {
  for (const auto& e : train_set) {
    require(e.y == std::round(e.y) && e.y >= 1.0 && e.y <= 5.0,
            "ordinal training targets must be integers in 1..5");
  }
  return train_impl(std::move(head), train_set, validation_set, config);
}

double mean_loss(const RegressionHead& head, std::span<const Example> data, double huber_delta) {
  return mean_loss_impl(head, data, huber_delta);
}

double mean_loss(const OrdinalHead& head, std::span<const Example> data, double huber_delta) {
  return mean_loss_impl(head, data, huber_delta);
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const auto& h = checkpoint.header;
  require(checkpoint.params.size() == expected_params(h), "checkpoint: parameter count does not match shape");
  nlohmann::ordered_json doc;
  doc["kind"] = kind_name(h.kind);
  doc["target"] = h.target;
  doc["fold"] = h.fold;
  doc["input_dim"] = h.input_dim;
  doc["hidden"] = h.hidden;
  doc["n_params"] = checkpoint.params.size();
  doc["backend"] = {{"name", h.backend.name},
                    {"dim", h.backend.dimension},
                    {"max_tokens", h.backend.max_tokens}};
  doc["seed"] = h.seed;
  doc["config"] = {{"learning_rate", h.config.learning_rate},
                   {"beta1", h.config.beta1},
                   {"beta2", h.config.beta2},
                   {"adam_epsilon", h.config.adam_epsilon},
                   {"epochs", h.config.epochs},
                   {"batch_size", h.config.batch_size},
                   {"patience", h.config.patience},
                   {"hidden", h.config.hidden},
                   {"huber_delta", h.config.huber_delta},
                   {"seed", h.config.seed}};
  const auto text = doc.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Validation, "cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic.data(), static_cast<std::streamsize>(kCheckpointMagic.size()));
  const auto len = static_cast<std::uint32_t>(text.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(checkpoint.params.data()),
            static_cast<std::streamsize>(checkpoint.params.size() * sizeof(double)));
  if (!out) fail(ErrorKind::Validation, "error writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Missing, "checkpoint not found: " + path.string());
  std::string magic(kCheckpointMagic.size(), '\0');
  in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || magic != kCheckpointMagic) fail(ErrorKind::Validation, "checkpoint " + path.string() + ": bad header");
  std::string text(len, '\0');
  in.read(text.data(), len);

  Checkpoint cp;
  auto& h = cp.header;
  std::size_t n_params = 0;
  try {
    auto doc = nlohmann::json::parse(text);
    h.kind = parse_kind(doc.at("kind").get<std::string>());
    h.target = doc.at("target").get<std::string>();
    h.fold = doc.at("fold").get<int>();
    h.input_dim = doc.at("input_dim").get<std::size_t>();
    h.hidden = doc.at("hidden").get<std::size_t>();
    n_params = doc.at("n_params").get<std::size_t>();
    const auto& b = doc.at("backend");
    h.backend = {b.at("name").get<std::string>(), b.at("dim").get<std::size_t>(),
                 b.at("max_tokens").get<std::size_t>()};
    h.seed = doc.at("seed").get<std::uint64_t>();
    const auto& c = doc.at("config");
    h.config.learning_rate = c.at("learning_rate").get<double>();
    h.config.beta1 = c.at("beta1").get<double>();
    h.config.beta2 = c.at("beta2").get<double>();
    h.config.adam_epsilon = c.at("adam_epsilon").get<double>();
    h.config.epochs = c.at("epochs").get<std::size_t>();
    h.config.batch_size = c.at("batch_size").get<std::size_t>();
    h.config.patience = c.at("patience").get<std::size_t>();
    h.config.hidden = c.at("hidden").get<std::size_t>();
    h.config.huber_delta = c.at("huber_delta").get<double>();
    h.config.seed = c.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Validation, "checkpoint " + path.string() + ": " + e.what());
  }
  if (n_params != expected_params(h)) {
    fail(ErrorKind::Validation, "checkpoint " + path.string() + ": header shape implies " +
                                    std::to_string(expected_params(h)) + " parameters, found " +
                                    std::to_string(n_params));
  }
  cp.params.resize(n_params);
  in.read(reinterpret_cast<char*>(cp.params.data()),
          static_cast<std::streamsize>(n_params * sizeof(double)));
  if (!in) fail(ErrorKind::Validation, "checkpoint " + path.string() + " is truncated");
  if (in.peek() != std::char_traits<char>::eof()) {
    fail(ErrorKind::Validation, "checkpoint " + path.string() + " has trailing bytes");
  }
  return cp;
}

RegressionHead regression_head_from(const Checkpoint& cp) {
  require(cp.header.kind == HeadKind::Regression, "checkpoint does not hold a regression head");
  RegressionHead head(cp.header.input_dim, cp.header.hidden);
  std::copy(cp.params.begin(), cp.params.end(), head.params().begin());
  return head;
}

OrdinalHead ordinal_head_from(const Checkpoint& cp) {
  require(cp.header.kind == HeadKind::Ordinal, "checkpoint does not hold an ordinal head");
  OrdinalHead head(cp.header.input_dim, cp.header.hidden);
  std::copy(cp.params.begin(), cp.params.end(), head.params().begin());
  return head;
}

}  // namespace tpot
