#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tpot {

// Fixed ordinal thresholds theta_0..theta_5 bracketing the scores 1..5.
inline constexpr std::array<double, 6> kThresholds{0.5, 1.5, 2.5, 3.5, 4.5, 5.5};
inline constexpr double kScaleFloor = 0.01;
inline constexpr double kProbabilityClamp = 1e-7;
inline constexpr std::size_t kDefaultHidden = 300;

// Two-layer score network: y = w2 . relu(W1 x + b1) + b2.
//
// Parameters live in one flat block [W1 (hidden x input, row major) | b1 | w2 | b2]
// so that optimizers and checkpoints treat them uniformly. A head of the same
// shape doubles as its own gradient container.
class RegressionHead {
 public:
  RegressionHead() = default;
  RegressionHead(std::size_t input_dim, std::size_t hidden);

  // Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.
  static RegressionHead initialized(std::size_t input_dim, std::size_t hidden, std::uint64_t seed);

  std::size_t input_dim() const { return input_; }
  std::size_t hidden() const { return hidden_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::span<double> w1_row(std::size_t h) { return params().subspan(h * input_, input_); }
  std::span<const double> w1_row(std::size_t h) const { return params().subspan(h * input_, input_); }
  std::span<double> b1() { return params().subspan(hidden_ * input_, hidden_); }
  std::span<const double> b1() const { return params().subspan(hidden_ * input_, hidden_); }
  std::span<double> w2() { return params().subspan(hidden_ * (input_ + 1), hidden_); }
  std::span<const double> w2() const { return params().subspan(hidden_ * (input_ + 1), hidden_); }
  double& b2() { return params_.back(); }
  double b2() const { return params_.back(); }

  // Bias of the output unit; the learned prior for an all-zero input.
  double& output_bias() { return b2(); }

 private:
  std::size_t input_ = 0;
  std::size_t hidden_ = 0;
  std::vector<double> params_;
};

// Ordinal network: a shared hidden layer feeding two output units, the
// location mu and a raw scale mapped to s = softplus(raw) + 0.01.
//
// Flat layout [W1 | b1 | w_mu | b_mu | w_s | b_s].
class OrdinalHead {
 public:
  OrdinalHead() = default;
  OrdinalHead(std::size_t input_dim, std::size_t hidden);

  static OrdinalHead initialized(std::size_t input_dim, std::size_t hidden, std::uint64_t seed);

  std::size_t input_dim() const { return input_; }
  std::size_t hidden() const { return hidden_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::span<double> w1_row(std::size_t h) { return params().subspan(h * input_, input_); }
  std::span<const double> w1_row(std::size_t h) const { return params().subspan(h * input_, input_); }
  std::span<double> b1() { return params().subspan(hidden_ * input_, hidden_); }
  std::span<const double> b1() const { return params().subspan(hidden_ * input_, hidden_); }
  std::span<double> w_mu() { return params().subspan(hidden_ * (input_ + 1), hidden_); }
  std::span<const double> w_mu() const { return params().subspan(hidden_ * (input_ + 1), hidden_); }
  double& b_mu() { return params_[hidden_ * (input_ + 2)]; }
  double b_mu() const { return params_[hidden_ * (input_ + 2)]; }
  std::span<double> w_s() { return params().subspan(hidden_ * (input_ + 2) + 1, hidden_); }
  std::span<const double> w_s() const { return params().subspan(hidden_ * (input_ + 2) + 1, hidden_); }
  double& b_s() { return params_.back(); }
  double b_s() const { return params_.back(); }

  double& output_bias() { return b_mu(); }

 private:
  std::size_t input_ = 0;
  std::size_t hidden_ = 0;
  std::vector<double> params_;
};

double head_forward(const RegressionHead& head, std::span<const double> x);

// 0.5 r^2 for |r| <= delta, delta (|r| - 0.5 delta) beyond.
double huber_loss(double prediction, double target, double delta);
// d huber / d prediction.
double huber_derivative(double prediction, double target, double delta);

// Exact gradient of huber_loss(head_forward(head, x), y).
RegressionHead head_backward(const RegressionHead& head, std::span<const double> x, double y,
                             double huber_delta);
// Adds the gradient into `grad` and returns the loss.
double accumulate_gradient(const RegressionHead& head, std::span<const double> x, double y,
                           double huber_delta, RegressionHead& grad);

struct OrdinalOutput {
  double mu = 0.0;
  double s = 1.0;
  std::array<double, 6> cum{};       // sigma(theta_j, mu, s), j = 0..5
  std::array<double, 5> interval{};  // cum[j] - cum[j-1], j = 1..5 (stored at j-1)
  int prediction = 0;                // argmax over interval, ties to the lower score
};

double logistic_cdf(double z, double mu, double s);
double softplus(double x);

OrdinalOutput ordinal_from_location_scale(double mu, double s);
OrdinalOutput ordinal_forward(const OrdinalHead& head, std::span<const double> x);

// Binary targets t_j = 1{y < theta_j} for j = 1..5.
std::array<double, 5> ordinal_targets(int y);

// BCE over the five cumulative probabilities plus huber(mu, y).
double ordinal_loss(const OrdinalOutput& out, int y, double huber_delta);

OrdinalHead ordinal_backward(const OrdinalHead& head, std::span<const double> x, int y,
                             double huber_delta);
double accumulate_gradient(const OrdinalHead& head, std::span<const double> x, int y,
                           double huber_delta, OrdinalHead& grad);

}  // namespace tpot
