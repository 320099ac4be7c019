#include "tpot/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "tpot/error.hpp"

namespace tpot {

namespace {

// Portable uniform draw in [-limit, limit).
double uniform(std::mt19937_64& rng, double limit) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return (2.0 * u - 1.0) * limit;
}

void check_input(std::size_t expected, std::size_t got) {
  require(expected == got, "head expects a " + std::to_string(expected) +
                               "-dimensional input, got " + std::to_string(got));
}

// Hidden activations; returns pre-activations through `pre`.
template <class Head>
void hidden_layer(const Head& head, std::span<const double> x, std::vector<double>& pre,
                  std::vector<double>& act) {
  const auto hidden = head.hidden();
  pre.resize(hidden);
  act.resize(hidden);
  const auto b1 = head.b1();
  for (std::size_t h = 0; h < hidden; ++h) {
    const auto row = head.w1_row(h);
    double z = b1[h];
    for (std::size_t m = 0; m < x.size(); ++m) z += row[m] * x[m];
    pre[h] = z;
    act[h] = z > 0.0 ? z : 0.0;
  }
}

// Backpropagates d loss / d activation through the ReLU into W1 and b1.
template <class Head>
void backprop_hidden(const Head& head, std::span<const double> x, const std::vector<double>& pre,
                     const std::vector<double>& dact, Head& grad) {
  auto gb1 = grad.b1();
  for (std::size_t h = 0; h < head.hidden(); ++h) {
    if (pre[h] <= 0.0) continue;
    const double g = dact[h];
    gb1[h] += g;
    auto row = grad.w1_row(h);
    for (std::size_t m = 0; m < x.size(); ++m) row[m] += g * x[m];
  }
}

}  // namespace

RegressionHead::RegressionHead(std::size_t input_dim, std::size_t hidden)
    : input_(input_dim), hidden_(hidden), params_(hidden * (input_dim + 2) + 1, 0.0) {
  require(input_dim > 0 && hidden > 0, "head dimensions must be positive");
}

RegressionHead RegressionHead::initialized(std::size_t input_dim, std::size_t hidden,
                                           std::uint64_t seed) {
  RegressionHead head(input_dim, hidden);
  std::mt19937_64 rng(seed);
  const double l1 = std::sqrt(6.0 / static_cast<double>(input_dim + hidden));
  for (std::size_t h = 0; h < hidden; ++h) {
    for (auto& w : head.w1_row(h)) w = uniform(rng, l1);
  }
  const double l2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
  for (auto& w : head.w2()) w = uniform(rng, l2);
  return head;
}

OrdinalHead::OrdinalHead(std::size_t input_dim, std::size_t hidden)
    : input_(input_dim), hidden_(hidden), params_(hidden * (input_dim + 3) + 2, 0.0) {
  require(input_dim > 0 && hidden > 0, "head dimensions must be positive");
}

OrdinalHead OrdinalHead::initialized(std::size_t input_dim, std::size_t hidden, std::uint64_t seed) {
  OrdinalHead head(input_dim, hidden);
  std::mt19937_64 rng(seed);
  const double l1 = std::sqrt(6.0 / static_cast<double>(input_dim + hidden));
  for (std::size_t h = 0; h < hidden; ++h) {
    for (auto& w : head.w1_row(h)) w = uniform(rng, l1);
  }
  const double l2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
  for (auto& w : head.w_mu()) w = uniform(rng, l2);
  for (auto& w : head.w_s()) w = uniform(rng, l2);
  return head;
}

double head_forward(const RegressionHead& head, std::span<const double> x) {
  check_input(head.input_dim(), x.size());
  std::vector<double> pre, act;
  hidden_layer(head, x, pre, act);
  double y = head.b2();
  const auto w2 = head.w2();
  for (std::size_t h = 0; h < act.size(); ++h) y += w2[h] * act[h];
  return y;
}

double huber_loss(double prediction, double target, double delta) {
  const double r = std::abs(prediction - target);
  return r <= delta ? 0.5 * r * r : delta * (r - 0.5 * delta);
}

double huber_derivative(double prediction, double target, double delta) {
  return std::clamp(prediction - target, -delta, delta);
}

double accumulate_gradient(const RegressionHead& head, std::span<const double> x, double y,
                           double huber_delta, RegressionHead& grad) {
  check_input(head.input_dim(), x.size());
  std::vector<double> pre, act;
  hidden_layer(head, x, pre, act);
  const auto w2 = head.w2();
  double pred = head.b2();
  for (std::size_t h = 0; h < act.size(); ++h) pred += w2[h] * act[h];

  const double g = huber_derivative(pred, y, huber_delta);
  grad.b2() += g;
  auto gw2 = grad.w2();
  std::vector<double> dact(act.size());
  for (std::size_t h = 0; h < act.size(); ++h) {
    gw2[h] += g * act[h];
    dact[h] = g * w2[h];
  }
  backprop_hidden(head, x, pre, dact, grad);
  return huber_loss(pred, y, huber_delta);
}

RegressionHead head_backward(const RegressionHead& head, std::span<const double> x, double y,
                             double huber_delta) {
  RegressionHead grad(head.input_dim(), head.hidden());
  accumulate_gradient(head, x, y, huber_delta, grad);
  return grad;
}

double logistic_cdf(double z, double mu, double s) {
  const double u = (z - mu) / s;
  // Branch on sign so exp never overflows.
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

namespace {
double sigmoid(double x) { return logistic_cdf(x, 0.0, 1.0); }
}  // namespace

OrdinalOutput ordinal_from_location_scale(double mu, double s) {
  require(s > 0.0, "ordinal scale must be positive");
  OrdinalOutput out;
  out.mu = mu;
  out.s = s;
  for (std::size_t j = 0; j < kThresholds.size(); ++j) out.cum[j] = logistic_cdf(kThresholds[j], mu, s);
  std::size_t best = 0;
  for (std::size_t j = 1; j < kThresholds.size(); ++j) {
    out.interval[j - 1] = out.cum[j] - out.cum[j - 1];
    if (out.interval[j - 1] > out.interval[best]) best = j - 1;
  }
  out.prediction = static_cast<int>(best) + 1;
  return out;
}

OrdinalOutput ordinal_forward(const OrdinalHead& head, std::span<const double> x) {
  check_input(head.input_dim(), x.size());
  std::vector<double> pre, act;
  hidden_layer(head, x, pre, act);
  double mu = head.b_mu();
  double raw = head.b_s();
  const auto wm = head.w_mu();
  const auto ws = head.w_s();
  for (std::size_t h = 0; h < act.size(); ++h) {
    mu += wm[h] * act[h];
    raw += ws[h] * act[h];
  }
  return ordinal_from_location_scale(mu, softplus(raw) + kScaleFloor);
}

std::array<double, 5> ordinal_targets(int y) {
  require(y >= 1 && y <= 5, "ordinal target must be in 1..5, got " + std::to_string(y));
  std::array<double, 5> t{};
  for (std::size_t j = 1; j < kThresholds.size(); ++j) t[j - 1] = y < kThresholds[j] ? 1.0 : 0.0;
  return t;
}

double ordinal_loss(const OrdinalOutput& out, int y, double huber_delta) {
  const auto t = ordinal_targets(y);
  double loss = 0.0;
  for (std::size_t j = 1; j < kThresholds.size(); ++j) {
    const double p = std::clamp(out.cum[j], kProbabilityClamp, 1.0 - kProbabilityClamp);
    loss -= t[j - 1] * std::log(p) + (1.0 - t[j - 1]) * std::log(1.0 - p);
  }
  return loss + huber_loss(out.mu, static_cast<double>(y), huber_delta);
}

double accumulate_gradient(const OrdinalHead& head, std::span<const double> x, int y,
                           double huber_delta, OrdinalHead& grad) {
  check_input(head.input_dim(), x.size());
  std::vector<double> pre, act;
  hidden_layer(head, x, pre, act);
  const auto wm = head.w_mu();
  const auto ws = head.w_s();
  double mu = head.b_mu();
  double raw = head.b_s();
  for (std::size_t h = 0; h < act.size(); ++h) {
    mu += wm[h] * act[h];
    raw += ws[h] * act[h];
  }
  const double s = softplus(raw) + kScaleFloor;
  const auto out = ordinal_from_location_scale(mu, s);
  const auto t = ordinal_targets(y);

  // With u_j = (theta_j - mu) / s, d BCE_j / d u_j = cum_j - t_j inside the
  // clamp and 0 where the probability is clamped.
  double dmu = huber_derivative(mu, static_cast<double>(y), huber_delta);
  double ds = 0.0;
  for (std::size_t j = 1; j < kThresholds.size(); ++j) {
    const double c = out.cum[j];
    if (c <= kProbabilityClamp || c >= 1.0 - kProbabilityClamp) continue;
    const double du = c - t[j - 1];
    const double u = (kThresholds[j] - mu) / s;
    dmu -= du / s;
    ds -= du * u / s;
  }
  const double draw = ds * sigmoid(raw);

  grad.b_mu() += dmu;
  grad.b_s() += draw;
  auto gm = grad.w_mu();
  auto gs = grad.w_s();
  std::vector<double> dact(act.size());
  for (std::size_t h = 0; h < act.size(); ++h) {
    gm[h] += dmu * act[h];
    gs[h] += draw * act[h];
    dact[h] = dmu * wm[h] + draw * ws[h];
  }
  backprop_hidden(head, x, pre, dact, grad);
  return ordinal_loss(out, y, huber_delta);
}

OrdinalHead ordinal_backward(const OrdinalHead& head, std::span<const double> x, int y,
                             double huber_delta) {
  OrdinalHead grad(head.input_dim(), head.hidden());
  accumulate_gradient(head, x, y, huber_delta, grad);
  return grad;
}

}  // namespace tpot
