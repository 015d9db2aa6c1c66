#pragma once

#include <algorithm>
#include <cmath>

#include "detect/hashing.hpp"
#include "detect/model/metric_model.hpp"

namespace testing {

inline std::vector<double> random_vector(std::size_t n, detect::SplitMix64& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

// Largest relative error between analytic and central-difference gradients over every
// parameter of `net0`, on one random batch.
inline double max_gradient_error(const detect::model::Network& net0, std::size_t batch, std::uint64_t seed = 31) {
  using detect::model::Triple;
  detect::SplitMix64 rng(seed);
  detect::model::Network net = net0;
  const std::size_t dim = net.input_dim();
  const auto x = random_vector(batch * dim, rng);
  std::vector<Triple> targets(batch);
  for (auto& t : targets) t = {rng.normal(), rng.normal(), rng.normal()};
  auto grads = net.zero_gradients();
  net.loss_and_gradients({x, batch, dim}, targets, grads);

  const double h = 1e-5;
  double worst = 0.0;
  auto probe = [&](double& param, double analytic) {
    const double keep = param;
    auto scratch = net.zero_gradients();
    param = keep + h;
    const double up = net.loss_and_gradients({x, batch, dim}, targets, scratch);
    param = keep - h;
    const double down = net.loss_and_gradients({x, batch, dim}, targets, scratch);
    param = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
    worst = std::max(worst, std::fabs(analytic - numeric) / denom);
  };
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    auto& layer = net.layers()[l];
    for (std::size_t k = 0; k < layer.weights.size(); ++k) probe(layer.weights[k], grads[l].weights[k]);
    for (std::size_t k = 0; k < layer.bias.size(); ++k) probe(layer.bias[k], grads[l].bias[k]);
  }
  return worst;
}

// Gaussian features, uniform [0,100] targets.
inline detect::model::Dataset synthetic_dataset(std::size_t n, std::size_t dim, std::uint64_t seed) {
  detect::SplitMix64 rng(seed);
  detect::model::Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    d.features.push_back(random_vector(dim, rng));
    d.targets.push_back({100.0 * rng.uniform(), 100.0 * rng.uniform(), 100.0 * rng.uniform()});
  }
  return d;
}

// Ten examples, trained on themselves until the loss collapses.
inline detect::model::TrainResult overfit_ten() {
  const auto emb = std::make_shared<detect::HashingEmbedder>(4);
  const auto d = synthetic_dataset(10, 28, 8);
  auto cfg = detect::model::preset("toy");
  cfg.learning_rate = 1e-2;
  cfg.epochs = 400;
  cfg.seed = 1;
  return detect::model::train(d, d, cfg, emb);
}

}  // namespace testing
