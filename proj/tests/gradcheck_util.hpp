#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "jamrl/network.hpp"

namespace jamrl::testutil {

inline Tensor random_tensor(const std::vector<int>& shape, Rng& rng) {
  Tensor t(shape);
  for (Eigen::Index i = 0; i < t.data.size(); ++i) {
    t.data[i] = 2.0 * rng.uniform() - 1.0;
  }
  return t;
}

/// Pre-activations of layer `upto` via a truncated linear copy of the net.
inline Eigen::VectorXd pre_activation(const Network& net, const Tensor& input,
                                      std::size_t upto) {
  std::vector<LayerSpec> specs(net.layer_specs().begin(),
                               net.layer_specs().begin() + upto + 1);
  specs.back().relu = false;
  Network truncated(specs, net.input_shape());
  for (std::size_t i = 0; i <= upto; ++i) {
    truncated.params()[i] = net.params()[i];
  }
  return truncated.forward(input);
}

/// True when every ReLU pre-activation sits safely away from the kink, so
/// the central-difference oracle stays valid.
inline bool kink_free(const Network& net, std::span<const Tensor> inputs,
                      double margin) {
  for (std::size_t l = 0; l < net.layer_specs().size(); ++l) {
    if (!net.layer_specs()[l].relu) continue;
    for (const auto& input : inputs) {
      const Eigen::VectorXd z = pre_activation(net, input, l);
      if (z.cwiseAbs().minCoeff() < margin) return false;
    }
  }
  return true;
}

struct GradCheckSetup {
  Network net;
  std::vector<Tensor> inputs;
  std::vector<int> actions;
  std::vector<double> targets;
  std::vector<double> weights;
};

inline GradCheckSetup random_gradcheck_setup(int arch, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LayerSpec> specs;
  std::vector<int> input_shape;
  switch (arch % 4) {
    case 0:
      input_shape = {5};
      specs = {LayerSpec::dense(6, true), LayerSpec::dense(3, false)};
      break;
    case 1:
      input_shape = {1, 5, 5};
      specs = {LayerSpec::conv(2, 2, 2, 1, true), LayerSpec::dense(4, false)};
      break;
    case 2:
      input_shape = {1, 6, 6};
      specs = {LayerSpec::conv(2, 3, 3, 2, true), LayerSpec::conv(3, 2, 2, 1, true),
               LayerSpec::dense(3, false)};
      break;
    default:
      input_shape = {2, 4, 4};
      specs = {LayerSpec::conv(3, 2, 2, 1, false), LayerSpec::dense(5, true),
               LayerSpec::dense(2, false)};
      break;
  }
  GradCheckSetup setup{Network(specs, input_shape, rng), {}, {}, {}, {}};
  const int batch = 3;
  for (int i = 0; i < batch; ++i) {
    setup.inputs.push_back(random_tensor(input_shape, rng));
    setup.actions.push_back(rng.uniform_int(setup.net.output_size()));
    setup.targets.push_back(2.0 * rng.uniform() - 1.0);
    setup.weights.push_back(0.25 + 0.75 * rng.uniform());
  }
  return setup;
}

/// Max relative error between analytic and central finite-difference
/// gradients over every parameter of the setup's network.
inline double gradient_check(GradCheckSetup& s, double h) {
  const auto loss_of = [&]() {
    return loss_and_grad(s.net, s.inputs, s.actions, s.targets, s.weights).loss;
  };
  const LossResult analytic =
      loss_and_grad(s.net, s.inputs, s.actions, s.targets, s.weights);
  double worst = 0.0;
  const auto probe = [&](double& value, double grad) {
    const double saved = value;
    value = saved + h;
    const double up = loss_of();
    value = saved - h;
    const double down = loss_of();
    value = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(grad), std::abs(numeric), 1e-3});
    worst = std::max(worst, std::abs(grad - numeric) / denom);
  };
  for (std::size_t l = 0; l < s.net.params().size(); ++l) {
    auto& p = s.net.params()[l];
    const auto& g = analytic.gradients.layers[l];
    for (Eigen::Index r = 0; r < p.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.weights.cols(); ++c) {
        probe(p.weights(r, c), g.weights(r, c));
      }
    }
    for (Eigen::Index i = 0; i < p.bias.size(); ++i) {
      probe(p.bias[i], g.bias[i]);
    }
  }
  return worst;
}

}  // namespace jamrl::testutil
