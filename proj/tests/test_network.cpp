#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "gradcheck_util.hpp"
#include "jamrl/network.hpp"

using namespace jamrl;
using jamrl::testutil::gradient_check;
using jamrl::testutil::GradCheckSetup;
using jamrl::testutil::kink_free;
using jamrl::testutil::random_gradcheck_setup;
using jamrl::testutil::random_tensor;

namespace {

Tensor tensor_of(std::vector<int> shape, std::initializer_list<double> values) {
  Eigen::VectorXd data(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) data[i++] = v;
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace

TEST_CASE("forward: all-zero parameters give all-zero outputs") {
  Network net(mlp_layers(6), {4});
  const Eigen::VectorXd out = net.forward(Tensor({4}));
  CHECK(out.size() == 6);
  CHECK(out.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward: identity dense layer passes the input through") {
  Network net({LayerSpec::dense(2, false)}, {2});
  net.params()[0].weights = Eigen::MatrixXd::Identity(2, 2);
  const Tensor in = tensor_of({2}, {3.5, -1.25});
  const Eigen::VectorXd out = net.forward(in);
  CHECK(out[0] == 3.5);
  CHECK(out[1] == -1.25);
}

TEST_CASE("forward: ones kernel computes 3x3 window sums") {
  Network net({LayerSpec::conv(1, 3, 3, 1, false)}, {1, 4, 4});
  net.params()[0].weights.setOnes();
  Tensor in({1, 4, 4});
  for (int i = 0; i < 16; ++i) in.data[i] = i + 1;
  const Eigen::VectorXd out = net.forward(in);
  REQUIRE(out.size() == 4);
  CHECK(out[0] == 54.0);
  CHECK(out[1] == 63.0);
  CHECK(out[2] == 90.0);
  CHECK(out[3] == 99.0);
}

TEST_CASE("forward: shape mismatch is signalled") {
  Network dense_net(mlp_layers(4), {6});
  CHECK_THROWS_AS(dense_net.forward(Tensor({5})), std::invalid_argument);
  Network conv_net({LayerSpec::conv(1, 2, 2, 1, false)}, {1, 4, 4});
  CHECK_THROWS_AS(conv_net.forward(Tensor({1, 2, 8})), std::invalid_argument);
}

TEST_CASE("loss: hand-computed weighted TD loss") {
  // Zero network, so Q(phi)[a] = 0 and psi equals the target.
  Network net({LayerSpec::dense(3, false)}, {2});
  const std::vector<Tensor> inputs{Tensor({2}), Tensor({2})};
  const std::vector<int> actions{0, 2};
  const std::vector<double> targets{1.0, 2.0};
  const std::vector<double> weights{1.0, 0.5};
  const LossResult r = loss_and_grad(net, inputs, actions, targets, weights);
  CHECK(r.loss == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(r.td_errors[0] == doctest::Approx(1.0));
  CHECK(r.td_errors[1] == doctest::Approx(2.0));
}

TEST_CASE("loss: zero TD error means zero loss and zero gradients") {
  Rng rng(3);
  Network net(mlp_layers(4), {3}, rng);
  const Tensor in = random_tensor({3}, rng);
  const Eigen::VectorXd q = net.forward(in);
  const std::vector<Tensor> inputs{in, in};
  const std::vector<int> actions{1, 3};
  const std::vector<double> targets{q[1], q[3]};
  const std::vector<double> weights{1.0, 1.0};
  const LossResult r = loss_and_grad(net, inputs, actions, targets, weights);
  CHECK(r.loss == 0.0);
  for (const auto& layer : r.gradients.layers) {
    CHECK(layer.weights.cwiseAbs().maxCoeff() == 0.0);
    CHECK(layer.bias.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("loss: non-finite intermediates are signalled with a diagnostic") {
  Network net({LayerSpec::dense(2, false)}, {2});
  const std::vector<Tensor> inputs{Tensor({2})};
  const std::vector<int> actions{0};
  const std::vector<double> targets{std::numeric_limits<double>::quiet_NaN()};
  const std::vector<double> weights{1.0};
  CHECK_THROWS_AS(loss_and_grad(net, inputs, actions, targets, weights),
                  std::runtime_error);
}

TEST_CASE("loss: gradient flows only through the taken action") {
  Network net({LayerSpec::dense(3, false)}, {2});
  const std::vector<Tensor> inputs{tensor_of({2}, {1.0, 2.0})};
  const std::vector<int> actions{1};
  const std::vector<double> targets{1.0};
  const std::vector<double> weights{1.0};
  const LossResult r = loss_and_grad(net, inputs, actions, targets, weights);
  // Rows 0 and 2 of the weight gradient stay zero.
  CHECK(r.gradients.layers[0].weights.row(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.gradients.layers[0].weights.row(2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.gradients.layers[0].weights.row(1).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("gradient check: analytic matches central differences on random nets") {
  const double h = 1e-5;
  int checked = 0;
  std::uint64_t seed = 1;
  while (checked < 12) {
    GradCheckSetup setup = random_gradcheck_setup(checked, seed++);
    if (!kink_free(setup.net, setup.inputs, 1e-3)) continue;  // FD invalid at a kink
    const double err = gradient_check(setup, h);
    INFO("arch ", checked % 4, " seed ", seed - 1, " max rel err ", err);
    CHECK(err < 1e-4);
    ++checked;
  }
}

TEST_CASE("sgd: zero learning rate leaves parameters untouched") {
  Rng rng(5);
  Network net(mlp_layers(3), {2}, rng);
  const Network before = net;
  GradientSet g = net.zero_gradients();
  for (auto& layer : g.layers) layer.weights.setConstant(1.0);
  sgd_step(net, g, 0.0);
  for (std::size_t i = 0; i < net.params().size(); ++i) {
    CHECK(net.params()[i].weights == before.params()[i].weights);
  }
}

TEST_CASE("sgd: one-step arithmetic on a single weight") {
  Network net({LayerSpec::dense(1, false)}, {1});
  net.params()[0].weights(0, 0) = 1.0;
  GradientSet g = net.zero_gradients();
  g.layers[0].weights(0, 0) = 2.0;
  sgd_step(net, g, 0.1);
  CHECK(net.params()[0].weights(0, 0) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("sgd: descent on a scalar quadratic decreases the loss monotonically") {
  // Fit Q(x)[0] = w * x to target t: the loss is a convex parabola in w.
  Network net({LayerSpec::dense(1, false)}, {1});
  net.params()[0].weights(0, 0) = 5.0;
  const std::vector<Tensor> inputs{tensor_of({1}, {1.0})};
  const std::vector<int> actions{0};
  const std::vector<double> targets{2.0};
  const std::vector<double> weights{1.0};
  double prev = loss_and_grad(net, inputs, actions, targets, weights).loss;
  for (int step = 0; step < 50; ++step) {
    const LossResult r = loss_and_grad(net, inputs, actions, targets, weights);
    sgd_step(net, r.gradients, 0.1);
    const double now = loss_and_grad(net, inputs, actions, targets, weights).loss;
    CHECK(now <= prev + 1e-15);
    prev = now;
  }
  CHECK(prev < 1e-6);
}

TEST_CASE("copy_from: outputs match bitwise and the copy is deep") {
  Rng rng(9);
  Network src(mlp_layers(5), {4}, rng);
  Network dst(mlp_layers(5), {4});
  copy_from(dst, src);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor x = random_tensor({4}, rng);
    const Eigen::VectorXd a = src.forward(x);
    const Eigen::VectorXd b = dst.forward(x);
    for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }
  // Mutating the source afterwards leaves the copy unchanged.
  const Tensor probe = random_tensor({4}, rng);
  const Eigen::VectorXd before = dst.forward(probe);
  src.params()[0].weights.setConstant(42.0);
  const Eigen::VectorXd after = dst.forward(probe);
  for (Eigen::Index i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);
  // Training one side makes them diverge.
  const std::vector<Tensor> inputs{probe};
  const std::vector<int> actions{0};
  const std::vector<double> targets{before[0] + 1.0};
  const std::vector<double> weights{1.0};
  Network trained = dst;
  const LossResult r = loss_and_grad(trained, inputs, actions, targets, weights);
  sgd_step(trained, r.gradients, 0.5);
  CHECK(trained.forward(probe)[0] != dst.forward(probe)[0]);
}

TEST_CASE("copy_from: architecture mismatch is rejected") {
  Network a(mlp_layers(3), {4});
  Network b(mlp_layers(4), {4});
  CHECK_THROWS_AS(copy_from(a, b), std::invalid_argument);
}

TEST_CASE("determinism: one seed, one trajectory") {
  const auto trajectory = [](std::uint64_t seed) {
    Rng rng(seed);
    Network net(mlp_layers(4), {3}, rng);
    for (int step = 0; step < 20; ++step) {
      const std::vector<Tensor> inputs{random_tensor({3}, rng)};
      const std::vector<int> actions{rng.uniform_int(4)};
      const std::vector<double> targets{rng.uniform()};
      const std::vector<double> weights{1.0};
      const LossResult r = loss_and_grad(net, inputs, actions, targets, weights);
      sgd_step(net, r.gradients, 1e-2);
    }
    return net;
  };
  const Network a = trajectory(42);
  const Network b = trajectory(42);
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    CHECK(a.params()[i].weights == b.params()[i].weights);
    CHECK(a.params()[i].bias == b.params()[i].bias);
  }
}

TEST_CASE("shape algebra: the conv stack on a 9x11 arrangement ends in 96 outputs") {
  // 3 * (W + 1) = 99 values for W = 32, S * N = 96 with S = 3, N = 32.
  Rng rng(2);
  Network net(paper_cnn_layers(96), {1, 9, 11}, rng);
  CHECK(net.output_size() == 96);
  const Eigen::VectorXd out = net.forward(random_tensor({1, 9, 11}, rng));
  CHECK(out.size() == 96);
}

TEST_CASE("save/load: text round trip is bit-exact") {
  Rng rng(31);
  Network net(paper_cnn_layers(12), {1, 5, 6}, rng);
  std::stringstream stream;
  save_network(net, stream);
  const Network loaded = load_network(stream);
  REQUIRE(loaded.same_architecture(net));
  for (std::size_t i = 0; i < net.params().size(); ++i) {
    CHECK(loaded.params()[i].weights == net.params()[i].weights);
    CHECK(loaded.params()[i].bias == net.params()[i].bias);
  }
  const Tensor probe = random_tensor({1, 5, 6}, rng);
  const Eigen::VectorXd a = net.forward(probe);
  const Eigen::VectorXd b = loaded.forward(probe);
  for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}
