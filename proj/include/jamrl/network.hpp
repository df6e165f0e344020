#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <span>
#include <vector>

#include "jamrl/rng.hpp"

namespace jamrl {

/// Dense row-major value block with an explicit shape.
struct Tensor {
  std::vector<int> shape;
  Eigen::VectorXd data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s);
  Tensor(std::vector<int> s, Eigen::VectorXd values);
  int numel() const { return static_cast<int>(data.size()); }
};

int shape_numel(const std::vector<int>& shape);

/// One layer of the approximator: valid (no padding) cross-correlation with
/// stride, or a fully connected map; optional ReLU on either.
struct LayerSpec {
  enum class Kind { conv, dense };
  Kind kind = Kind::dense;
  int filters = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  int stride = 1;
  int units = 0;
  bool relu = false;

  static LayerSpec conv(int filters, int kernel_h, int kernel_w, int stride,
                        bool relu);
  static LayerSpec dense(int units, bool relu);
  bool operator==(const LayerSpec&) const = default;
};

struct LayerParams {
  // dense: units x fan_in; conv: filters x (in_channels * kh * kw)
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

/// Per-layer parameter gradients, same shapes as the network parameters.
struct GradientSet {
  std::vector<LayerParams> layers;
};

/// Layered function approximator over double precision. Shapes are resolved
/// once at construction; a mismatched input or architecture throws.
class Network {
 public:
  /// Zero-initialised parameters (used by loaders and tests).
  Network(std::vector<LayerSpec> layers, std::vector<int> input_shape);
  /// Uniform initialisation in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
  Network(std::vector<LayerSpec> layers, std::vector<int> input_shape, Rng& rng);

  /// Deterministic layer-by-layer evaluation; returns the final linear layer's
  /// outputs (length output_size()).
  Eigen::VectorXd forward(const Tensor& input) const;

  int output_size() const;
  const std::vector<LayerSpec>& layer_specs() const { return specs_; }
  const std::vector<int>& input_shape() const { return input_shape_; }
  std::vector<LayerParams>& params() { return params_; }
  const std::vector<LayerParams>& params() const { return params_; }

  GradientSet zero_gradients() const;
  bool same_architecture(const Network& other) const;

  /// Shape of the data flowing into layer `i` (i == layer count gives the
  /// output shape).
  const std::vector<int>& shape_before(std::size_t i) const;

 private:
  friend struct ForwardCache;
  std::vector<LayerSpec> specs_;
  std::vector<int> input_shape_;
  std::vector<std::vector<int>> shapes_;  // shapes_[i] feeds layer i
  std::vector<LayerParams> params_;
};

struct LossResult {
  double loss = 0.0;
  GradientSet gradients;
  std::vector<double> td_errors;  // target_i - Q(phi_i)[action_i]
};

/// Weighted squared-TD-error loss over a minibatch with manual
/// backpropagation. Targets are constants; the gradient enters only through
/// the taken-action output of each sample. Non-finite intermediates throw.
LossResult loss_and_grad(const Network& net, std::span<const Tensor> inputs,
                         std::span<const int> action_indices,
                         std::span<const double> targets,
                         std::span<const double> weights);

/// In-place plain SGD: theta <- theta - lr * grad.
void sgd_step(Network& net, const GradientSet& gradients, double learning_rate);

/// Deep parameter copy; architectures must match exactly.
void copy_from(Network& dst, const Network& src);

/// Text serialization with hexfloat values; round-trips bit-exactly.
void save_network(const Network& net, std::ostream& out);
Network load_network(std::istream& in);

/// Desk-scale default: dense 64 ReLU, dense 64 ReLU, dense output linear.
std::vector<LayerSpec> mlp_layers(int output_size);
/// Conv 20@3x3 s1 ReLU, conv 40@2x2 s1 ReLU, dense 180 ReLU, dense output.
std::vector<LayerSpec> paper_cnn_layers(int output_size);

}  // namespace jamrl
