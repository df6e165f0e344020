#include "jamrl/network.hpp"

#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace jamrl {

namespace {

std::vector<int> as_conv_shape(const std::vector<int>& shape) {
  if (shape.size() == 3) return shape;
  if (shape.size() == 2) return {1, shape[0], shape[1]};
  throw std::invalid_argument("conv layer requires a 2-D or 3-D input shape");
}

struct ConvDims {
  int in_c, in_h, in_w;
  int out_h, out_w;
  int patch;  // in_c * kh * kw
};

ConvDims conv_dims(const LayerSpec& spec, const std::vector<int>& in_shape) {
  const auto s = as_conv_shape(in_shape);
  ConvDims d{};
  d.in_c = s[0];
  d.in_h = s[1];
  d.in_w = s[2];
  if (d.in_h < spec.kernel_h || d.in_w < spec.kernel_w) {
    throw std::invalid_argument("conv kernel larger than its input");
  }
  d.out_h = (d.in_h - spec.kernel_h) / spec.stride + 1;
  d.out_w = (d.in_w - spec.kernel_w) / spec.stride + 1;
  d.patch = d.in_c * spec.kernel_h * spec.kernel_w;
  return d;
}

// Gather all kernel windows of `in` into a (patch x out_h*out_w) matrix.
Eigen::MatrixXd im2col(const Eigen::VectorXd& in, const LayerSpec& spec,
                       const ConvDims& d) {
  Eigen::MatrixXd patches(d.patch, d.out_h * d.out_w);
  for (int oy = 0; oy < d.out_h; ++oy) {
    for (int ox = 0; ox < d.out_w; ++ox) {
      const int col = oy * d.out_w + ox;
      int row = 0;
      for (int c = 0; c < d.in_c; ++c) {
        for (int ky = 0; ky < spec.kernel_h; ++ky) {
          const int y = oy * spec.stride + ky;
          for (int kx = 0; kx < spec.kernel_w; ++kx) {
            const int x = ox * spec.stride + kx;
            patches(row++, col) = in[(c * d.in_h + y) * d.in_w + x];
          }
        }
      }
    }
  }
  return patches;
}

// Scatter-add of patch gradients back onto the input layout.
void col2im_add(const Eigen::MatrixXd& dpatches, const LayerSpec& spec,
                const ConvDims& d, Eigen::VectorXd& din) {
  for (int oy = 0; oy < d.out_h; ++oy) {
    for (int ox = 0; ox < d.out_w; ++ox) {
      const int col = oy * d.out_w + ox;
      int row = 0;
      for (int c = 0; c < d.in_c; ++c) {
        for (int ky = 0; ky < spec.kernel_h; ++ky) {
          const int y = oy * spec.stride + ky;
          for (int kx = 0; kx < spec.kernel_w; ++kx) {
            const int x = ox * spec.stride + kx;
            din[(c * d.in_h + y) * d.in_w + x] += dpatches(row++, col);
          }
        }
      }
    }
  }
}

void apply_relu(Eigen::VectorXd& v) { v = v.cwiseMax(0.0); }

}  // namespace

Tensor::Tensor(std::vector<int> s)
    : shape(std::move(s)), data(Eigen::VectorXd::Zero(shape_numel(shape))) {}

Tensor::Tensor(std::vector<int> s, Eigen::VectorXd values)
    : shape(std::move(s)), data(std::move(values)) {
  if (shape_numel(shape) != static_cast<int>(data.size())) {
    throw std::invalid_argument("Tensor: data length does not match shape");
  }
}

int shape_numel(const std::vector<int>& shape) {
  int n = 1;
  for (int d : shape) n *= d;
  return n;
}

LayerSpec LayerSpec::conv(int filters, int kernel_h, int kernel_w, int stride,
                          bool relu) {
  if (filters < 1 || kernel_h < 1 || kernel_w < 1 || stride < 1) {
    throw std::invalid_argument("conv: filters, kernel dims and stride must be >= 1");
  }
  LayerSpec s;
  s.kind = Kind::conv;
  s.filters = filters;
  s.kernel_h = kernel_h;
  s.kernel_w = kernel_w;
  s.stride = stride;
  s.relu = relu;
  return s;
}

LayerSpec LayerSpec::dense(int units, bool relu) {
  if (units < 1) throw std::invalid_argument("dense: units must be >= 1");
  LayerSpec s;
  s.kind = Kind::dense;
  s.units = units;
  s.relu = relu;
  return s;
}

Network::Network(std::vector<LayerSpec> layers, std::vector<int> input_shape)
    : specs_(std::move(layers)), input_shape_(std::move(input_shape)) {
  if (specs_.empty()) throw std::invalid_argument("Network: needs at least one layer");
  if (input_shape_.empty() || shape_numel(input_shape_) < 1) {
    throw std::invalid_argument("Network: invalid input shape");
  }
  shapes_.push_back(input_shape_);
  for (const auto& spec : specs_) {
    const auto& in = shapes_.back();
    LayerParams p;
    if (spec.kind == LayerSpec::Kind::conv) {
      const ConvDims d = conv_dims(spec, in);
      if (d.out_h < 1 || d.out_w < 1) {
        throw std::invalid_argument("conv output collapsed to zero size");
      }
      p.weights = Eigen::MatrixXd::Zero(spec.filters, d.patch);
      p.bias = Eigen::VectorXd::Zero(spec.filters);
      shapes_.push_back({spec.filters, d.out_h, d.out_w});
    } else {
      const int fan_in = shape_numel(in);
      p.weights = Eigen::MatrixXd::Zero(spec.units, fan_in);
      p.bias = Eigen::VectorXd::Zero(spec.units);
      shapes_.push_back({spec.units});
    }
    params_.push_back(std::move(p));
  }
}

Network::Network(std::vector<LayerSpec> layers, std::vector<int> input_shape,
                 Rng& rng)
    : Network(std::move(layers), std::move(input_shape)) {
  for (auto& p : params_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(p.weights.cols()));
    for (Eigen::Index r = 0; r < p.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.weights.cols(); ++c) {
        p.weights(r, c) = (2.0 * rng.uniform() - 1.0) * bound;
      }
    }
    for (Eigen::Index i = 0; i < p.bias.size(); ++i) {
      p.bias[i] = (2.0 * rng.uniform() - 1.0) * bound;
    }
  }
}

int Network::output_size() const { return shape_numel(shapes_.back()); }

const std::vector<int>& Network::shape_before(std::size_t i) const {
  return shapes_.at(i);
}

GradientSet Network::zero_gradients() const {
  GradientSet g;
  g.layers.reserve(params_.size());
  for (const auto& p : params_) {
    g.layers.push_back({Eigen::MatrixXd::Zero(p.weights.rows(), p.weights.cols()),
                        Eigen::VectorXd::Zero(p.bias.size())});
  }
  return g;
}

bool Network::same_architecture(const Network& other) const {
  return specs_ == other.specs_ && input_shape_ == other.input_shape_;
}

namespace {

void check_input_shape(const Network& net, const Tensor& input) {
  const auto& expected = net.input_shape();
  if (input.numel() != shape_numel(expected)) {
    throw std::invalid_argument("forward: input has " +
                                std::to_string(input.numel()) +
                                " values, network expects " +
                                std::to_string(shape_numel(expected)));
  }
  if (net.layer_specs().front().kind == LayerSpec::Kind::conv) {
    // Spatial entry: the dims themselves must line up, not just the count.
    const auto got = as_conv_shape(input.shape);
    const auto want = as_conv_shape(expected);
    if (got != want) {
      throw std::invalid_argument("forward: conv input shape mismatch");
    }
  }
}

}  // namespace

struct ForwardCache {
  // acts[i] feeds layer i; acts.back() is the network output.
  std::vector<Eigen::VectorXd> acts;
  // Pre-ReLU values per layer (equal to the layer output when no ReLU).
  std::vector<Eigen::VectorXd> pre;

  static ForwardCache run(const Network& net, const Tensor& input) {
    check_input_shape(net, input);
    ForwardCache cache;
    cache.acts.push_back(input.data);
    for (std::size_t i = 0; i < net.specs_.size(); ++i) {
      const auto& spec = net.specs_[i];
      const auto& p = net.params_[i];
      const auto& in = cache.acts.back();
      Eigen::VectorXd z;
      if (spec.kind == LayerSpec::Kind::conv) {
        const ConvDims d = conv_dims(spec, net.shapes_[i]);
        const Eigen::MatrixXd patches = im2col(in, spec, d);
        Eigen::MatrixXd out = p.weights * patches;
        out.colwise() += p.bias;
        // Row f is already laid out as [oy * out_w + ox]; row-major flatten.
        z = Eigen::VectorXd(out.rows() * out.cols());
        for (Eigen::Index f = 0; f < out.rows(); ++f) {
          z.segment(f * out.cols(), out.cols()) = out.row(f).transpose();
        }
      } else {
        z = p.weights * in + p.bias;
      }
      cache.pre.push_back(z);
      if (spec.relu) apply_relu(z);
      cache.acts.push_back(std::move(z));
    }
    return cache;
  }
};

Eigen::VectorXd Network::forward(const Tensor& input) const {
  return ForwardCache::run(*this, input).acts.back();
}

LossResult loss_and_grad(const Network& net, std::span<const Tensor> inputs,
                         std::span<const int> action_indices,
                         std::span<const double> targets,
                         std::span<const double> weights) {
  const std::size_t m = inputs.size();
  if (m == 0 || action_indices.size() != m || targets.size() != m ||
      weights.size() != m) {
    throw std::invalid_argument("loss_and_grad: batch arguments must share length");
  }
  LossResult result;
  result.gradients = net.zero_gradients();
  result.td_errors.resize(m);
  const auto& specs = net.layer_specs();
  const auto& params = net.params();

  for (std::size_t s = 0; s < m; ++s) {
    const ForwardCache cache = ForwardCache::run(net, inputs[s]);
    const Eigen::VectorXd& q = cache.acts.back();
    const int a = action_indices[s];
    if (a < 0 || a >= q.size()) {
      throw std::invalid_argument("loss_and_grad: action index out of range");
    }
    const double psi = targets[s] - q[a];
    if (!std::isfinite(psi)) {
      throw std::runtime_error("loss_and_grad: non-finite TD error at sample " +
                               std::to_string(s));
    }
    result.td_errors[s] = psi;
    result.loss += weights[s] * psi * psi / static_cast<double>(m);

    // dL/dQ[a] = -2 w psi / m, zero elsewhere; targets are constants.
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(q.size());
    delta[a] = -2.0 * weights[s] * psi / static_cast<double>(m);

    for (int i = static_cast<int>(specs.size()) - 1; i >= 0; --i) {
      const auto& spec = specs[i];
      const auto& in = cache.acts[i];
      if (spec.relu) {
        delta = (cache.pre[i].array() > 0.0).select(delta, 0.0);
      }
      auto& g = result.gradients.layers[i];
      if (spec.kind == LayerSpec::Kind::conv) {
        const ConvDims d = conv_dims(spec, net.shape_before(i));
        const Eigen::MatrixXd patches = im2col(in, spec, d);
        Eigen::MatrixXd dmat(spec.filters, d.out_h * d.out_w);
        for (int f = 0; f < spec.filters; ++f) {
          dmat.row(f) = delta.segment(f * d.out_h * d.out_w, d.out_h * d.out_w)
                            .transpose();
        }
        g.weights += dmat * patches.transpose();
        g.bias += dmat.rowwise().sum();
        if (i > 0) {
          const Eigen::MatrixXd dpatches = params[i].weights.transpose() * dmat;
          Eigen::VectorXd din = Eigen::VectorXd::Zero(in.size());
          col2im_add(dpatches, spec, d, din);
          delta = std::move(din);
        }
      } else {
        g.weights += delta * in.transpose();
        g.bias += delta;
        if (i > 0) delta = params[i].weights.transpose() * delta;
      }
    }
  }
  if (!std::isfinite(result.loss)) {
    throw std::runtime_error("loss_and_grad: non-finite loss");
  }
  return result;
}

void sgd_step(Network& net, const GradientSet& gradients, double learning_rate) {
  auto& params = net.params();
  if (gradients.layers.size() != params.size()) {
    throw std::invalid_argument("sgd_step: gradient layer count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& g = gradients.layers[i];
    if (g.weights.rows() != params[i].weights.rows() ||
        g.weights.cols() != params[i].weights.cols() ||
        g.bias.size() != params[i].bias.size()) {
      throw std::invalid_argument("sgd_step: gradient shape mismatch");
    }
    params[i].weights -= learning_rate * g.weights;
    params[i].bias -= learning_rate * g.bias;
  }
}

void copy_from(Network& dst, const Network& src) {
  if (!dst.same_architecture(src)) {
    throw std::invalid_argument("copy_from: architecture mismatch");
  }
  dst.params() = src.params();
}

namespace {

void write_values(std::ostream& out, const double* values, Eigen::Index n) {
  out << std::hexfloat;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i) out << ' ';
    out << values[i];
  }
  out << '\n';
}

double read_value(std::istream& in) {
  std::string token;
  if (!(in >> token)) throw std::runtime_error("network file: truncated values");
  // iostream hexfloat extraction is unreliable; strtod handles both forms.
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str()) throw std::runtime_error("network file: bad value '" + token + "'");
  return v;
}

void expect_word(std::istream& in, const std::string& word) {
  std::string token;
  if (!(in >> token) || token != word) {
    throw std::runtime_error("network file: expected '" + word + "'");
  }
}

}  // namespace

void save_network(const Network& net, std::ostream& out) {
  out << "jamrl-net-v1\n";
  out << "input " << net.input_shape().size();
  for (int d : net.input_shape()) out << ' ' << d;
  out << '\n';
  out << "layers " << net.layer_specs().size() << '\n';
  for (const auto& spec : net.layer_specs()) {
    if (spec.kind == LayerSpec::Kind::conv) {
      out << "conv " << spec.filters << ' ' << spec.kernel_h << ' '
          << spec.kernel_w << ' ' << spec.stride << ' ' << (spec.relu ? 1 : 0)
          << '\n';
    } else {
      out << "dense " << spec.units << ' ' << (spec.relu ? 1 : 0) << '\n';
    }
  }
  for (const auto& p : net.params()) {
    out << "weights " << p.weights.rows() << ' ' << p.weights.cols() << '\n';
    for (Eigen::Index r = 0; r < p.weights.rows(); ++r) {
      Eigen::VectorXd row = p.weights.row(r).transpose();
      write_values(out, row.data(), row.size());
    }
    out << "bias " << p.bias.size() << '\n';
    write_values(out, p.bias.data(), p.bias.size());
  }
  out << "end\n";
}

Network load_network(std::istream& in) {
  expect_word(in, "jamrl-net-v1");
  expect_word(in, "input");
  std::size_t ndim = 0;
  in >> ndim;
  std::vector<int> input_shape(ndim);
  for (auto& d : input_shape) in >> d;
  expect_word(in, "layers");
  std::size_t count = 0;
  in >> count;
  std::vector<LayerSpec> specs;
  for (std::size_t i = 0; i < count; ++i) {
    std::string kind;
    in >> kind;
    if (kind == "conv") {
      int f, kh, kw, st, relu;
      in >> f >> kh >> kw >> st >> relu;
      specs.push_back(LayerSpec::conv(f, kh, kw, st, relu != 0));
    } else if (kind == "dense") {
      int units, relu;
      in >> units >> relu;
      specs.push_back(LayerSpec::dense(units, relu != 0));
    } else {
      throw std::runtime_error("network file: unknown layer kind '" + kind + "'");
    }
  }
  if (!in) throw std::runtime_error("network file: truncated header");
  Network net(std::move(specs), std::move(input_shape));
  for (auto& p : net.params()) {
    expect_word(in, "weights");
    Eigen::Index rows, cols;
    in >> rows >> cols;
    if (rows != p.weights.rows() || cols != p.weights.cols()) {
      throw std::runtime_error("network file: weight shape mismatch");
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) p.weights(r, c) = read_value(in);
    }
    expect_word(in, "bias");
    Eigen::Index n;
    in >> n;
    if (n != p.bias.size()) throw std::runtime_error("network file: bias size mismatch");
    for (Eigen::Index i = 0; i < n; ++i) p.bias[i] = read_value(in);
  }
  expect_word(in, "end");
  return net;
}

std::vector<LayerSpec> mlp_layers(int output_size) {
  return {LayerSpec::dense(64, true), LayerSpec::dense(64, true),
          LayerSpec::dense(output_size, false)};
}

std::vector<LayerSpec> paper_cnn_layers(int output_size) {
  return {LayerSpec::conv(20, 3, 3, 1, true), LayerSpec::conv(40, 2, 2, 1, true),
          LayerSpec::dense(180, true), LayerSpec::dense(output_size, false)};
}

}  // namespace jamrl
