#include "icl/mlp.hpp"

#include <algorithm>
#include <cmath>

namespace icl {

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::identity:
      return z;
    case Activation::tanh:
      return std::tanh(z);
    case Activation::relu:
      return z > 0.0 ? z : 0.0;
    case Activation::sigmoid:
      return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  }
  return z;
}

// Derivative expressed through the activation's output y.
double activation_slope(Activation a, double y) {
  switch (a) {
    case Activation::identity:
      return 1.0;
    case Activation::tanh:
      return 1.0 - y * y;
    case Activation::relu:
      return y > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid:
      return y * (1.0 - y);
  }
  return 1.0;
}

}  // namespace

MlpGradient& MlpGradient::operator+=(const MlpGradient& o) {
  if (layers.size() != o.layers.size()) throw ShapeError("gradient layer counts differ");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].weight += o.layers[l].weight;
    layers[l].bias += o.layers[l].bias;
  }
  if (!input.empty() && !o.input.empty()) input += o.input;
  return *this;
}

MlpGradient& MlpGradient::operator*=(double s) {
  for (auto& l : layers) {
    l.weight *= s;
    l.bias *= s;
  }
  input *= s;
  return *this;
}

Mlp::Mlp(std::vector<std::size_t> sizes, Activation hidden, Activation output)
    : sizes_(std::move(sizes)), hidden_(hidden), output_(output) {
  if (sizes_.size() < 2) throw ShapeError("an MLP needs at least an input and an output size");
  for (std::size_t s : sizes_) {
    if (s == 0) throw ShapeError("MLP layer sizes must be positive");
  }
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    layers_.push_back({Matrix(sizes_[l], sizes_[l + 1]), Matrix(1, sizes_[l + 1])});
  }
}

Mlp Mlp::initialized(std::vector<std::size_t> sizes, Activation hidden, Activation output,
                     RngStream& rng) {
  Mlp net(std::move(sizes), hidden, output);
  for (auto& layer : net.layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.rows()));
    layer.weight = sample(rng, Distribution::uniform(-bound, bound), layer.weight.rows(),
                          layer.weight.cols());
  }
  return net;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

Matrix Mlp::forward(const Matrix& x) const {
  MlpTape tape;
  return forward(x, tape);
}

Matrix Mlp::forward(const Matrix& x, MlpTape& tape) const {
  if (x.cols() != input_size()) {
    throw ShapeError("mlp_forward: input has " + std::to_string(x.cols()) + " columns, network expects " +
                     std::to_string(input_size()));
  }
  tape.inputs.clear();
  tape.outputs.clear();
  Matrix h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    Matrix z = matmul(h, layer.weight);
    const Activation act = (l + 1 == layers_.size()) ? output_ : hidden_;
    for (std::size_t i = 0; i < z.rows(); ++i) {
      auto row = z.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] = activate(act, row[j] + layer.bias(0, j));
    }
    tape.inputs.push_back(std::move(h));
    h = z;
    tape.outputs.push_back(std::move(z));
  }
  return h;
}

MlpGradient Mlp::backward(const MlpTape& tape, const Matrix& upstream) const {
  if (tape.outputs.size() != layers_.size()) throw ShapeError("mlp_backward: tape does not match network");
  require_same_shape(upstream, tape.outputs.back(), "mlp_backward upstream gradient");
  MlpGradient grad;
  grad.layers.resize(layers_.size());
  Matrix g = upstream;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Activation act = (l + 1 == layers_.size()) ? output_ : hidden_;
    const Matrix& y = tape.outputs[l];
    if (act != Activation::identity) {
      auto gv = g.values();
      auto yv = y.values();
      for (std::size_t i = 0; i < gv.size(); ++i) gv[i] *= activation_slope(act, yv[i]);
    }
    grad.layers[l].weight = matmul_tn(tape.inputs[l], g);
    grad.layers[l].bias = column_sums(g);
    g = matmul_nt(g, layers_[l].weight);
  }
  grad.input = std::move(g);
  return grad;
}

std::vector<ParamBlock> Mlp::blocks(const std::string& prefix, const MlpGradient& grad) {
  if (grad.layers.size() != layers_.size()) throw ShapeError("gradient does not match network " + prefix);
  std::vector<ParamBlock> out;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    out.push_back({prefix + ".W" + std::to_string(l), layers_[l].weight.values(), grad.layers[l].weight.values()});
    out.push_back({prefix + ".b" + std::to_string(l), layers_[l].bias.values(), grad.layers[l].bias.values()});
  }
  return out;
}

std::vector<double> Mlp::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& l : layers_) {
    flat.insert(flat.end(), l.weight.values().begin(), l.weight.values().end());
    flat.insert(flat.end(), l.bias.values().begin(), l.bias.values().end());
  }
  return flat;
}

void Mlp::unflatten(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw ShapeError("unflatten: parameter count mismatch");
  std::size_t k = 0;
  for (auto& l : layers_) {
    for (double& v : l.weight.values()) v = flat[k++];
    for (double& v : l.bias.values()) v = flat[k++];
  }
}

MlpGradient zero_gradient_like(const Mlp& net, std::size_t batch_rows) {
  MlpGradient g;
  for (const auto& l : net.layers()) {
    g.layers.push_back({Matrix(l.weight.rows(), l.weight.cols()), Matrix(1, l.bias.cols())});
  }
  g.input = Matrix(batch_rows, net.input_size());
  return g;
}

}  // namespace icl
