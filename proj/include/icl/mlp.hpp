#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "icl/numeric.hpp"

namespace icl {

enum class Activation { identity, tanh, relu, sigmoid };

// y = x * weight + bias, weight is (in x out), bias is (1 x out).
struct DenseLayer {
  Matrix weight;
  Matrix bias;
};

// Intermediate values kept by a forward pass so backward() can reuse them.
struct MlpTape {
  std::vector<Matrix> inputs;   // input to each layer
  std::vector<Matrix> outputs;  // post-activation output of each layer
};

struct MlpGradient {
  std::vector<DenseLayer> layers;
  Matrix input;

  MlpGradient& operator+=(const MlpGradient& o);
  MlpGradient& operator*=(double s);
};

// Fully connected network with one hidden activation shared by every hidden
// layer and a separate output activation.
class Mlp {
 public:
  Mlp() = default;
  // All parameters zero.
  Mlp(std::vector<std::size_t> sizes, Activation hidden, Activation output);
  // Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
  static Mlp initialized(std::vector<std::size_t> sizes, Activation hidden, Activation output,
                         RngStream& rng);

  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  const std::vector<std::size_t>& sizes() const { return sizes_; }
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::size_t parameter_count() const;

  Matrix forward(const Matrix& x) const;
  Matrix forward(const Matrix& x, MlpTape& tape) const;
  MlpGradient backward(const MlpTape& tape, const Matrix& upstream) const;

  // Parameter/gradient blocks in a fixed order, names prefixed with `prefix`.
  std::vector<ParamBlock> blocks(const std::string& prefix, const MlpGradient& grad);

  // Flat copy of every parameter (weights then bias, layer by layer).
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);

 private:
  std::vector<std::size_t> sizes_;
  Activation hidden_ = Activation::tanh;
  Activation output_ = Activation::identity;
  std::vector<DenseLayer> layers_;
};

MlpGradient zero_gradient_like(const Mlp& net, std::size_t batch_rows);

}  // namespace icl
