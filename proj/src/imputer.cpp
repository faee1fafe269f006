#include "icl/imputer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace icl {

void GanConfig::validate() const {
  if (batch_size == 0) throw ConfigError("imputer: batch_size must be positive");
  if (d_steps == 0) throw ConfigError("imputer: d_steps must be positive");
  if (!(g_learning_rate > 0.0) || !(d_learning_rate > 0.0)) {
    throw ConfigError("imputer: learning rates must be positive");
  }
  for (std::size_t h : hidden)
    if (h == 0) throw ConfigError("imputer: hidden sizes must be positive");
}

std::vector<std::size_t> GanConfig::hidden_for(std::size_t d) const {
  if (!hidden.empty()) return hidden;
  return {2 * d, 2 * d};
}

Matrix generator_input(const Matrix& xbar_filled, const Mask& r, const Matrix& noise) {
  require_same_shape(xbar_filled, noise, "generator input");
  if (r.rows() != xbar_filled.rows() || r.cols() != xbar_filled.cols()) {
    throw ShapeError("generator input: mask shape differs from data");
  }
  const std::size_t n = xbar_filled.rows();
  const std::size_t d = xbar_filled.cols();
  Matrix in(n, 3 * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const bool obs = r.observed(i, j);
      in(i, j) = xbar_filled(i, j);
      in(i, d + j) = obs ? 1.0 : 0.0;
      in(i, 2 * d + j) = obs ? 0.0 : noise(i, j);
    }
  return in;
}

Matrix generate(const Generator& g, const Matrix& xbar_filled, const Mask& r, const Matrix& noise) {
  return g.net.forward(generator_input(xbar_filled, r, noise));
}

Matrix compose_imputed(const Matrix& observed, const Mask& r, const Matrix& xtilde) {
  require_same_shape(observed, xtilde, "compose_imputed");
  if (r.rows() != observed.rows() || r.cols() != observed.cols()) {
    throw ShapeError("compose_imputed: mask shape differs from data");
  }
  Matrix out = xtilde;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j)
      if (r.observed(i, j)) out(i, j) = observed(i, j);
  return out;
}

Matrix compose_imputed(const MaskedDataset& xbar, const Matrix& xtilde) {
  return compose_imputed(xbar.values, xbar.mask, xtilde);
}

namespace {

void require_mask_shape(const Matrix& m, const Mask& r) {
  if (r.rows() != m.rows() || r.cols() != m.cols()) throw ShapeError("mask shape differs from discriminator output");
}

}  // namespace

OutputLoss discriminator_loss(const Matrix& d_out, const Mask& r) {
  require_mask_shape(d_out, r);
  OutputLoss out{0.0, Matrix(d_out.rows(), d_out.cols())};
  const double count = static_cast<double>(d_out.size());
  if (count == 0.0) return out;
  const double lo = kDiscriminatorClamp;
  const double hi = 1.0 - kDiscriminatorClamp;
  for (std::size_t i = 0; i < d_out.rows(); ++i)
    for (std::size_t j = 0; j < d_out.cols(); ++j) {
      const double raw = d_out(i, j);
      const double p = std::clamp(raw, lo, hi);
      const bool clamped = raw < lo || raw > hi;
      if (r.observed(i, j)) {
        out.loss -= std::log(p);
        if (!clamped) out.wrt_output(i, j) = -1.0 / (p * count);
      } else {
        out.loss -= std::log(1.0 - p);
        if (!clamped) out.wrt_output(i, j) = 1.0 / ((1.0 - p) * count);
      }
    }
  out.loss /= count;
  return out;
}

OutputLoss generator_loss(const Matrix& d_out, const Mask& r) {
  require_mask_shape(d_out, r);
  OutputLoss out{0.0, Matrix(d_out.rows(), d_out.cols())};
  const double count = static_cast<double>(r.missing_count());
  if (count == 0.0) return out;
  const double lo = kDiscriminatorClamp;
  const double hi = 1.0 - kDiscriminatorClamp;
  for (std::size_t i = 0; i < d_out.rows(); ++i)
    for (std::size_t j = 0; j < d_out.cols(); ++j) {
      if (r.observed(i, j)) continue;
      const double raw = d_out(i, j);
      const double p = std::clamp(raw, lo, hi);
      out.loss -= std::log(p);
      if (raw >= lo && raw <= hi) out.wrt_output(i, j) = -1.0 / (p * count);
    }
  out.loss /= count;
  return out;
}

GanLosses gan_losses(const Discriminator& d, const Matrix& xhat, const Mask& r) {
  const Matrix out = d.net.forward(xhat);
  return {discriminator_loss(out, r).loss, generator_loss(out, r).loss};
}

AdversarialImputer::AdversarialImputer(std::size_t d, const GanConfig& config, RngStream& init_rng)
    : d_(d),
      config_(config),
      g_opt_(AdamConfig{config.g_learning_rate}),
      d_opt_(AdamConfig{config.d_learning_rate}) {
  config_.validate();
  if (d == 0) throw ShapeError("imputer needs at least one column");
  auto hidden = config_.hidden_for(d);
  std::vector<std::size_t> g_sizes{3 * d};
  g_sizes.insert(g_sizes.end(), hidden.begin(), hidden.end());
  g_sizes.push_back(d);
  std::vector<std::size_t> d_sizes{d};
  d_sizes.insert(d_sizes.end(), hidden.begin(), hidden.end());
  d_sizes.push_back(d);
  generator_.net = Mlp::initialized(g_sizes, Activation::tanh, Activation::identity, init_rng);
  discriminator_.net = Mlp::initialized(d_sizes, Activation::tanh, Activation::sigmoid, init_rng);
}

GanLosses AdversarialImputer::step(const Matrix& xbar_filled, const Mask& r, RngStream& rng,
                                   const ImputationFeedback* feedback, double feedback_weight) {
  if (xbar_filled.rows() == 0) throw DomainError("gan_step: empty batch");
  if (xbar_filled.cols() != d_) throw ShapeError("gan_step: batch has the wrong number of columns");
  const std::size_t n = xbar_filled.rows();
  ++iterations_;

  for (std::size_t k = 0; k < config_.d_steps; ++k) {
    const Matrix noise = sample(rng, Distribution::standard_normal(), n, d_);
    const Matrix xhat = compose_imputed(xbar_filled, r, generate(generator_, xbar_filled, r, noise));
    MlpTape tape;
    const Matrix d_out = discriminator_.net.forward(xhat, tape);
    const OutputLoss loss = discriminator_loss(d_out, r);
    MlpGradient grad = discriminator_.net.backward(tape, loss.wrt_output);
    const auto blocks = discriminator_.net.blocks("discriminator", grad);
    d_opt_.step(blocks);
  }

  const Matrix noise = sample(rng, Distribution::standard_normal(), n, d_);
  const Matrix g_in = generator_input(xbar_filled, r, noise);
  MlpTape g_tape;
  const Matrix xtilde = generator_.net.forward(g_in, g_tape);
  const Matrix xhat = compose_imputed(xbar_filled, r, xtilde);
  MlpTape d_tape;
  const Matrix d_out = discriminator_.net.forward(xhat, d_tape);
  const OutputLoss g_loss = generator_loss(d_out, r);
  Matrix xhat_grad = discriminator_.net.backward(d_tape, g_loss.wrt_output).input;
  if (feedback && feedback_weight != 0.0) {
    Matrix extra = (*feedback)(xhat);
    require_same_shape(extra, xhat_grad, "imputation feedback gradient");
    extra *= feedback_weight;
    xhat_grad += extra;
  }
  // Only the generated (missing) entries reach X-hat.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d_; ++j)
      if (r.observed(i, j)) xhat_grad(i, j) = 0.0;
  MlpGradient g_grad = generator_.net.backward(g_tape, xhat_grad);
  const auto g_blocks = generator_.net.blocks("generator", g_grad);
  g_opt_.step(g_blocks);

  const Matrix xhat_after = compose_imputed(xbar_filled, r, generator_.net.forward(g_in));
  const GanLosses losses = gan_losses(discriminator_, xhat_after, r);
  if (!std::isfinite(losses.d_loss) || !std::isfinite(losses.g_loss)) {
    throw TrainingError("gan_step: non-finite loss at iteration " + std::to_string(iterations_));
  }
  return losses;
}

Matrix AdversarialImputer::impute(const Matrix& xbar_filled, const Mask& r, RngStream& rng) const {
  const Matrix noise = sample(rng, Distribution::standard_normal(), xbar_filled.rows(), xbar_filled.cols());
  return compose_imputed(xbar_filled, r, generate(generator_, xbar_filled, r, noise));
}

}  // namespace icl
