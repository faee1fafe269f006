#include "icl/skeleton_learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace icl {

void StructureConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("structure: learning_rate must be positive");
  if (!(min_learning_rate > 0.0) || min_learning_rate > max_learning_rate) {
    throw ConfigError("structure: need 0 < min_learning_rate <= max_learning_rate");
  }
  if (batch_size == 0) throw ConfigError("structure: batch_size must be positive");
  if (!(c0 > 0.0)) throw ConfigError("structure: c0 must be positive");
  if (!(eta >= 1.0)) throw ConfigError("structure: eta must be at least 1");
  if (!(shrink > 0.0 && shrink <= 1.0)) throw ConfigError("structure: shrink must lie in (0, 1]");
  if (!(omega >= 0.0)) throw ConfigError("structure: omega must be non-negative");
  if (alpha < 0.0) throw ConfigError("structure: alpha must be positive (or 0 for 1/d)");
  if (l1_penalty < 0.0) throw ConfigError("structure: l1_penalty must be non-negative");
  if (feedback_weight < 0.0) throw ConfigError("structure: feedback_weight must be non-negative");
  for (std::size_t h : hidden)
    if (h == 0) throw ConfigError("structure: hidden sizes must be positive");
}

namespace {

std::vector<std::size_t> nodewise_sizes(const std::vector<std::size_t>& hidden) {
  std::vector<std::size_t> sizes{1};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

Mlp identity_map() {
  Mlp net({1, 1}, Activation::identity, Activation::identity);
  net.layers()[0].weight(0, 0) = 1.0;
  return net;
}

// Applies a 1 -> 1 network to every entry of an n x d matrix.
Matrix apply_nodewise(const Mlp& net, const Matrix& x, MlpTape& tape) {
  return net.forward(x.reshaped(x.size(), 1), tape).reshaped(x.rows(), x.cols());
}

Matrix i_minus(const Matrix& b) {
  Matrix a = b * -1.0;
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += 1.0;
  return a;
}

void check_solution(const Matrix& z, const Matrix& a, const Matrix& f) {
  const Matrix residual = matmul(z, a) - f;
  const double tol = 1e-6 * std::max(1.0, max_abs(f));
  if (!all_finite(z) || max_abs(residual) > tol) {
    throw NumericError("decode: (I - B) is singular or ill-conditioned (residual above 1e-6)");
  }
}

}  // namespace

StructureModel::StructureModel(Matrix b_, Mlp enc, Mlp dec)
    : b(std::move(b_)), encoder(std::move(enc)), decoder(std::move(dec)) {}

StructureModel::StructureModel(std::size_t d, const std::vector<std::size_t>& hidden, RngStream& rng,
                               bool learn_encoder)
    : b(d, d),
      encoder(learn_encoder ? Mlp::initialized(nodewise_sizes(hidden), Activation::tanh, Activation::identity, rng)
                            : identity_map()),
      decoder(Mlp::initialized(nodewise_sizes(hidden), Activation::tanh, Activation::identity, rng)) {
  if (d == 0) throw ShapeError("structure model needs at least one variable");
}

StructureModel StructureModel::identity(std::size_t d) {
  return StructureModel(Matrix(d, d), identity_map(), identity_map());
}

Matrix StructureModel::encode(const Matrix& xhat) const {
  if (xhat.cols() != size()) throw ShapeError("encode: data width does not match B");
  MlpTape tape;
  return matmul(apply_nodewise(encoder, xhat, tape), i_minus(b));
}

Matrix StructureModel::decode(const Matrix& fu) const {
  if (fu.cols() != size()) throw ShapeError("decode: latent width does not match B");
  const Matrix a = i_minus(b);
  const Matrix z = solve_right(fu, a);
  check_solution(z, a, fu);
  MlpTape tape;
  return apply_nodewise(decoder, z, tape);
}

ElboTerms elbo_loss(const StructureModel& model, const Matrix& xhat, const Matrix* noise) {
  const std::size_t n = xhat.rows();
  const std::size_t d = model.size();
  if (xhat.cols() != d) throw ShapeError("elbo_loss: data width does not match B");
  if (n == 0) throw DomainError("elbo_loss: empty batch");
  const double inv_n = 1.0 / static_cast<double>(n);

  const Matrix a = i_minus(model.b);
  MlpTape enc_tape, dec_tape;
  const Matrix h = apply_nodewise(model.encoder, xhat, enc_tape);
  const Matrix f = matmul(h, a);
  Matrix u = f;
  if (noise) {
    require_same_shape(*noise, f, "elbo_loss noise");
    u += *noise;
  }
  const LuDecomposition lu_at(transpose(a));
  if (lu_at.singular()) throw NumericError("elbo_loss: I - B is singular");
  const Matrix z = transpose(lu_at.solve(transpose(u)));
  check_solution(z, a, u);
  const Matrix y = apply_nodewise(model.decoder, z, dec_tape);

  ElboTerms out;
  Matrix g_y = y - xhat;
  for (double v : g_y.values()) out.reconstruction += 0.5 * v * v;
  for (double v : f.values()) out.kl += 0.5 * v * v;
  out.reconstruction *= inv_n;
  out.kl *= inv_n;
  out.loss = out.reconstruction + out.kl;
  if (!std::isfinite(out.loss)) throw NumericError("elbo_loss: non-finite loss");
  g_y *= inv_n;

  out.decoder = model.decoder.backward(dec_tape, g_y.reshaped(n * d, 1));
  const Matrix g_z = out.decoder.input.reshaped(n, d);
  // W = G_Z (I - B)^{-T}
  const LuDecomposition lu_a(a);
  const Matrix w = transpose(lu_a.solve(transpose(g_z)));
  Matrix g_f = w + f * inv_n;
  Matrix g_a = matmul_tn(h, g_f) - matmul_tn(z, w);
  const Matrix g_h = matmul_nt(g_f, a);
  out.encoder = model.encoder.backward(enc_tape, g_h.reshaped(n * d, 1));
  out.grad_input = g_y * -1.0 + out.encoder.input.reshaped(n, d);
  out.grad_b = g_a * -1.0;
  for (std::size_t i = 0; i < d; ++i) out.grad_b(i, i) = 0.0;
  return out;
}

void update_constraint(ConstraintState& state, double h_new, double h_previous, const StructureConfig& config) {
  state.lambda += state.c * h_new;
  if (h_new >= config.h_tol && h_new > config.shrink * h_previous) state.c = std::min(state.c * config.eta, config.c_max);
  state.h = h_new;
}

double effective_learning_rate(const StructureConfig& config, double c) {
  if (!config.scale_lr_with_penalty) return config.learning_rate;
  const double scaled = config.learning_rate / std::max(std::log10(c), 1e-10);
  return std::clamp(scaled, config.min_learning_rate, config.max_learning_rate);
}

StepReport constrained_step(StructureState& state, const Matrix& batch, const StructureConfig& config,
                            RngStream& rng) {
  if (!config.sample_latent) return constrained_step(state, elbo_loss(state.model, batch), config);
  const Matrix noise = sample(rng, Distribution::standard_normal(), batch.rows(), batch.cols());
  return constrained_step(state, elbo_loss(state.model, batch, &noise), config);
}

StepReport constrained_step(StructureState& state, const ElboTerms& elbo, const StructureConfig& config) {
  auto& model = state.model;
  const AcyclicityValue acyc = acyclicity_h_with_gradient(model.b, state.alpha);
  if (!std::isfinite(acyc.h) || !std::isfinite(elbo.loss)) {
    throw TrainingError("constrained_step: non-finite loss or constraint value");
  }
  const double coeff = state.constraint.lambda + state.constraint.c * acyc.h;
  Matrix grad_b = elbo.grad_b + acyc.gradient * coeff;
  double l1 = 0.0;
  for (std::size_t k = 0; k < grad_b.size(); ++k) {
    const double v = model.b.values()[k];
    l1 += std::abs(v);
    if (v != 0.0) grad_b.values()[k] += config.l1_penalty * (v > 0.0 ? 1.0 : -1.0);
  }
  for (std::size_t i = 0; i < grad_b.rows(); ++i) grad_b(i, i) = 0.0;

  std::vector<ParamBlock> blocks = model.decoder.blocks("decoder", elbo.decoder);
  if (config.learn_encoder) {
    auto enc_blocks = model.encoder.blocks("encoder", elbo.encoder);
    blocks.insert(blocks.end(), enc_blocks.begin(), enc_blocks.end());
  }
  blocks.push_back({"B", model.b.values(), grad_b.values()});
  state.optimizer.set_learning_rate(effective_learning_rate(config, state.constraint.c));
  state.optimizer.step(blocks);
  for (std::size_t i = 0; i < model.b.rows(); ++i) model.b(i, i) = 0.0;

  StepReport report;
  report.elbo = elbo.loss;
  report.h = acyc.h;
  report.objective = elbo.loss + config.l1_penalty * l1 + state.constraint.lambda * acyc.h + 0.5 * state.constraint.c * acyc.h * acyc.h;
  return report;
}

ColumnScaling observed_column_scaling(const MaskedDataset& data) {
  ColumnScaling s;
  const std::size_t d = data.cols();
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < data.rows(); ++i)
      if (data.mask.observed(i, j)) {
        sum += data.values(i, j);
        ++count;
      }
    if (count == 0) continue;
    const double mean = sum / static_cast<double>(count);
    double ss = 0.0;
    for (std::size_t i = 0; i < data.rows(); ++i)
      if (data.mask.observed(i, j)) ss += (data.values(i, j) - mean) * (data.values(i, j) - mean);
    s.mean[j] = mean;
    if (count > 1) {
      const double sd = std::sqrt(ss / static_cast<double>(count - 1));
      if (sd > 0.0 && std::isfinite(sd)) s.scale[j] = sd;
    }
  }
  return s;
}

namespace {

class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::size_t batch, RngStream rng)
      : order_(n), batch_(std::min(n, batch)), rng_(std::move(rng)) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    cursor_ = order_.size();
  }

  std::vector<std::size_t> next() {
    std::vector<std::size_t> out;
    out.reserve(batch_);
    while (out.size() < batch_) {
      if (cursor_ == order_.size()) {
        std::shuffle(order_.begin(), order_.end(), rng_.engine());
        cursor_ = 0;
      }
      out.push_back(order_[cursor_++]);
    }
    return out;
  }

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_;
  std::size_t cursor_ = 0;
  RngStream rng_;
};

Matrix standardize(const Matrix& x, const ColumnScaling& s) {
  Matrix out = x;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = (out(i, j) - s.mean[j]) / s.scale[j];
  return out;
}

Matrix destandardize(const Matrix& x, const ColumnScaling& s) {
  Matrix out = x;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = out(i, j) * s.scale[j] + s.mean[j];
  return out;
}

// Observed entries come back exactly, not through the scaling round trip.
Matrix restore_observed(Matrix xhat, const MaskedDataset& xbar) {
  for (std::size_t i = 0; i < xhat.rows(); ++i)
    for (std::size_t j = 0; j < xhat.cols(); ++j)
      if (xbar.mask.observed(i, j)) xhat(i, j) = xbar.values(i, j);
  return xhat;
}

void check_divergence(double value, const StructureConfig& config, const std::vector<HistoryEntry>& history,
                      const std::string& where) {
  if (!std::isfinite(value) || value > config.divergence_limit) {
    std::ostringstream os;
    os << "joint_train diverged during " << where << " (loss " << value << ")";
    throw JointTrainError(os.str(), history);
  }
}

}  // namespace

JointTrainResult joint_train(const MaskedDataset& xbar, const JointTrainConfig& config, std::uint64_t seed) {
  const std::size_t n = xbar.rows();
  const std::size_t d = xbar.cols();
  if (n < 2 || d < 2) throw DomainError("joint_train needs at least 2 rows and 2 columns");
  config.imputer.validate();
  const StructureConfig& sc = config.structure;
  sc.validate();

  const RngStream root(seed);
  RngStream fill_rng = root.split(1);
  RngStream gan_init_rng = root.split(2);
  RngStream gan_rng = root.split(3);
  RngStream model_rng = root.split(4);
  RngStream impute_rng = root.split(6);
  RngStream latent_rng = root.split(7);

  JointTrainResult result;
  result.scaling = observed_column_scaling(xbar);
  if (!sc.standardize) std::fill(result.scaling.scale.begin(), result.scaling.scale.end(), 1.0);
  const MaskedDataset scaled{standardize(xbar.values, result.scaling), xbar.mask};
  const Matrix filled = init_fill(scaled, fill_rng);
  const bool has_missing = xbar.mask.missing_count() > 0;

  StructureState state{StructureModel(d, sc.hidden, model_rng, sc.learn_encoder), Adam(AdamConfig{sc.learning_rate}),
                       ConstraintState{sc.lambda0, sc.c0, 0.0}, sc.alpha_for(d)};

  if (sc.max_outer == 0) {
    result.xhat = restore_observed(destandardize(filled, result.scaling), xbar);
    result.b = WeightedDigraph(state.model.b);
    result.skeleton = Skeleton(d);
    result.converged = true;
    return result;
  }

  AdversarialImputer imputer(d, config.imputer, gan_init_rng);
  BatchSampler batches(n, std::max(config.imputer.batch_size, sc.batch_size), root.split(5));
  const std::size_t structure_batch = std::min(n, sc.batch_size);
  const std::size_t gan_batch = std::min(n, config.imputer.batch_size);

  const bool interleaved = config.schedule == TrainingSchedule::interleaved;
  Matrix frozen = filled;

  if (!interleaved && has_missing) {
    for (std::size_t outer = 0; outer < sc.max_outer; ++outer) {
      GanLosses losses;
      for (std::size_t inner = 0; inner < sc.inner_steps; ++inner) {
        auto rows = batches.next();
        rows.resize(gan_batch);
        const Matrix xb = filled.select_rows(rows);
        const Mask rb = xbar.mask.select_rows(rows);
        losses = imputer.step(xb, rb, gan_rng);
      }
      HistoryEntry e;
      e.stage = "gan";
      e.outer = outer;
      e.d_loss = losses.d_loss;
      e.g_loss = losses.g_loss;
      result.history.push_back(e);
    }
    frozen = imputer.impute(filled, xbar.mask, impute_rng);
  }

  const ImputationFeedback feedback = [&state, &latent_rng, &sc](const Matrix& xhat) {
    if (!sc.sample_latent) return elbo_loss(state.model, xhat).grad_input;
    const Matrix noise = sample(latent_rng, Distribution::standard_normal(), xhat.rows(), xhat.cols());
    return elbo_loss(state.model, xhat, &noise).grad_input;
  };
  // One fixed latent draw so the full-data loss is comparable across outer iterations.
  const Matrix eval_noise = sample(latent_rng, Distribution::standard_normal(), n, d);
  const bool joint_imputation = interleaved && has_missing;

  double previous_loss = std::numeric_limits<double>::quiet_NaN();
  double h_previous = acyclicity_h(state.model.b, state.alpha);
  for (std::size_t outer = 0; outer < sc.max_outer; ++outer) {
    GanLosses losses;
    const double lr = effective_learning_rate(sc, state.constraint.c);
    for (std::size_t inner = 0; inner < sc.inner_steps; ++inner) {
      const auto rows = batches.next();
      const std::vector<std::size_t> srows(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(structure_batch));
      Matrix xhat_batch;
      if (joint_imputation) {
        // Step 1: impute the batch with the current generator.
        const Matrix xb = filled.select_rows(srows);
        const Mask rb = xbar.mask.select_rows(srows);
        xhat_batch = imputer.impute(xb, rb, gan_rng);
        // Step 4: adversarial update, optionally pulled toward the structure model.
        const std::vector<std::size_t> grows(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(gan_batch));
        const Matrix gxb = filled.select_rows(grows);
        const Mask grb = xbar.mask.select_rows(grows);
        losses = imputer.step(gxb, grb, gan_rng, &feedback, sc.feedback_weight);
      } else {
        xhat_batch = frozen.select_rows(srows);
      }
      // Steps 2 and 5: structure pass and constrained update.
      const StepReport report = constrained_step(state, xhat_batch, sc, latent_rng);
      check_divergence(report.elbo, sc, result.history, "structure learning");
      check_divergence(losses.d_loss + losses.g_loss, sc, result.history, "imputation");
    }

    const Matrix xhat_full = joint_imputation ? [&] { RngStream r = impute_rng.split(outer); return imputer.impute(filled, xbar.mask, r); }() : frozen;
    const double loss = elbo_loss(state.model, xhat_full, sc.sample_latent ? &eval_noise : nullptr).loss;
    const double h_new = acyclicity_h(state.model.b, state.alpha);
    check_divergence(loss, sc, result.history, "structure learning");
    update_constraint(state.constraint, h_new, h_previous, sc);
    h_previous = h_new;

    HistoryEntry e;
    e.stage = interleaved ? "joint" : "structure";
    e.outer = outer;
    e.elbo = loss;
    e.h = h_new;
    e.lambda = state.constraint.lambda;
    e.c = state.constraint.c;
    e.d_loss = losses.d_loss;
    e.g_loss = losses.g_loss;
    e.learning_rate = lr;
    result.history.push_back(e);

    const bool settled = std::isfinite(previous_loss) &&
                         std::abs(loss - previous_loss) <= sc.loss_rtol * std::max(std::abs(previous_loss), 1e-12);
    previous_loss = loss;
    if (h_new < sc.h_tol && settled) break;
  }

  Matrix xhat = joint_imputation ? imputer.impute(filled, xbar.mask, impute_rng) : frozen;
  result.xhat = restore_observed(destandardize(xhat, result.scaling), xbar);
  result.b = WeightedDigraph(state.model.b);
  result.final_h = acyclicity_h(state.model.b, state.alpha);
  result.converged = result.final_h < sc.h_tol;
  result.skeleton = skeleton_of(threshold_edges(result.b, sc.omega));
  return result;
}

}  // namespace icl
