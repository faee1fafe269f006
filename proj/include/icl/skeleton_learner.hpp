#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "icl/graph.hpp"
#include "icl/imputer.hpp"
#include "icl/missingness.hpp"
#include "icl/mlp.hpp"
#include "icl/numeric.hpp"

namespace icl {

struct StructureConfig {
  // Hidden widths of the per-variable encoder/decoder networks; empty gives a
  // single affine 1 -> 1 map.
  std::vector<std::size_t> hidden{16};
  double learning_rate = 1e-3;
  // Effective step size lr / log10(c), clipped to [min_lr, max_lr]; off by
  // default, the step stays at learning_rate.
  bool scale_lr_with_penalty = false;
  double min_learning_rate = 1e-4;
  double max_learning_rate = 1e-2;
  std::size_t batch_size = 128;
  std::size_t inner_steps = 300;
  std::size_t max_outer = 20;
  double lambda0 = 0.0;
  double c0 = 1.0;
  double eta = 10.0;
  double shrink = 0.25;
  double c_max = 1e16;
  double h_tol = 1e-8;
  double loss_rtol = 1e-6;
  double alpha = 0.0;  // 0 selects 1/d
  double omega = 0.3;
  // Weight of the structure loss in the generator objective during joint
  // training; 0 trains the imputer on its adversarial loss only.
  double feedback_weight = 1.0;
  double divergence_limit = 1e6;
  // Weight of the L1 penalty |B|_1 added to the objective.
  double l1_penalty = 0.1;
  // A trainable encoder can shrink f(U) toward zero and hand all the
  // reconstruction to the decoder; by default it stays the identity map.
  bool learn_encoder = false;
  // Feed the decoder U = f(U) + N(0, I) instead of the posterior mean.
  bool sample_latent = false;
  // Divide each column by its observed standard deviation before training;
  // off leaves the columns centered only.
  bool standardize = false;

  void validate() const;
  double alpha_for(std::size_t d) const { return alpha > 0.0 ? alpha : 1.0 / static_cast<double>(d); }
};

// Encoder/decoder pair sharing the adjacency B. The networks act on each
// variable separately (shared weights), so cross-variable structure can only
// flow through B.
class StructureModel {
 public:
  StructureModel(std::size_t d, const std::vector<std::size_t>& hidden, RngStream& rng, bool learn_encoder = true);
  // Both networks are the identity map 1 -> 1.
  static StructureModel identity(std::size_t d);

  std::size_t size() const { return b.rows(); }

  // f(U) = MLP(X) (I - B), the row form of (I - B^T) MLP(X).
  Matrix encode(const Matrix& xhat) const;
  // MLP(f(U) (I - B)^{-1}).
  Matrix decode(const Matrix& fu) const;

  Matrix b;
  Mlp encoder;
  Mlp decoder;

 private:
  StructureModel(Matrix b, Mlp enc, Mlp dec);
};

struct ElboTerms {
  double loss = 0.0;
  double reconstruction = 0.0;
  double kl = 0.0;
  Matrix grad_b;
  MlpGradient encoder;
  MlpGradient decoder;
  Matrix grad_input;
};

// Negative ELBO per row: 0.5 |X - X~|^2 (unit-variance decoder) plus
// KL(N(f(U), I) || N(0, I)) = 0.5 |f(U)|^2, with gradients. The decoder sees
// the reparameterized draw U = f(U) + noise; without noise it sees f(U).
ElboTerms elbo_loss(const StructureModel& model, const Matrix& xhat, const Matrix* noise = nullptr);

struct ConstraintState {
  double lambda = 0.0;
  double c = 1.0;
  double h = 0.0;
};

// Augmented-Lagrangian multiplier update at an outer-loop boundary. c grows
// by eta only while h is above h_tol and shrank by less than `shrink`.
void update_constraint(ConstraintState& state, double h_new, double h_previous, const StructureConfig& config);

struct StructureState {
  StructureModel model;
  Adam optimizer;
  ConstraintState constraint;
  double alpha = 0.0;
};

struct StepReport {
  double elbo = 0.0;
  double h = 0.0;
  double objective = 0.0;
};

// One optimizer step on ELBO + l1 |B|_1 + lambda h + (c / 2) h^2 over the
// decoder, B and (when trainable) the encoder.
StepReport constrained_step(StructureState& state, const Matrix& batch, const StructureConfig& config,
                            RngStream& rng);
StepReport constrained_step(StructureState& state, const ElboTerms& elbo, const StructureConfig& config);

double effective_learning_rate(const StructureConfig& config, double c);

struct HistoryEntry {
  std::string stage;  // "joint", "gan" or "structure"
  std::size_t outer = 0;
  double elbo = 0.0;
  double h = 0.0;
  double lambda = 0.0;
  double c = 0.0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double learning_rate = 0.0;
};

class JointTrainError : public TrainingError {
 public:
  JointTrainError(const std::string& what, std::vector<HistoryEntry> history)
      : TrainingError(what), history_(std::move(history)) {}
  const std::vector<HistoryEntry>& history() const { return history_; }

 private:
  std::vector<HistoryEntry> history_;
};

enum class TrainingSchedule {
  interleaved,          // imputer and structure updated in every inner step
  impute_then_discover  // imputer to completion, then structure on frozen X-hat
};

struct JointTrainConfig {
  GanConfig imputer;
  StructureConfig structure;
  TrainingSchedule schedule = TrainingSchedule::interleaved;
};

struct ColumnScaling {
  std::vector<double> mean;
  std::vector<double> scale;
};

ColumnScaling observed_column_scaling(const MaskedDataset& data);

struct JointTrainResult {
  Skeleton skeleton;
  Matrix xhat;  // original units
  WeightedDigraph b{1};
  std::vector<HistoryEntry> history;
  ColumnScaling scaling;
  bool converged = false;
  double final_h = 0.0;
};

JointTrainResult joint_train(const MaskedDataset& xbar, const JointTrainConfig& config, std::uint64_t seed);

}  // namespace icl
