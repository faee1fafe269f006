#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "icl/missingness.hpp"
#include "icl/mlp.hpp"
#include "icl/numeric.hpp"

namespace icl {

struct GanConfig {
  std::vector<std::size_t> hidden;  // empty: two layers of width 2d
  double g_learning_rate = 1e-3;
  double d_learning_rate = 1e-3;
  std::size_t batch_size = 128;
  std::size_t d_steps = 1;

  void validate() const;
  std::vector<std::size_t> hidden_for(std::size_t d) const;
};

// Discriminator outputs are clamped to [eps, 1 - eps] before taking logs.
inline constexpr double kDiscriminatorClamp = 1e-7;

// Maps [values | mask | masked noise] (n x 3d) to a full proposal (n x d).
struct Generator {
  Mlp net;
};

// Maps an imputed matrix (n x d) to per-entry observation probabilities.
struct Discriminator {
  Mlp net;
};

Matrix generator_input(const Matrix& xbar_filled, const Mask& r, const Matrix& noise);
Matrix generate(const Generator& g, const Matrix& xbar_filled, const Mask& r, const Matrix& noise);

// Observed entries from `observed`, missing ones from `xtilde`.
Matrix compose_imputed(const Matrix& observed, const Mask& r, const Matrix& xtilde);
Matrix compose_imputed(const MaskedDataset& xbar, const Matrix& xtilde);

struct GanLosses {
  double d_loss = 0.0;
  double g_loss = 0.0;
};

GanLosses gan_losses(const Discriminator& d, const Matrix& xhat, const Mask& r);

// Loss value and its derivative with respect to the discriminator output.
struct OutputLoss {
  double loss = 0.0;
  Matrix wrt_output;
};
// -mean over all entries of [r log D + (1 - r) log(1 - D)].
OutputLoss discriminator_loss(const Matrix& d_out, const Mask& r);
// -mean over missing entries of log D (non-saturating generator loss).
OutputLoss generator_loss(const Matrix& d_out, const Mask& r);

// Derivative of an extra generator objective with respect to the imputed
// matrix it produced; used to let a downstream model shape the imputations.
using ImputationFeedback = std::function<Matrix(const Matrix& xhat)>;

class AdversarialImputer {
 public:
  AdversarialImputer(std::size_t d, const GanConfig& config, RngStream& init_rng);

  // One training step on a batch: d_steps discriminator updates on a frozen
  // generator, then one generator update on the frozen discriminator.
  GanLosses step(const Matrix& xbar_filled, const Mask& r, RngStream& rng,
                 const ImputationFeedback* feedback = nullptr, double feedback_weight = 0.0);

  // X-hat for the given rows using fresh generator noise.
  Matrix impute(const Matrix& xbar_filled, const Mask& r, RngStream& rng) const;

  Generator& generator() { return generator_; }
  const Generator& generator() const { return generator_; }
  Discriminator& discriminator() { return discriminator_; }
  const Discriminator& discriminator() const { return discriminator_; }
  std::size_t iterations() const { return iterations_; }

 private:
  std::size_t d_;
  GanConfig config_;
  Generator generator_;
  Discriminator discriminator_;
  Adam g_opt_;
  Adam d_opt_;
  std::size_t iterations_ = 0;
};

}  // namespace icl
