#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "icl/graph.hpp"
#include "icl/mlp.hpp"
#include "icl/numeric.hpp"

namespace icl {

struct DirectionConfig {
  std::size_t latent_dim = 1;
  std::size_t hidden = 16;
  std::size_t steps = 1000;
  std::size_t batch_size = 256;
  double learning_rate = 1e-2;
  std::size_t eval_samples = 16;
  // Tolerance for the "not determined" branch, as a multiple of the standard
  // error of the per-sample score difference.
  double delta_factor = 0.05;
  std::size_t min_samples = 30;

  void validate() const;
};

// Latent-variable additive-noise model for cause -> effect:
//   effect = f(cause) + g(z) + N(0, sigma^2),  z ~ N(0, I),
// with a Gaussian encoder q(z | cause, effect).
struct CanmModel {
  Mlp f;        // 1 -> hidden -> 1
  Mlp g;        // latent -> hidden -> 1
  Mlp encoder;  // 2 -> hidden -> 2 * latent (mean, log-variance)
  double log_sigma = 0.0;

  static CanmModel initialized(const DirectionConfig& config, RngStream& rng);
  std::size_t latent_dim() const { return g.input_size(); }
};

// Per-row ELBO of log p(effect | cause) averaged over the given latent draws
// (one n x latent matrix of standard normals per draw).
std::vector<double> conditional_elbo(const CanmModel& model, std::span<const double> cause,
                                     std::span<const double> effect, std::span<const Matrix> eps);

// Leave-one-out Gaussian kernel density log p(x_m) with Silverman's bandwidth.
std::vector<double> loo_kde_log_density(std::span<const double> x);

struct DirectionalScore {
  double score = 0.0;                 // mean over rows
  std::vector<double> per_sample;  // in the caller's row order
};

// Evidence for cause -> effect: the cause marginal plus the conditional ELBO,
// per row, after standardizing both inputs.
DirectionalScore directional_score(std::span<const double> cause, std::span<const double> effect,
                                   const DirectionConfig& config, std::uint64_t seed);

double pair_score(std::span<const double> x_i, std::span<const double> x_j, const DirectionConfig& config,
                  std::uint64_t seed);

enum class Decision { forward, backward, undetermined };

std::string to_string(Decision d);

// forward if s_ij - s_ji > delta, backward if s_ji - s_ij > delta.
Decision decide_direction(double s_ij, double s_ji, double delta);

struct PairScore {
  std::size_t i = 0;
  std::size_t j = 0;
  double s_ij = 0.0;
  double s_ji = 0.0;
  double delta = 0.0;
  Decision decision = Decision::undetermined;
  // Orientation taken from an insignificant score difference.
  bool flagged = false;
};

struct Orientation {
  Digraph graph{1};
  EdgeScores scores;
  std::vector<PairScore> pairs;
};

Orientation orient_skeleton(const Skeleton& skeleton, const Matrix& xhat, const DirectionConfig& config,
                            std::uint64_t seed);

// Removes the lowest-scoring edge of every cycle until the graph is acyclic.
Digraph finalize_dag(const Digraph& g, const EdgeScores& scores);

void write_pair_scores(std::ostream& out, const std::vector<PairScore>& pairs);

}  // namespace icl
