#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "icl/graph.hpp"
#include "icl/numeric.hpp"

namespace icl {

enum class Mechanism { linear, nonlinear1, nonlinear2 };
enum class NoiseKind { gaussian, exponential, gumbel };

std::string to_string(Mechanism m);
std::string to_string(NoiseKind n);
Mechanism parse_mechanism(const std::string& s);
NoiseKind parse_noise(const std::string& s);

struct SemSpec {
  std::size_t d = 10;
  double s = 2.0;  // expected neighbour count
  std::size_t n = 1000;
  Mechanism mechanism = Mechanism::nonlinear1;
  NoiseKind noise = NoiseKind::exponential;
  double weight_low = 0.5;
  double weight_high = 2.0;

  void validate() const;
};

struct GroundTruth {
  WeightedDigraph graph;
  // Sampling order; the graph is strictly upper triangular under it.
  std::vector<std::size_t> order;

  Digraph structure() const { return support_of(graph.weights()); }
};

// Erdos-Renyi DAG: each pair, ordered by a random permutation, gets an edge
// with probability s / (d - 1). Edge weights are 1.
GroundTruth sample_er_dag(std::size_t d, double s, RngStream& rng);

// Replaces every edge weight with a draw from U(-high, -low] u U[low, high).
GroundTruth assign_weights(GroundTruth topology, RngStream& rng, double low = 0.5, double high = 2.0);

// Noise with zero mean and unit variance from the requested family.
Matrix standardized_noise(NoiseKind kind, std::size_t rows, std::size_t cols, RngStream& rng);

// Ancestral sampling of n rows from the structural equation model.
Matrix sample_sem(const GroundTruth& gt, const SemSpec& spec, RngStream& rng);

}  // namespace icl
