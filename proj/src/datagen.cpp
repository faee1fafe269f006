#include "icl/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace icl {

std::string to_string(Mechanism m) {
  switch (m) {
    case Mechanism::linear:
      return "linear";
    case Mechanism::nonlinear1:
      return "nonlinear1";
    case Mechanism::nonlinear2:
      return "nonlinear2";
  }
  return "?";
}

std::string to_string(NoiseKind n) {
  switch (n) {
    case NoiseKind::gaussian:
      return "gaussian";
    case NoiseKind::exponential:
      return "exponential";
    case NoiseKind::gumbel:
      return "gumbel";
  }
  return "?";
}

Mechanism parse_mechanism(const std::string& s) {
  if (s == "linear") return Mechanism::linear;
  if (s == "nonlinear1") return Mechanism::nonlinear1;
  if (s == "nonlinear2") return Mechanism::nonlinear2;
  throw ConfigError("unknown mechanism '" + s + "' (linear, nonlinear1, nonlinear2)");
}

NoiseKind parse_noise(const std::string& s) {
  if (s == "gaussian") return NoiseKind::gaussian;
  if (s == "exponential") return NoiseKind::exponential;
  if (s == "gumbel") return NoiseKind::gumbel;
  throw ConfigError("unknown noise '" + s + "' (gaussian, exponential, gumbel)");
}

void SemSpec::validate() const {
  if (d < 2) throw ConfigError("sem: d must be at least 2");
  if (n < 1) throw ConfigError("sem: n must be at least 1");
  if (!(s > 0.0)) throw ConfigError("sem: expected neighbour size s must be positive");
  if (!(s < static_cast<double>(d))) throw ConfigError("sem: expected neighbour size s must be below d");
  if (!(weight_low > 0.0 && weight_low < weight_high)) throw ConfigError("sem: need 0 < weight_low < weight_high");
}

GroundTruth sample_er_dag(std::size_t d, double s, RngStream& rng) {
  if (d < 2) throw ConfigError("sample_er_dag: d must be at least 2");
  if (!(s > 0.0) || s >= static_cast<double>(d)) {
    throw ConfigError("sample_er_dag: need 0 < s < d");
  }
  const double p = s / static_cast<double>(d - 1);
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng.engine());
  WeightedDigraph g(d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a + 1; b < d; ++b)
      if (rng.uniform() < p) g.set_weight(order[a], order[b], 1.0);
  return {std::move(g), std::move(order)};
}

GroundTruth assign_weights(GroundTruth topology, RngStream& rng, double low, double high) {
  if (!is_acyclic(topology.structure())) throw DomainError("assign_weights: topology has a cycle");
  const std::size_t d = topology.graph.size();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      if (topology.graph.weight(i, j) == 0.0) continue;
      const double magnitude = low + (high - low) * rng.uniform();
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      topology.graph.set_weight(i, j, sign * magnitude);
    }
  return topology;
}

Matrix standardized_noise(NoiseKind kind, std::size_t rows, std::size_t cols, RngStream& rng) {
  switch (kind) {
    case NoiseKind::gaussian:
      return sample(rng, Distribution::standard_normal(), rows, cols);
    case NoiseKind::exponential: {
      Matrix u = sample(rng, Distribution::exponential(1.0), rows, cols);
      for (double& v : u.values()) v -= 1.0;
      return u;
    }
    case NoiseKind::gumbel: {
      Matrix u = sample(rng, Distribution::gumbel(0.0, 1.0), rows, cols);
      const double scale = std::numbers::pi / std::sqrt(6.0);
      for (double& v : u.values()) v = (v - std::numbers::egamma) / scale;
      return u;
    }
  }
  throw ConfigError("unknown noise kind");
}

Matrix sample_sem(const GroundTruth& gt, const SemSpec& spec, RngStream& rng) {
  const std::size_t d = gt.graph.size();
  const auto order = topological_order(gt.structure());
  const Matrix noise = standardized_noise(spec.noise, spec.n, d, rng);
  const Matrix& b = gt.graph.weights();
  std::vector<std::vector<std::size_t>> parents(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (b(i, j) != 0.0) parents[j].push_back(i);

  Matrix x(spec.n, d);
  for (std::size_t r = 0; r < spec.n; ++r) {
    for (std::size_t j : order) {
      double a = 0.0;
      for (std::size_t i : parents[j]) {
        const double xi = x(r, i);
        switch (spec.mechanism) {
          case Mechanism::linear:
            a += b(i, j) * xi;
            break;
          case Mechanism::nonlinear1:
            a += b(i, j) * (xi + 0.5);
            break;
          case Mechanism::nonlinear2:
            a += b(i, j) * (xi * xi + 0.5);
            break;
        }
      }
      double value = 0.0;
      switch (spec.mechanism) {
        case Mechanism::linear:
          value = a;
          break;
        case Mechanism::nonlinear1:
          value = 2.0 * std::sin(a) + a;
          break;
        case Mechanism::nonlinear2:
          value = std::sqrt(std::abs(a));
          break;
      }
      x(r, j) = value + noise(r, j);
    }
  }
  return x;
}

}  // namespace icl
