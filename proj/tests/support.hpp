#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "icl/numeric.hpp"

namespace icl::test {

inline constexpr double kFdStep = 1e-5;
inline constexpr double kFdRelTol = 1e-4;

// |a - f| / max(|a|, |f|, floor). The floor keeps coordinates whose true
// derivative is zero from being judged on round-off alone.
inline double rel_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Central differences of `loss` with respect to every entry of `values`.
// Returns the worst relative error against `grad`.
inline double worst_fd_error(std::span<double> values, std::span<const double> grad,
                             const std::function<double()>& loss, double step = kFdStep) {
  double worst = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double saved = values[k];
    values[k] = saved + step;
    const double up = loss();
    values[k] = saved - step;
    const double down = loss();
    values[k] = saved;
    worst = std::max(worst, rel_error(grad[k], (up - down) / (2.0 * step)));
  }
  return worst;
}

inline Matrix random_matrix(RngStream& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  Matrix m = sample(rng, Distribution::standard_normal(), rows, cols);
  m *= scale;
  return m;
}

// Random strictly upper-triangular matrix under a random permutation.
inline Matrix random_dag_weights(RngStream& rng, std::size_t d, double p, double scale = 1.0) {
  std::vector<std::size_t> order(d);
  for (std::size_t i = 0; i < d; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng.engine());
  Matrix b(d, d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t c = a + 1; c < d; ++c)
      if (rng.uniform() < p) b(order[a], order[c]) = scale * (rng.uniform() < 0.5 ? -1.0 : 1.0) * (0.5 + rng.uniform());
  return b;
}

}  // namespace icl::test

#include <array>
#include <queue>
#include <unordered_map>
#include <vector>

#include "icl/graph.hpp"

namespace icl::test {

// Random digraph without 2-cycles: each unordered pair is absent, forward or
// backward with the given probabilities.
inline Digraph random_oriented_graph(RngStream& rng, std::size_t d, double p_edge) {
  Digraph g(d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a + 1; b < d; ++b)
      if (rng.uniform() < p_edge) {
        if (rng.uniform() < 0.5)
          g.add_edge(a, b);
        else
          g.add_edge(b, a);
      }
  return g;
}

// Acyclicity by repeatedly deleting nodes without incoming edges.
inline bool peel_acyclic(const Digraph& g) {
  std::vector<bool> gone(g.size(), false);
  for (std::size_t removed = 0; removed < g.size(); ++removed) {
    bool found = false;
    for (std::size_t v = 0; v < g.size() && !found; ++v) {
      if (gone[v]) continue;
      bool has_parent = false;
      for (const auto& e : g.edges())
        if (e.to == v && !gone[e.from]) has_parent = true;
      if (!has_parent) {
        gone[v] = true;
        found = true;
      }
    }
    if (!found) return false;
  }
  return true;
}

// Per-pair classification: every unordered pair whose state (absent, a->b,
// b->a) differs costs one edit.
inline std::size_t shd_pair_oracle(const Digraph& p, const Digraph& t) {
  std::size_t total = 0;
  for (std::size_t a = 0; a < p.size(); ++a)
    for (std::size_t b = a + 1; b < p.size(); ++b) {
      const int sp = (p.has_edge(a, b) ? 1 : 0) + (p.has_edge(b, a) ? 2 : 0);
      const int st = (t.has_edge(a, b) ? 1 : 0) + (t.has_edge(b, a) ? 2 : 0);
      total += sp != st;
    }
  return total;
}

// Exhaustive minimum number of single-edge insertions, deletions and
// reversals turning `from` into `to`, by breadth-first search over every
// graph without 2-cycles on d <= 5 nodes.
inline std::size_t shd_bfs_oracle(const Digraph& from, const Digraph& to) {
  const std::size_t d = from.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a + 1; b < d; ++b) pairs.emplace_back(a, b);
  auto encode = [&](const Digraph& g) {
    std::uint32_t code = 0, place = 1;
    for (const auto& [a, b] : pairs) {
      code += place * (g.has_edge(a, b) ? 1u : g.has_edge(b, a) ? 2u : 0u);
      place *= 3;
    }
    return code;
  };
  const std::uint32_t start = encode(from), goal = encode(to);
  std::unordered_map<std::uint32_t, std::size_t> dist{{start, 0}};
  std::queue<std::uint32_t> q;
  q.push(start);
  while (!q.empty()) {
    const std::uint32_t cur = q.front();
    q.pop();
    if (cur == goal) return dist[cur];
    std::uint32_t place = 1;
    for (std::size_t k = 0; k < pairs.size(); ++k, place *= 3) {
      const std::uint32_t state = (cur / place) % 3;
      // absent: insert either way; present: delete or reverse.
      const std::array<std::uint32_t, 2> next = state == 0   ? std::array<std::uint32_t, 2>{1, 2}
                                                : state == 1 ? std::array<std::uint32_t, 2>{0, 2}
                                                             : std::array<std::uint32_t, 2>{0, 1};
      for (std::uint32_t s : next) {
        const std::uint32_t n = cur - state * place + s * place;
        if (dist.emplace(n, dist[cur] + 1).second) q.push(n);
      }
    }
  }
  return static_cast<std::size_t>(-1);
}

}  // namespace icl::test
