#pragma once

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "icl/numeric.hpp"

namespace icl {

struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
  auto operator<=>(const Edge&) const = default;
};

// d x d weighted adjacency; B(i, j) != 0 is the edge i -> j.
class WeightedDigraph {
 public:
  explicit WeightedDigraph(std::size_t d);
  explicit WeightedDigraph(Matrix weights);

  std::size_t size() const { return weights_.rows(); }
  const Matrix& weights() const { return weights_; }
  double weight(std::size_t i, std::size_t j) const { return weights_(i, j); }
  void set_weight(std::size_t i, std::size_t j, double w);
  std::size_t edge_count() const;

 private:
  Matrix weights_;
};

class Digraph {
 public:
  explicit Digraph(std::size_t d = 0) : d_(d) {}
  Digraph(std::size_t d, std::initializer_list<Edge> edges);

  std::size_t size() const { return d_; }
  const std::set<Edge>& edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }
  bool has_edge(std::size_t i, std::size_t j) const { return edges_.contains({i, j}); }
  void add_edge(std::size_t i, std::size_t j);
  void remove_edge(std::size_t i, std::size_t j) { edges_.erase({i, j}); }
  std::vector<std::vector<std::size_t>> adjacency() const;

  bool operator==(const Digraph&) const = default;

 private:
  std::size_t d_;
  std::set<Edge> edges_;
};

// Undirected edges stored as (min, max) pairs.
class Skeleton {
 public:
  explicit Skeleton(std::size_t d = 0) : d_(d) {}

  std::size_t size() const { return d_; }
  const std::set<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }
  bool contains(std::size_t i, std::size_t j) const;
  void add_edge(std::size_t i, std::size_t j);

  bool operator==(const Skeleton&) const = default;

 private:
  std::size_t d_;
  std::set<std::pair<std::size_t, std::size_t>> edges_;
};

// h(B) = tr[(I + alpha B o B)^d] - d.
double acyclicity_h(const Matrix& b, double alpha);
double acyclicity_h(const WeightedDigraph& g, double alpha);

struct AcyclicityValue {
  double h = 0.0;
  Matrix gradient;  // dh/dB
};
AcyclicityValue acyclicity_h_with_gradient(const Matrix& b, double alpha);

bool is_acyclic(const Digraph& g);
// Kahn order; throws DomainError if the graph has a cycle.
std::vector<std::size_t> topological_order(const Digraph& g);

Digraph support_of(const Matrix& b);
Digraph threshold_edges(const WeightedDigraph& g, double omega);
Skeleton skeleton_of(const Digraph& g);

// Structural Hamming distance: each unordered node pair whose edge state
// differs (missing, extra, or reversed) costs one.
std::size_t shd(const Digraph& predicted, const Digraph& truth);
std::size_t skeleton_shd(const Skeleton& predicted, const Skeleton& truth);

using EdgeScores = std::map<Edge, double>;

// Repeatedly removes the lowest-scoring edge that lies on a directed cycle
// until none remain. Ties break toward the smaller (from, to) pair.
Digraph prune_cycles(Digraph g, const EdgeScores& scores);

// Edge-list text: "src\tdst\tweight" per line, zero-based.
void write_edge_list(std::ostream& os, const Digraph& g, const EdgeScores* weights = nullptr);
void write_edge_list(std::ostream& os, const WeightedDigraph& g);
void write_edge_list(std::ostream& os, const Skeleton& s);
struct EdgeList {
  std::vector<std::pair<Edge, double>> entries;
  std::size_t max_index_plus_one = 0;
};
EdgeList read_edge_list(std::istream& is);
Digraph to_digraph(const EdgeList& list, std::size_t d);
WeightedDigraph to_weighted(const EdgeList& list, std::size_t d);
Skeleton to_skeleton(const EdgeList& list, std::size_t d);

void write_dot(std::ostream& os, const Digraph& g, const EdgeScores* scores = nullptr);

}  // namespace icl
