#include "icl/graph.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace icl {

WeightedDigraph::WeightedDigraph(std::size_t d) : weights_(d, d) {
  if (d == 0) throw DomainError("graph needs at least one node");
}

WeightedDigraph::WeightedDigraph(Matrix weights) : weights_(std::move(weights)) {
  if (weights_.rows() != weights_.cols()) throw ShapeError("adjacency matrix must be square");
  if (weights_.rows() == 0) throw DomainError("graph needs at least one node");
  for (std::size_t i = 0; i < weights_.rows(); ++i) {
    if (weights_(i, i) != 0.0) throw DomainError("adjacency diagonal must be zero");
  }
}

void WeightedDigraph::set_weight(std::size_t i, std::size_t j, double w) {
  if (i == j && w != 0.0) throw DomainError("self-loops are not allowed");
  weights_(i, j) = w;
}

std::size_t WeightedDigraph::edge_count() const {
  return static_cast<std::size_t>(
      std::count_if(weights_.values().begin(), weights_.values().end(), [](double v) { return v != 0.0; }));
}

Digraph::Digraph(std::size_t d, std::initializer_list<Edge> edges) : d_(d) {
  for (const auto& e : edges) add_edge(e.from, e.to);
}

void Digraph::add_edge(std::size_t i, std::size_t j) {
  if (i >= d_ || j >= d_) throw DomainError("edge endpoint out of range");
  if (i == j) throw DomainError("self-loops are not allowed");
  edges_.insert({i, j});
}

std::vector<std::vector<std::size_t>> Digraph::adjacency() const {
  std::vector<std::vector<std::size_t>> adj(d_);
  for (const auto& e : edges_) adj[e.from].push_back(e.to);
  return adj;
}

bool Skeleton::contains(std::size_t i, std::size_t j) const {
  return edges_.contains({std::min(i, j), std::max(i, j)});
}

void Skeleton::add_edge(std::size_t i, std::size_t j) {
  if (i >= d_ || j >= d_) throw DomainError("edge endpoint out of range");
  if (i == j) throw DomainError("self-loops are not allowed");
  edges_.insert({std::min(i, j), std::max(i, j)});
}

namespace {

Matrix matrix_power(const Matrix& m, std::size_t k) {
  Matrix result = Matrix::identity(m.rows());
  for (std::size_t i = 0; i < k; ++i) result = matmul(result, m);
  return result;
}

Matrix shifted_square(const Matrix& b, double alpha) {
  Matrix m = hadamard(b, b);
  m *= alpha;
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += 1.0;
  return m;
}

void check_h_args(const Matrix& b, double alpha) {
  if (b.rows() != b.cols()) throw ShapeError("acyclicity_h: B must be square");
  if (b.rows() == 0) throw DomainError("acyclicity_h: empty graph");
  if (!(alpha > 0.0)) throw DomainError("acyclicity_h: alpha must be positive");
}

}  // namespace

double acyclicity_h(const Matrix& b, double alpha) {
  check_h_args(b, alpha);
  const std::size_t d = b.rows();
  return trace(matrix_power(shifted_square(b, alpha), d)) - static_cast<double>(d);
}

double acyclicity_h(const WeightedDigraph& g, double alpha) { return acyclicity_h(g.weights(), alpha); }

AcyclicityValue acyclicity_h_with_gradient(const Matrix& b, double alpha) {
  check_h_args(b, alpha);
  const std::size_t d = b.rows();
  const Matrix m = shifted_square(b, alpha);
  const Matrix p = matrix_power(m, d - 1);
  AcyclicityValue out;
  out.h = trace(matmul(p, m)) - static_cast<double>(d);
  // d tr(M^d)/dB = d * (M^{d-1})^T o 2 alpha B
  out.gradient = Matrix(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      out.gradient(i, j) = static_cast<double>(d) * p(j, i) * 2.0 * alpha * b(i, j);
  return out;
}

bool is_acyclic(const Digraph& g) {
  // Iterative three-colour depth-first search.
  enum Colour : unsigned char { white, grey, black };
  const auto adj = g.adjacency();
  std::vector<Colour> colour(g.size(), white);
  for (std::size_t root = 0; root < g.size(); ++root) {
    if (colour[root] != white) continue;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
    colour[root] = grey;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < adj[node].size()) {
        const std::size_t child = adj[node][next++];
        if (colour[child] == grey) return false;
        if (colour[child] == white) {
          colour[child] = grey;
          stack.emplace_back(child, 0);
        }
      } else {
        colour[node] = black;
        stack.pop_back();
      }
    }
  }
  return true;
}

std::vector<std::size_t> topological_order(const Digraph& g) {
  std::vector<std::size_t> indegree(g.size(), 0);
  for (const auto& e : g.edges()) ++indegree[e.to];
  const auto adj = g.adjacency();
  std::vector<std::size_t> ready;
  for (std::size_t i = g.size(); i-- > 0;)
    if (indegree[i] == 0) ready.push_back(i);
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    const std::size_t v = ready.back();
    ready.pop_back();
    order.push_back(v);
    for (auto it = adj[v].rbegin(); it != adj[v].rend(); ++it) {
      if (--indegree[*it] == 0) ready.push_back(*it);
    }
  }
  if (order.size() != g.size()) throw DomainError("graph contains a directed cycle");
  return order;
}

Digraph support_of(const Matrix& b) {
  Digraph g(b.rows());
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j)
      if (i != j && b(i, j) != 0.0) g.add_edge(i, j);
  return g;
}

Digraph threshold_edges(const WeightedDigraph& g, double omega) {
  if (omega < 0.0) throw DomainError("threshold must be non-negative");
  Digraph out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j)
      if (i != j && std::abs(g.weight(i, j)) > omega) out.add_edge(i, j);
  return out;
}

Skeleton skeleton_of(const Digraph& g) {
  Skeleton s(g.size());
  for (const auto& e : g.edges()) s.add_edge(e.from, e.to);
  return s;
}

std::size_t shd(const Digraph& predicted, const Digraph& truth) {
  if (predicted.size() != truth.size()) throw DomainError("shd: graphs have different node counts");
  // Visit every unordered pair touched by either graph once.
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& e : predicted.edges()) pairs.insert({std::min(e.from, e.to), std::max(e.from, e.to)});
  for (const auto& e : truth.edges()) pairs.insert({std::min(e.from, e.to), std::max(e.from, e.to)});
  std::size_t distance = 0;
  for (const auto& [a, b] : pairs) {
    const bool same = predicted.has_edge(a, b) == truth.has_edge(a, b) &&
                      predicted.has_edge(b, a) == truth.has_edge(b, a);
    if (!same) ++distance;
  }
  return distance;
}

std::size_t skeleton_shd(const Skeleton& predicted, const Skeleton& truth) {
  if (predicted.size() != truth.size()) throw DomainError("skeleton_shd: node counts differ");
  std::size_t distance = 0;
  for (const auto& e : predicted.edges())
    if (!truth.edges().contains(e)) ++distance;
  for (const auto& e : truth.edges())
    if (!predicted.edges().contains(e)) ++distance;
  return distance;
}

namespace {

// Tarjan's strongly connected components; returns a component id per node.
std::vector<std::size_t> strong_components(const Digraph& g) {
  const std::size_t n = g.size();
  const auto adj = g.adjacency();
  constexpr std::size_t unvisited = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, unvisited), low(n, 0), comp(n, unvisited);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::size_t counter = 0, components = 0;

  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (std::size_t w : adj[v]) {
      if (index[w] == unvisited) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp[w] = components;
      } while (w != v);
      ++components;
    }
  };
  for (std::size_t v = 0; v < n; ++v)
    if (index[v] == unvisited) visit(v);
  return comp;
}

}  // namespace

Digraph prune_cycles(Digraph g, const EdgeScores& scores) {
  for (const auto& e : g.edges()) {
    if (!scores.contains(e)) {
      throw DomainError("prune_cycles: no score for edge " + std::to_string(e.from) + "->" + std::to_string(e.to));
    }
  }
  while (!is_acyclic(g)) {
    // An edge lies on a cycle iff both endpoints share a strong component.
    const auto comp = strong_components(g);
    std::optional<Edge> worst;
    double worst_score = 0.0;
    for (const auto& e : g.edges()) {
      if (comp[e.from] != comp[e.to]) continue;
      const double s = scores.at(e);
      if (!worst || s < worst_score) {
        worst = e;
        worst_score = s;
      }
    }
    g.remove_edge(worst->from, worst->to);
  }
  return g;
}

namespace {

void write_weight(std::ostream& os, double w) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", w);
  os << buf;
}

}  // namespace

void write_edge_list(std::ostream& os, const Digraph& g, const EdgeScores* weights) {
  for (const auto& e : g.edges()) {
    os << e.from << '\t' << e.to << '\t';
    write_weight(os, weights && weights->contains(e) ? weights->at(e) : 1.0);
    os << '\n';
  }
}

void write_edge_list(std::ostream& os, const WeightedDigraph& g) {
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j)
      if (g.weight(i, j) != 0.0) {
        os << i << '\t' << j << '\t';
        write_weight(os, g.weight(i, j));
        os << '\n';
      }
}

void write_edge_list(std::ostream& os, const Skeleton& s) {
  for (const auto& [a, b] : s.edges()) os << a << '\t' << b << "\t1\n";
}

EdgeList read_edge_list(std::istream& is) {
  EdgeList list;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    long long src = -1, dst = -1;
    double w = 1.0;
    if (!(fields >> src >> dst) || src < 0 || dst < 0) {
      throw ParseError("edge list line " + std::to_string(line_no) + ": expected 'src<TAB>dst<TAB>weight'");
    }
    if (!(fields >> w)) w = 1.0;
    const Edge e{static_cast<std::size_t>(src), static_cast<std::size_t>(dst)};
    list.entries.emplace_back(e, w);
    list.max_index_plus_one = std::max({list.max_index_plus_one, e.from + 1, e.to + 1});
  }
  return list;
}

Digraph to_digraph(const EdgeList& list, std::size_t d) {
  Digraph g(d);
  for (const auto& [e, w] : list.entries) g.add_edge(e.from, e.to);
  return g;
}

WeightedDigraph to_weighted(const EdgeList& list, std::size_t d) {
  WeightedDigraph g(d);
  for (const auto& [e, w] : list.entries) {
    if (e.from >= d || e.to >= d) throw DomainError("edge endpoint out of range");
    g.set_weight(e.from, e.to, w);
  }
  return g;
}

Skeleton to_skeleton(const EdgeList& list, std::size_t d) {
  Skeleton s(d);
  for (const auto& [e, w] : list.entries) s.add_edge(e.from, e.to);
  return s;
}

void write_dot(std::ostream& os, const Digraph& g, const EdgeScores* scores) {
  os << "digraph G {\n";
  for (std::size_t i = 0; i < g.size(); ++i) os << "  x" << i << ";\n";
  for (const auto& e : g.edges()) {
    os << "  x" << e.from << " -> x" << e.to;
    if (scores && scores->contains(e)) {
      char buf[48];
      std::snprintf(buf, sizeof buf, " [label=\"%.4g\"]", scores->at(e));
      os << buf;
    }
    os << ";\n";
  }
  os << "}\n";
}

}  // namespace icl
