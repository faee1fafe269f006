#include "icl/missingness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace icl {

Mask::Mask(std::size_t rows, std::size_t cols, bool observed)
    : rows_(rows), cols_(cols), bits_(rows * cols, observed ? 1 : 0) {}

std::size_t Mask::missing_count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{0}));
}

double Mask::missing_fraction() const {
  return bits_.empty() ? 0.0 : static_cast<double>(missing_count()) / static_cast<double>(bits_.size());
}

bool Mask::row_complete(std::size_t r) const {
  for (std::size_t c = 0; c < cols_; ++c)
    if (!observed(r, c)) return false;
  return true;
}

Matrix Mask::as_matrix() const {
  Matrix m(rows_, cols_);
  for (std::size_t i = 0; i < bits_.size(); ++i) m.values()[i] = bits_[i];
  return m;
}

Mask Mask::select_rows(std::span<const std::size_t> rows) const {
  Mask out(rows.size(), cols_);
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t c = 0; c < cols_; ++c) out.set(k, c, observed(rows[k], c));
  return out;
}

std::string to_string(MissingMechanism m) { return m == MissingMechanism::mcar ? "mcar" : "mar"; }

MissingMechanism parse_missing_mechanism(const std::string& s) {
  if (s == "mcar") return MissingMechanism::mcar;
  if (s == "mar") return MissingMechanism::mar;
  throw ConfigError("unknown missingness mechanism '" + s + "' (mcar, mar)");
}

std::string to_string(MarSource s) { return s == MarSource::t_matrix ? "t_matrix" : "parent_value"; }

MarSource parse_mar_source(const std::string& s) {
  if (s == "t_matrix") return MarSource::t_matrix;
  if (s == "parent_value") return MarSource::parent_value;
  throw ConfigError("unknown mar_source '" + s + "' (t_matrix, parent_value)");
}

void validate_missing_rate(double m) {
  // Anything within 1e-9 of one would leave (almost) nothing observed.
  if (!(m >= 0.0) || !(m < 1.0 - 1e-9)) {
    throw ConfigError("missing rate must lie in [0, 1)");
  }
}

Mask mcar_mask(std::size_t n, std::size_t d, double m, RngStream& rng) {
  validate_missing_rate(m);
  const Matrix t = sample(rng, Distribution::uniform(0.0, 1.0), n, d);
  Mask mask(n, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c)
      if (t(r, c) < m) mask.set(r, c, false);
  return mask;
}

namespace {

// 1 - empirical CDF rank, so large parent values give small scores.
Matrix value_scores(const Matrix& data) {
  const std::size_t n = data.rows();
  Matrix t(n, data.cols());
  std::vector<std::size_t> idx(n);
  for (std::size_t c = 0; c < data.cols(); ++c) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return data(a, c) < data(b, c); });
    for (std::size_t k = 0; k < n; ++k) {
      t(idx[k], c) = 1.0 - (static_cast<double>(k) + 0.5) / static_cast<double>(n);
    }
  }
  return t;
}

}  // namespace

MarResult mar_mask(const GroundTruth& truth, const Matrix& data, double m, RngStream& rng,
                   const MissingSpec& options) {
  validate_missing_rate(m);
  if (!(m > 0.0)) throw ConfigError("mar_mask: missing rate must be positive");
  const std::size_t d = truth.graph.size();
  if (data.cols() != d) throw ShapeError("mar_mask: data columns do not match the graph");
  const Digraph structure = truth.structure();
  std::vector<Edge> edges(structure.edges().begin(), structure.edges().end());
  if (edges.empty()) throw DomainError("mar_mask: graph has no edges, no parent-child pairs to sample");

  // Walk the true edges in random order and keep those that leave the parent
  // and child column sets disjoint, so every parent column stays observed.
  std::shuffle(edges.begin(), edges.end(), rng.engine());
  std::set<std::size_t> parents, children;
  std::vector<Edge> pairs;
  for (const auto& e : edges) {
    if (options.max_pairs != 0 && pairs.size() >= options.max_pairs) break;
    if (children.contains(e.from) || parents.contains(e.to)) continue;
    pairs.push_back(e);
    parents.insert(e.from);
    children.insert(e.to);
  }
  std::sort(pairs.begin(), pairs.end());

  const std::size_t n = data.rows();
  const Matrix t = options.source == MarSource::t_matrix ? sample(rng, Distribution::uniform(0.0, 1.0), n, d)
                                                         : value_scores(data);

  // Per row and child column, the smallest score among the column's parents.
  std::vector<std::vector<std::size_t>> parents_of(d);
  for (const auto& e : pairs) parents_of[e.to].push_back(e.from);
  Matrix trigger(n, d, std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c : children)
      for (std::size_t p : parents_of[c]) trigger(r, c) = std::min(trigger(r, c), t(r, p));

  const double total = static_cast<double>(n * d);
  auto fraction_at = [&](double tau) {
    std::size_t missing = 0;
    for (double v : trigger.values())
      if (v < tau) ++missing;
    return static_cast<double>(missing) / total;
  };

  const double achievable = fraction_at(std::nextafter(1.0, 2.0));
  if (achievable < m - 0.01) {
    std::ostringstream os;
    os << "mar_mask: requested missing rate " << m << " exceeds the achievable maximum " << achievable << " with "
       << children.size() << " child column(s)";
    throw InfeasibleError(os.str());
  }

  double lo = 0.0, hi = 1.0, tau = m;
  double rate = fraction_at(tau);
  for (int it = 0; it < 50 && std::abs(rate - m) > 1e-4; ++it) {
    if (rate < m)
      lo = tau;
    else
      hi = tau;
    tau = 0.5 * (lo + hi);
    rate = fraction_at(tau);
  }
  if (rate < m - 0.01) {
    tau = std::nextafter(1.0, 2.0);
  }

  Mask mask(n, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c)
      if (trigger(r, c) < tau) mask.set(r, c, false);

  MissingSpec spec = options;
  spec.mechanism = MissingMechanism::mar;
  spec.rate = m;
  spec.tau = tau;
  spec.pairs = std::move(pairs);
  return {std::move(mask), std::move(spec)};
}

MaskedDataset apply_mask(const Matrix& x, const Mask& r) {
  if (x.rows() != r.rows() || x.cols() != r.cols()) throw ShapeError("apply_mask: mask shape differs from data");
  MaskedDataset out{x, r};
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j)
      if (!r.observed(i, j)) out.values(i, j) = std::numeric_limits<double>::quiet_NaN();
  return out;
}

Matrix init_fill(const MaskedDataset& xbar, RngStream& rng) {
  const Matrix noise = sample(rng, Distribution::standard_normal(), xbar.rows(), xbar.cols());
  Matrix out = xbar.values;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j)
      if (!xbar.mask.observed(i, j)) out(i, j) = noise(i, j);
  return out;
}

}  // namespace icl
