#include "icl/direction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

namespace icl {

void DirectionConfig::validate() const {
  if (latent_dim == 0) throw ConfigError("direction: latent_dim must be at least 1");
  if (hidden == 0) throw ConfigError("direction: hidden must be positive");
  if (batch_size == 0) throw ConfigError("direction: batch_size must be positive");
  if (eval_samples == 0) throw ConfigError("direction: eval_samples must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("direction: learning_rate must be positive");
  if (!(delta_factor >= 0.0)) throw ConfigError("direction: delta_factor must be non-negative");
  if (min_samples < 3) throw ConfigError("direction: min_samples must be at least 3");
}

CanmModel CanmModel::initialized(const DirectionConfig& config, RngStream& rng) {
  const std::size_t h = config.hidden;
  const std::size_t l = config.latent_dim;
  CanmModel m;
  m.f = Mlp::initialized({1, h, 1}, Activation::tanh, Activation::identity, rng);
  m.g = Mlp::initialized({l, h, 1}, Activation::tanh, Activation::identity, rng);
  m.encoder = Mlp::initialized({2, h, 2 * l}, Activation::tanh, Activation::identity, rng);
  return m;
}

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr double kLogVarLimit = 10.0;

std::vector<double> standardized(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  // Moments summed in sorted order do not depend on the row order.
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  double mean = 0.0;
  for (double v : sorted) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : sorted) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0) || !std::isfinite(sd)) throw DomainError("direction: column is constant or non-finite");
  std::vector<double> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = (x[k] - mean) / sd;
  return out;
}

Matrix column_matrix(std::span<const double> v, std::span<const std::size_t> rows) {
  Matrix m(rows.size(), 1);
  for (std::size_t k = 0; k < rows.size(); ++k) m(k, 0) = v[rows[k]];
  return m;
}

Matrix pair_matrix(std::span<const double> a, std::span<const double> b, std::span<const std::size_t> rows) {
  Matrix m(rows.size(), 2);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    m(k, 0) = a[rows[k]];
    m(k, 1) = b[rows[k]];
  }
  return m;
}

double clamp_logvar(double lv) { return std::clamp(lv, -kLogVarLimit, kLogVarLimit); }

void train_step(CanmModel& model, Adam& opt, std::span<const double> cause, std::span<const double> effect,
                std::span<const std::size_t> rows, const Matrix& eps) {
  const std::size_t b = rows.size();
  const std::size_t l = model.latent_dim();
  const double inv_b = 1.0 / static_cast<double>(b);

  MlpTape f_tape, g_tape, e_tape;
  const Matrix fc = model.f.forward(column_matrix(cause, rows), f_tape);
  const Matrix enc = model.encoder.forward(pair_matrix(cause, effect, rows), e_tape);
  Matrix z(b, l);
  for (std::size_t r = 0; r < b; ++r)
    for (std::size_t k = 0; k < l; ++k) z(r, k) = enc(r, k) + std::exp(0.5 * clamp_logvar(enc(r, l + k))) * eps(r, k);
  const Matrix gz = model.g.forward(z, g_tape);

  const double var = std::exp(2.0 * model.log_sigma);
  Matrix g_out(b, 1);
  double g_log_sigma = 0.0;
  for (std::size_t r = 0; r < b; ++r) {
    const double res = effect[rows[r]] - fc(r, 0) - gz(r, 0);
    g_out(r, 0) = -res / var * inv_b;
    g_log_sigma += (1.0 - res * res / var) * inv_b;
  }
  const MlpGradient f_grad = model.f.backward(f_tape, g_out);
  const MlpGradient g_grad = model.g.backward(g_tape, g_out);

  Matrix g_enc(b, 2 * l);
  for (std::size_t r = 0; r < b; ++r)
    for (std::size_t k = 0; k < l; ++k) {
      const double mu = enc(r, k);
      const double raw_lv = enc(r, l + k);
      const double lv = clamp_logvar(raw_lv);
      const double s = std::exp(0.5 * lv);
      const double gzk = g_grad.input(r, k);
      g_enc(r, k) = gzk + mu * inv_b;
      const bool clipped = raw_lv != lv;
      g_enc(r, l + k) = clipped ? 0.0 : gzk * eps(r, k) * 0.5 * s + 0.5 * (std::exp(lv) - 1.0) * inv_b;
    }
  const MlpGradient e_grad = model.encoder.backward(e_tape, g_enc);

  std::vector<ParamBlock> blocks = model.f.blocks("f", f_grad);
  for (auto& blk : model.g.blocks("g", g_grad)) blocks.push_back(blk);
  for (auto& blk : model.encoder.blocks("encoder", e_grad)) blocks.push_back(blk);
  blocks.push_back({"log_sigma", std::span<double>(&model.log_sigma, 1), std::span<const double>(&g_log_sigma, 1)});
  opt.step(blocks);
}

}  // namespace

std::vector<double> conditional_elbo(const CanmModel& model, std::span<const double> cause,
                                     std::span<const double> effect, std::span<const Matrix> eps) {
  if (cause.size() != effect.size()) throw ShapeError("conditional_elbo: cause and effect lengths differ");
  if (eps.empty()) throw DomainError("conditional_elbo: need at least one latent draw");
  const std::size_t n = cause.size();
  const std::size_t l = model.latent_dim();
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const Matrix fc = model.f.forward(column_matrix(cause, all));
  const Matrix enc = model.encoder.forward(pair_matrix(cause, effect, all));
  const double var = std::exp(2.0 * model.log_sigma);

  std::vector<double> out(n, 0.0);
  for (const Matrix& e : eps) {
    if (e.rows() != n || e.cols() != l) throw ShapeError("conditional_elbo: latent draw has the wrong shape");
    Matrix z(n, l);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t k = 0; k < l; ++k) z(r, k) = enc(r, k) + std::exp(0.5 * clamp_logvar(enc(r, l + k))) * e(r, k);
    const Matrix gz = model.g.forward(z);
    for (std::size_t r = 0; r < n; ++r) {
      const double res = effect[r] - fc(r, 0) - gz(r, 0);
      out[r] += -kHalfLog2Pi - model.log_sigma - 0.5 * res * res / var;
    }
  }
  const double draws = static_cast<double>(eps.size());
  for (std::size_t r = 0; r < n; ++r) {
    double kl = 0.0;
    for (std::size_t k = 0; k < l; ++k) {
      const double mu = enc(r, k);
      const double lv = clamp_logvar(enc(r, l + k));
      kl += 0.5 * (mu * mu + std::exp(lv) - 1.0 - lv);
    }
    out[r] = out[r] / draws - kl;
  }
  return out;
}

std::vector<double> loo_kde_log_density(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 3) throw DomainError("loo_kde_log_density: need at least 3 samples");
  const double nd = static_cast<double>(n);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= nd;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (nd - 1.0));
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double pos = q * (nd - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, n - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) throw DomainError("loo_kde_log_density: sample has zero spread");
  const double bw = 0.9 * spread * std::pow(nd, -0.2);
  const double norm = -std::log((nd - 1.0) * bw) - kHalfLog2Pi;

  std::vector<double> out(n);
  std::vector<double> terms(n - 1);
  for (std::size_t m = 0; m < n; ++m) {
    std::size_t t = 0;
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      if (k == m) continue;
      const double u = (x[m] - x[k]) / bw;
      terms[t] = -0.5 * u * u;
      peak = std::max(peak, terms[t]);
      ++t;
    }
    double acc = 0.0;
    for (double v : terms) acc += std::exp(v - peak);
    out[m] = norm + peak + std::log(acc);
  }
  return out;
}

DirectionalScore directional_score(std::span<const double> cause, std::span<const double> effect,
                                   const DirectionConfig& config, std::uint64_t seed) {
  config.validate();
  if (cause.size() != effect.size()) throw ShapeError("pair_score: columns have different lengths");
  const std::size_t n = cause.size();
  if (n < config.min_samples) {
    throw InfeasibleError("pair_score: insufficient data (" + std::to_string(n) + " rows, need at least " +
                          std::to_string(config.min_samples) + ")");
  }
  for (std::size_t k = 0; k < n; ++k)
    if (!std::isfinite(cause[k]) || !std::isfinite(effect[k])) throw DomainError("pair_score: non-finite input");

  const std::vector<double> cs = standardized(cause);
  const std::vector<double> es = standardized(effect);
  // Canonical row order makes the result independent of the input order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cs[a] != cs[b] ? cs[a] < cs[b] : es[a] < es[b];
  });
  std::vector<double> c(n), e(n);
  for (std::size_t k = 0; k < n; ++k) {
    c[k] = cs[order[k]];
    e[k] = es[order[k]];
  }

  const RngStream root(seed);
  RngStream init_rng = root.split(1);
  RngStream batch_rng = root.split(2);
  RngStream eval_rng = root.split(3);
  CanmModel model = CanmModel::initialized(config, init_rng);
  Adam opt(AdamConfig{config.learning_rate});
  const std::size_t batch = std::min(n, config.batch_size);
  std::vector<std::size_t> rows(batch);
  for (std::size_t step = 0; step < config.steps; ++step) {
    for (auto& r : rows) r = batch_rng.below(n);
    const Matrix eps = sample(batch_rng, Distribution::standard_normal(), batch, config.latent_dim);
    train_step(model, opt, c, e, rows, eps);
  }

  std::vector<Matrix> draws;
  for (std::size_t s = 0; s < config.eval_samples; ++s) {
    draws.push_back(sample(eval_rng, Distribution::standard_normal(), n, config.latent_dim));
  }
  const std::vector<double> cond = conditional_elbo(model, c, e, draws);
  const std::vector<double> marginal = loo_kde_log_density(c);

  DirectionalScore out;
  out.per_sample.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) out.per_sample[order[k]] = marginal[k] + cond[k];
  // Summed in canonical order so the mean does not depend on the input order.
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) total += marginal[k] + cond[k];
  out.score = total / static_cast<double>(n);
  if (!std::isfinite(out.score)) throw NumericError("pair_score: non-finite score");
  return out;
}

double pair_score(std::span<const double> x_i, std::span<const double> x_j, const DirectionConfig& config,
                  std::uint64_t seed) {
  return directional_score(x_i, x_j, config, seed).score;
}

std::string to_string(Decision d) {
  switch (d) {
    case Decision::forward:
      return "forward";
    case Decision::backward:
      return "backward";
    case Decision::undetermined:
      break;
  }
  return "undetermined";
}

Decision decide_direction(double s_ij, double s_ji, double delta) {
  if (!std::isfinite(s_ij) || !std::isfinite(s_ji)) throw NumericError("decide_direction: non-finite score");
  if (!(delta >= 0.0)) throw DomainError("decide_direction: delta must be non-negative");
  if (s_ij - s_ji > delta) return Decision::forward;
  if (s_ji - s_ij > delta) return Decision::backward;
  return Decision::undetermined;
}

Orientation orient_skeleton(const Skeleton& skeleton, const Matrix& xhat, const DirectionConfig& config,
                            std::uint64_t seed) {
  const std::size_t d = skeleton.size();
  if (xhat.cols() < d) throw ShapeError("orient_skeleton: data has fewer columns than the skeleton has nodes");
  Orientation out;
  out.graph = Digraph(std::max<std::size_t>(d, 1));
  const RngStream root(seed);
  for (const auto& [i, j] : skeleton.edges()) {
    const std::vector<double> xi = xhat.column(i);
    const std::vector<double> xj = xhat.column(j);
    const std::uint64_t pair_seed = root.split(i * d + j).seed();
    const DirectionalScore fwd = directional_score(xi, xj, config, pair_seed);
    const DirectionalScore bwd = directional_score(xj, xi, config, pair_seed);

    const std::size_t n = fwd.per_sample.size();
    double mean = 0.0;
    for (std::size_t k = 0; k < n; ++k) mean += fwd.per_sample[k] - bwd.per_sample[k];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double diff = fwd.per_sample[k] - bwd.per_sample[k] - mean;
      ss += diff * diff;
    }
    const double se = std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));

    PairScore ps;
    ps.i = i;
    ps.j = j;
    ps.s_ij = fwd.score;
    ps.s_ji = bwd.score;
    ps.delta = config.delta_factor * se;
    ps.decision = decide_direction(ps.s_ij, ps.s_ji, ps.delta);
    ps.flagged = ps.decision == Decision::undetermined;
    const bool forward = ps.decision == Decision::forward || (ps.flagged && ps.s_ij >= ps.s_ji);
    const Edge e = forward ? Edge{i, j} : Edge{j, i};
    out.graph.add_edge(e.from, e.to);
    out.scores[e] = std::max(ps.s_ij, ps.s_ji);
    out.pairs.push_back(ps);
  }
  return out;
}

Digraph finalize_dag(const Digraph& g, const EdgeScores& scores) { return prune_cycles(g, scores); }

void write_pair_scores(std::ostream& out, const std::vector<PairScore>& pairs) {
  out << "i,j,s_ij,s_ji,delta,decision,flagged\n";
  char buf[128];
  for (const auto& p : pairs) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", p.s_ij, p.s_ji, p.delta);
    out << p.i << ',' << p.j << ',' << buf << ',' << to_string(p.decision) << ',' << (p.flagged ? 1 : 0) << '\n';
  }
}

}  // namespace icl
