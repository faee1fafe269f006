#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "icl/datagen.hpp"
#include "support.hpp"

using namespace icl;

namespace {

GroundTruth chain(double w) {
  WeightedDigraph g(2);
  g.set_weight(0, 1, w);
  return {g, {0, 1}};
}

double column_mean(const Matrix& x, std::size_t c) {
  double s = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) s += x(r, c);
  return s / static_cast<double>(x.rows());
}

double column_var(const Matrix& x, std::size_t c) {
  const double mu = column_mean(x, c);
  double s = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) s += (x(r, c) - mu) * (x(r, c) - mu);
  return s / static_cast<double>(x.rows() - 1);
}

}  // namespace

TEST_CASE("sample_er_dag") {
  SUBCASE("always acyclic and upper triangular under its order") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      RngStream rng(seed);
      const GroundTruth gt = sample_er_dag(2 + seed % 20, 1.5, rng);
      CHECK(is_acyclic(gt.structure()));
      std::vector<std::size_t> pos(gt.order.size());
      for (std::size_t k = 0; k < gt.order.size(); ++k) pos[gt.order[k]] = k;
      const Digraph g = gt.structure();
      for (const auto& e : g.edges()) CHECK(pos[e.from] < pos[e.to]);
    }
  }
  SUBCASE("mean edge count matches d s / 2") {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      RngStream rng(seed);
      total += static_cast<double>(sample_er_dag(30, 2.0, rng).graph.edge_count());
    }
    CHECK(std::abs(total / 1000.0 - 30.0) < 0.05 * 30.0);
  }
  SUBCASE("same seed, same topology") {
    RngStream a(5), b(5);
    CHECK(sample_er_dag(12, 2.0, a).graph.weights() == sample_er_dag(12, 2.0, b).graph.weights());
  }
  SUBCASE("invalid arguments") {
    RngStream rng(1);
    CHECK_THROWS_AS(sample_er_dag(5, 5.0, rng), ConfigError);
    CHECK_THROWS_AS(sample_er_dag(1, 0.5, rng), ConfigError);
  }
}

TEST_CASE("assign_weights") {
  std::size_t positive = 0, edges = 0;
  for (std::uint64_t seed = 0; edges < 10000; ++seed) {
    RngStream rng(seed);
    const GroundTruth topo = sample_er_dag(30, 2.0, rng);
    const GroundTruth gt = assign_weights(topo, rng);
    for (std::size_t i = 0; i < 30; ++i)
      for (std::size_t j = 0; j < 30; ++j) {
        const double w = gt.graph.weight(i, j);
        if (topo.graph.weight(i, j) == 0.0) {
          CHECK(w == 0.0);
          continue;
        }
        CHECK(std::abs(w) >= 0.5);
        CHECK(std::abs(w) < 2.0);
        ++edges;
        positive += w > 0.0;
      }
  }
  CHECK(std::abs(static_cast<double>(positive) / static_cast<double>(edges) - 0.5) < 0.03);
}

TEST_CASE("standardized noise has zero mean and unit variance") {
  for (NoiseKind kind : {NoiseKind::gaussian, NoiseKind::exponential, NoiseKind::gumbel}) {
    CAPTURE(to_string(kind));
    RngStream rng(31);
    const Matrix u = standardized_noise(kind, 100000, 1, rng);
    CHECK(std::abs(column_mean(u, 0)) < 0.02);
    CHECK(std::abs(column_var(u, 0) - 1.0) < 0.05);
  }
}

TEST_CASE("sample_sem examples") {
  SUBCASE("empty graph gives pure noise") {
    WeightedDigraph g(3);
    const GroundTruth gt{g, {0, 1, 2}};
    SemSpec spec;
    spec.d = 3;
    spec.n = 100000;
    spec.mechanism = Mechanism::linear;
    spec.noise = NoiseKind::gaussian;
    RngStream rng(4);
    const Matrix x = sample_sem(gt, spec, rng);
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(std::abs(column_mean(x, c)) < 0.02);
      CHECK(std::abs(column_var(x, c) - 1.0) < 0.03);
    }
  }
  SUBCASE("nonlinear1 without parents is the noise itself") {
    const GroundTruth gt{WeightedDigraph(3), {0, 1, 2}};
    SemSpec spec;
    spec.d = 3;
    spec.n = 50;
    spec.mechanism = Mechanism::nonlinear1;
    RngStream a(9), b(9);
    CHECK(sample_sem(gt, spec, a) == standardized_noise(spec.noise, 50, 3, b));
  }
  SUBCASE("linear chain slope") {
    SemSpec spec;
    spec.d = 2;
    spec.n = 100000;
    spec.mechanism = Mechanism::linear;
    spec.noise = NoiseKind::gaussian;
    RngStream rng(12);
    const Matrix x = sample_sem(chain(1.5), spec, rng);
    const double m0 = column_mean(x, 0), m1 = column_mean(x, 1);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      sxy += (x(r, 0) - m0) * (x(r, 1) - m1);
      sxx += (x(r, 0) - m0) * (x(r, 0) - m0);
    }
    CHECK(std::abs(sxy / sxx - 1.5) < 0.02);
  }
  SUBCASE("nonlinear mechanisms by hand") {
    SemSpec spec;
    spec.d = 2;
    spec.n = 20;
    spec.noise = NoiseKind::gumbel;
    for (Mechanism mech : {Mechanism::nonlinear1, Mechanism::nonlinear2}) {
      spec.mechanism = mech;
      RngStream a(2), b(2);
      const Matrix x = sample_sem(chain(-0.8), spec, a);
      const Matrix u = standardized_noise(spec.noise, spec.n, 2, b);
      for (std::size_t r = 0; r < spec.n; ++r) {
        CHECK(x(r, 0) == u(r, 0));
        const double p = x(r, 0);
        const double expected = mech == Mechanism::nonlinear1
                                    ? 2.0 * std::sin(-0.8 * (p + 0.5)) - 0.8 * (p + 0.5) + u(r, 1)
                                    : std::sqrt(std::abs(-0.8 * (p * p + 0.5))) + u(r, 1);
        CHECK(x(r, 1) == doctest::Approx(expected).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("linear gaussian covariance matches the implied covariance") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    RngStream rng(seed);
    const std::size_t d = 3 + seed;
    const GroundTruth gt = assign_weights(sample_er_dag(d, 1.5, rng), rng);
    SemSpec spec;
    spec.d = d;
    spec.n = 100000;
    spec.mechanism = Mechanism::linear;
    spec.noise = NoiseKind::gaussian;
    const Matrix x = sample_sem(gt, spec, rng);
    Matrix centred = x;
    for (std::size_t c = 0; c < d; ++c) {
      const double mu = column_mean(x, c);
      for (std::size_t r = 0; r < x.rows(); ++r) centred(r, c) -= mu;
    }
    Matrix cov = matmul_tn(centred, centred);
    cov *= 1.0 / static_cast<double>(x.rows() - 1);
    // Row form: x = u (I - B)^{-1}, so cov = (I - B)^{-T} (I - B)^{-1}.
    const Matrix inv = LuDecomposition(Matrix::identity(d) - gt.graph.weights()).inverse();
    const Matrix implied = matmul_tn(inv, inv);
    CHECK(frobenius_norm(cov - implied) / frobenius_norm(implied) < 0.05);
  }
}

TEST_CASE("sampling is reproducible and row order carries no structure") {
  RngStream a(21), b(21);
  const GroundTruth ga = assign_weights(sample_er_dag(6, 2.0, a), a);
  const GroundTruth gb = assign_weights(sample_er_dag(6, 2.0, b), b);
  SemSpec spec;
  spec.d = 6;
  spec.n = 300;
  CHECK(sample_sem(ga, spec, a) == sample_sem(gb, spec, b));
}

TEST_CASE("spec validation") {
  SemSpec spec;
  spec.d = 1;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.d = 5;
  spec.weight_low = 2.5;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  CHECK_THROWS_AS(parse_mechanism("quadratic"), ConfigError);
  CHECK(parse_noise(to_string(NoiseKind::gumbel)) == NoiseKind::gumbel);
}
