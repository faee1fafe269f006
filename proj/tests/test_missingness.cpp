#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "icl/datagen.hpp"
#include "icl/missingness.hpp"
#include "support.hpp"

using namespace icl;

namespace {

struct World {
  GroundTruth truth;
  Matrix data;
};

World make_world(std::uint64_t seed, std::size_t d, std::size_t n) {
  RngStream rng(seed);
  GroundTruth gt = assign_weights(sample_er_dag(d, 2.0, rng), rng);
  SemSpec spec;
  spec.d = d;
  spec.n = n;
  Matrix x = sample_sem(gt, spec, rng);
  return {std::move(gt), std::move(x)};
}

}  // namespace

TEST_CASE("mcar_mask examples") {
  RngStream rng(1);
  CHECK(mcar_mask(20, 5, 0.0, rng).missing_count() == 0);
  CHECK_THROWS_AS(mcar_mask(5, 5, 1.0 - 1e-12, rng), ConfigError);
  CHECK_THROWS_AS(mcar_mask(5, 5, 1.0, rng), ConfigError);
  CHECK_THROWS_AS(mcar_mask(5, 5, -0.1, rng), ConfigError);
  const Mask high = mcar_mask(1000, 100, 0.99, rng);
  CHECK(std::abs(high.missing_fraction() - 0.99) < 0.01);
  const Mask m = mcar_mask(1000, 100, 0.3, rng);
  CHECK(std::abs(m.missing_fraction() - 0.3) < 0.01);
}

TEST_CASE("mcar columns share one missing rate") {
  RngStream rng(2);
  const std::size_t n = 20000, d = 5;
  const Mask m = mcar_mask(n, d, 0.3, rng);
  // 4 sigma of a binomial proportion at n = 20000.
  const double bound = 4.0 * std::sqrt(0.3 * 0.7 / static_cast<double>(n));
  for (std::size_t c = 0; c < d; ++c) {
    std::size_t miss = 0;
    for (std::size_t r = 0; r < n; ++r) miss += !m.observed(r, c);
    CHECK(std::abs(static_cast<double>(miss) / n - 0.3) < bound);
  }
}

TEST_CASE("mar_mask calibrates the global rate") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    const World w = make_world(seed, 30, 1000);
    RngStream rng(seed + 1000);
    const MarResult res = mar_mask(w.truth, w.data, 0.3, rng);
    CHECK(std::abs(res.mask.missing_fraction() - 0.3) <= 0.01);
  }
}

TEST_CASE("mar_mask missingness follows its parent-child pairs exactly") {
  std::size_t exercised = 0;
  for (MarSource source : {MarSource::t_matrix, MarSource::parent_value}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      CAPTURE(seed);
      const World w = make_world(seed, 12, 400);
      RngStream rng(seed + 7);
      MissingSpec options;
      options.source = source;
      const RngStream before = rng;
      MarResult res;
      try {
        res = mar_mask(w.truth, w.data, 0.1, rng, options);
      } catch (const InfeasibleError&) {
        continue;
      }
      ++exercised;

      // Recreate the scores the mechanism thresholds.
      Matrix t(w.data.rows(), 12);
      if (source == MarSource::t_matrix) {
        RngStream replay = before;
        const Digraph g = w.truth.structure();
        std::vector<Edge> edges(g.edges().begin(), g.edges().end());
        std::shuffle(edges.begin(), edges.end(), replay.engine());
        t = sample(replay, Distribution::uniform(0.0, 1.0), w.data.rows(), 12);
      } else {
        for (std::size_t c = 0; c < 12; ++c)
          for (std::size_t r = 0; r < w.data.rows(); ++r) {
            std::size_t below = 0;
            for (std::size_t k = 0; k < w.data.rows(); ++k) below += w.data(k, c) < w.data(r, c);
            t(r, c) = 1.0 - (static_cast<double>(below) + 0.5) / static_cast<double>(w.data.rows());
          }
      }

      std::vector<bool> is_child(12, false), is_parent(12, false);
      for (const auto& e : res.spec.pairs) {
        CHECK(w.truth.graph.weight(e.from, e.to) != 0.0);
        is_child[e.to] = true;
        is_parent[e.from] = true;
      }
      for (std::size_t c = 0; c < 12; ++c) {
        CHECK_FALSE((is_child[c] && is_parent[c]));
        for (std::size_t r = 0; r < w.data.rows(); ++r) {
          double trigger = std::numeric_limits<double>::infinity();
          for (const auto& e : res.spec.pairs)
            if (e.to == c) trigger = std::min(trigger, t(r, e.from));
          CHECK(res.mask.observed(r, c) == !(trigger < res.spec.tau));
        }
      }
    }
  }
  CHECK(exercised >= 16);
}

TEST_CASE("mar_mask errors") {
  const World w = make_world(3, 6, 100);
  RngStream rng(1);
  const GroundTruth empty{WeightedDigraph(6), {0, 1, 2, 3, 4, 5}};
  CHECK_THROWS_AS(mar_mask(empty, w.data, 0.3, rng), DomainError);
  try {
    mar_mask(w.truth, w.data, 0.9, rng);
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    CHECK(std::string(e.what()).find("achievable maximum") != std::string::npos);
  }
}

TEST_CASE("apply_mask examples") {
  const Matrix x = Matrix::from_rows({{1, 2}, {3, 4}});
  CHECK(apply_mask(x, Mask(2, 2, true)).values == x);
  const MaskedDataset none = apply_mask(x, Mask(2, 2, false));
  for (double v : none.values.values()) CHECK(std::isnan(v));
  Mask mixed(2, 2);
  mixed.set(0, 1, false);
  mixed.set(1, 0, false);
  const MaskedDataset ds = apply_mask(x, mixed);
  CHECK(ds.values(0, 0) == 1.0);
  CHECK(std::isnan(ds.values(0, 1)));
  CHECK(std::isnan(ds.values(1, 0)));
  CHECK(ds.values(1, 1) == 4.0);
  CHECK_THROWS_AS(apply_mask(x, Mask(3, 2)), ShapeError);
}

TEST_CASE("init_fill examples") {
  RngStream rng(5);
  const Matrix x = test::random_matrix(rng, 10, 4);
  CHECK(init_fill(apply_mask(x, Mask(10, 4)), rng) == x);

  Mask rows_missing(20000, 2);
  for (std::size_t r = 0; r < 20000; ++r) rows_missing.set(r, 0, false), rows_missing.set(r, 1, false);
  const Matrix filled = init_fill(apply_mask(Matrix(20000, 2, 7.0), rows_missing), rng);
  double mean = 0.0, sq = 0.0;
  for (double v : filled.values()) mean += v, sq += v * v;
  mean /= 40000.0;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(sq / 40000.0 - 1.0) < 0.03);

  const MaskedDataset ds = apply_mask(x, mcar_mask(10, 4, 0.5, rng));
  RngStream a(3), b(3);
  CHECK(init_fill(ds, a) == init_fill(ds, b));
}

TEST_CASE("apply_mask then init_fill never alters an observed entry") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    RngStream rng(seed);
    const std::size_t n = 1 + rng.below(30), d = 1 + rng.below(8);
    const Matrix x = test::random_matrix(rng, n, d, 3.0);
    const Mask m = mcar_mask(n, d, 0.9 * rng.uniform(), rng);
    const Matrix filled = init_fill(apply_mask(x, m), rng);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) {
        CHECK(std::isfinite(filled(r, c)));
        if (m.observed(r, c)) CHECK(filled(r, c) == x(r, c));
      }
  }
}
