#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "icl/bench.hpp"
#include "icl/dataio.hpp"
#include "cli_support.hpp"
#include "support.hpp"

using namespace icl;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

RunResult ok(std::size_t shd_value, Pipeline p = Pipeline::icl, double m = 0.3, std::uint64_t seed = 0) {
  RunResult r;
  r.success = true;
  r.shd = shd_value;
  r.skeleton_shd = shd_value / 2;
  r.pipeline = p;
  r.missing_rate = m;
  r.seed = seed;
  return r;
}

RunResult failed(Pipeline p, double m, std::uint64_t seed) {
  RunResult r;
  r.pipeline = p;
  r.missing_rate = m;
  r.seed = seed;
  r.error = "listwise deletion leaves 1 complete row(s), need at least 2";
  r.error_kind = "infeasible";
  return r;
}

ExperimentConfig tiny_config() { return config_from_json(json::parse(test::tiny_config_json())); }

}  // namespace

TEST_CASE("aggregate examples") {
  const Report single = aggregate({ok(4)});
  REQUIRE(single.summaries.size() == 1);
  CHECK(*single.summaries[0].mean == 4.0);
  CHECK(*single.summaries[0].std == 0.0);

  const Report three = aggregate({ok(9), ok(10), ok(11)});
  CHECK(*three.summaries[0].mean == 10.0);
  CHECK(*three.summaries[0].std == 1.0);

  CHECK_THROWS_AS(aggregate({failed(Pipeline::icl, 0.3, 0)}), DomainError);
  CHECK_THROWS_AS(summarize({}), DomainError);

  const Report mixed = aggregate({ok(3), failed(Pipeline::icl, 0.3, 1), ok(5, Pipeline::listwise_deletion),
                                  failed(Pipeline::impute_then_discover, 0.3, 0)});
  REQUIRE(mixed.summaries.size() == 3);
  CHECK(mixed.summaries[0].successes == 1);
  CHECK(mixed.summaries[0].failures == 1);
  CHECK_FALSE(mixed.summaries[2].mean.has_value());
}

TEST_CASE("load_csv") {
  SUBCASE("complete file gives an all-ones mask") {
    std::istringstream in("x0,x1\n1,2\n3.5,-4e-3\n");
    const MaskedDataset ds = read_csv(in);
    CHECK(ds.mask.missing_count() == 0);
    CHECK(ds.values == Matrix::from_rows({{1, 2}, {3.5, -4e-3}}));
  }
  SUBCASE("round trip keeps values and mask") {
    RngStream rng(1);
    const Matrix x = test::random_matrix(rng, 20, 4, 1e3);
    const MaskedDataset ds = apply_mask(x, mcar_mask(20, 4, 0.3, rng));
    std::stringstream ss;
    write_csv(ss, ds);
    const MaskedDataset back = read_csv(ss);
    CHECK(back.mask == ds.mask);
    for (std::size_t i = 0; i < 20; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        if (ds.mask.observed(i, j)) CHECK(back.values(i, j) == x(i, j));
  }
  SUBCASE("ragged row names the row") {
    std::istringstream in("x0,x1\n1,2\n3\n");
    try {
      read_csv(in, "data.csv");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
  }
  SUBCASE("non-numeric cell names row and column") {
    std::istringstream in("x0,x1\n1,abc\n");
    try {
      read_csv(in, "data.csv");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("column 2") != std::string::npos);
    }
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_csv("/nonexistent/file.csv"), IoError); }
}

TEST_CASE("report serialization") {
  Report report = aggregate({ok(3, Pipeline::icl, 0.1, 0), ok(5, Pipeline::icl, 0.1, 1),
                             ok(7, Pipeline::listwise_deletion, 0.1, 0), failed(Pipeline::listwise_deletion, 0.3, 1),
                             ok(4, Pipeline::icl, 0.3, 0), ok(6, Pipeline::listwise_deletion, 0.3, 0)},
                            {{"note", "unit"}});
  SUBCASE("same report twice is byte-identical") {
    const fs::path dir = test::scratch_dir("report");
    for (ReportFormat f : {ReportFormat::json, ReportFormat::markdown, ReportFormat::csv}) {
      emit_report(report, f, dir / ("a" + extension(f)));
      emit_report(report, f, dir / ("b" + extension(f)));
      CHECK(test::slurp(dir / ("a" + extension(f))) == test::slurp(dir / ("b" + extension(f))));
    }
    fs::remove_all(dir);
  }
  SUBCASE("markdown grid has one row per pipeline and one column per rate") {
    const std::string md = render_report(report, ReportFormat::markdown);
    CHECK(md.find("| pipeline | m = 0.1 | m = 0.3 |") != std::string::npos);
    CHECK(md.find("| icl | 4.00 ± 1.41 (2/2) | 4.00 ± 0.00 (1/1) |") != std::string::npos);
    CHECK(md.find("| listwise_deletion | 7.00 ± 0.00 (1/1) | 6.00 ± 0.00 (1/2) |") != std::string::npos);
  }
  SUBCASE("json round trip") {
    const Report back = report_from_json(json::parse(render_report(report, ReportFormat::json)));
    CHECK(back == report);
  }
  SUBCASE("unwritable path") {
    CHECK_THROWS_AS(emit_report(report, ReportFormat::json, "/proc/icl/report.json"), IoError);
  }
}

TEST_CASE("config json") {
  const ExperimentConfig defaults;
  CHECK(defaults.sem.d == 10);
  CHECK(defaults.sem.n == 1000);
  CHECK(defaults.seeds.size() == 10);
  const ExperimentConfig back = config_from_json(to_json(defaults));
  CHECK(to_json(back) == to_json(defaults));

  const ExperimentConfig tiny = tiny_config();
  CHECK(tiny.sem.d == 4);
  CHECK(tiny.structure.max_outer == 2);
  CHECK(tiny.seeds == std::vector<std::uint64_t>{3, 4});

  CHECK_THROWS_AS(config_from_json(json::parse(R"({"sem": {"dd": 3}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"seeds": [1, 1]})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"seeds": []})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"sem": {"n": -5}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"pipeline": "pc"})")), ConfigError);
}

TEST_CASE("listwise_delete") {
  Mask m(4, 3);
  m.set(1, 0, false);
  m.set(3, 2, false);
  const MaskedDataset ds = apply_mask(Matrix(4, 3, 1.0), m);
  const MaskedDataset kept = listwise_delete(ds);
  CHECK(kept.rows() == 2);
  CHECK(kept.mask.missing_count() == 0);

  Mask mostly(3, 2);
  mostly.set(0, 0, false);
  mostly.set(1, 1, false);
  CHECK_THROWS_AS(listwise_delete(apply_mask(Matrix(3, 2), mostly)), InfeasibleError);
}

TEST_CASE("scenarios are shared across pipelines") {
  const ExperimentConfig c = tiny_config();
  const Scenario a = make_scenario(c, 3);
  const Scenario b = make_scenario(c, 3);
  CHECK(a.data == b.data);
  CHECK(a.observed.mask == b.observed.mask);
  CHECK(a.data_checksum == b.data_checksum);
  CHECK(make_scenario(c, 4).data_checksum != a.data_checksum);
  CHECK(is_acyclic(a.truth.structure()));
  CHECK(std::abs(a.achieved_rate - a.observed.mask.missing_fraction()) == 0.0);
}

TEST_CASE("pipelines") {
  ExperimentConfig c = tiny_config();
  SUBCASE("identical config and seed give identical results") {
    const RunResult a = run_icl(c, 3);
    const RunResult b = run_icl(c, 3);
    CHECK(a == b);
    CHECK(a.success);
    const RunResult l = run_baseline_listwise(c, 3);
    const RunResult g = run_baseline_impute_then_discover(c, 3);
    CHECK(l.data_checksum == a.data_checksum);
    CHECK(g.mask_checksum == a.mask_checksum);
    if (l.success) CHECK(l.rows_used < a.rows_used);
  }
  SUBCASE("without missingness listwise deletion keeps every row") {
    c.missing.rate = 0.0;
    const RunResult l = run_baseline_listwise(c, 3);
    const RunResult i = run_icl(c, 3);
    CHECK(l.rows_used == c.sem.n);
    CHECK(i.rows_used == c.sem.n);
    CHECK(l.data_checksum == i.data_checksum);
    CHECK(l.shd == i.shd);
  }
  SUBCASE("high missingness makes listwise deletion infeasible") {
    c.sem.d = 12;
    c.sem.n = 40;
    c.missing.rate = 0.5;
    const RunResult l = run_baseline_listwise(c, 3);
    CHECK_FALSE(l.success);
    CHECK(l.error_kind == "infeasible");
    CHECK_FALSE(l.shd.has_value());
  }
}

TEST_CASE("cli determinism and exit codes") {
  const fs::path dir = test::scratch_dir("cli");
  const fs::path cfg = dir / "config.json";
  test::write_text(cfg, test::tiny_config_json());
  const std::string c = " --config " + cfg.string();

  REQUIRE(test::run_cli("gen" + c + " --seed 5 --out " + (dir / "g1").string()) == 0);
  REQUIRE(test::run_cli("gen" + c + " --seed 5 --out " + (dir / "g2").string()) == 0);
  CHECK(test::tree(dir / "g1") == test::tree(dir / "g2"));
  REQUIRE(test::run_cli("gen" + c + " --seed 6 --out " + (dir / "g3").string()) == 0);
  CHECK(test::slurp(dir / "g1/data.csv") != test::slurp(dir / "g3/data.csv"));

  const std::string data = (dir / "g1/data.csv").string();
  const std::string truth = (dir / "g1/truth.tsv").string();
  for (const char* name : {"m1", "m2"}) {
    REQUIRE(test::run_cli("mask" + c + " --seed 5 --data " + data + " --missing-rate 0.3 --out " +
                          (dir / name).string()) == 0);
  }
  CHECK(test::tree(dir / "m1") == test::tree(dir / "m2"));
  REQUIRE(test::run_cli("mask" + c + " --seed 5 --data " + data + " --truth " + truth +
                        " --missing-mech mar --missing-rate 0.1 --out " + (dir / "mar").string()) == 0);
  CHECK(json::parse(test::slurp(dir / "mar/missing.json")).contains("pairs"));

  const std::string masked = (dir / "m1/masked.csv").string();
  for (const char* name : {"t1", "t2"}) {
    REQUIRE(test::run_cli("train" + c + " --seed 5 --data " + masked + " --out " + (dir / name).string()) == 0);
  }
  CHECK(test::tree(dir / "t1") == test::tree(dir / "t2"));

  const std::string xhat = (dir / "t1/xhat.csv").string();
  const std::string skel = (dir / "t1/skeleton.tsv").string();
  for (const char* name : {"o1", "o2"}) {
    REQUIRE(test::run_cli("orient" + c + " --seed 5 --data " + xhat + " --skeleton " + skel + " --out " +
                          (dir / name).string()) == 0);
  }
  CHECK(test::tree(dir / "o1") == test::tree(dir / "o2"));

  REQUIRE(test::run_cli("eval --predicted " + (dir / "o1/dag.tsv").string() + " --truth " + truth + " --nodes 4 --out " +
                        (dir / "e1").string()) == 0);
  const json ev = json::parse(test::slurp(dir / "e1/eval.json"));
  CHECK(ev.at("nodes") == 4);
  CHECK(ev.contains("shd"));

  for (const char* name : {"b1", "b2"}) {
    REQUIRE(test::run_cli("bench" + c + " --out " + (dir / name).string()) == 0);
  }
  CHECK(test::tree(dir / "b1") == test::tree(dir / "b2"));
  const Report report = load_report(dir / "b1/report.json");
  CHECK(report.runs.size() == 2 * 3);
  CHECK(report.summaries.size() == 3);

  // Exit codes.
  test::write_text(dir / "bad.json", R"({"sem": {"d": 1}})");
  CHECK(test::run_cli("gen --config " + (dir / "bad.json").string() + " --out " + (dir / "x").string()) == 2);
  CHECK(test::run_cli("gen --mechanism cubic --out " + (dir / "x").string()) == 2);
  CHECK(test::run_cli("gen --no-such-flag") == 2);
  test::write_text(dir / "ragged.csv", "x0,x1\n1,2\n3\n");
  CHECK(test::run_cli("train --data " + (dir / "ragged.csv").string() + " --out " + (dir / "x").string()) == 3);
  test::write_text(dir / "holes.csv", "x0,x1,x2\n1,,3\n,2,3\n1,2,\n");
  CHECK(test::run_cli("train --pipeline listwise_deletion --data " + (dir / "holes.csv").string() + " --out " +
                      (dir / "x").string()) == 5);

  fs::remove_all(dir);
}
