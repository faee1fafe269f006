// Command-line front end: data generation, masking, training, orientation,
// evaluation and benchmark sweeps.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "icl/bench.hpp"
#include "icl/dataio.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kData = 3, kTraining = 4, kInfeasible = 5 };

struct Options {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out = ".";
  std::string mechanism;
  std::string noise;
  std::optional<double> missing_rate;
  std::string missing_mech;
  std::string pipeline;
  std::string format = "markdown";
  std::string data;
  std::string truth;
  std::string skeleton;
  std::string predicted;
  std::size_t nodes = 0;
};

icl::ExperimentConfig resolve_config(const Options& o) {
  icl::ExperimentConfig c = o.config.empty() ? icl::ExperimentConfig{} : icl::load_config(o.config);
  if (!o.mechanism.empty()) c.sem.mechanism = icl::parse_mechanism(o.mechanism);
  if (!o.noise.empty()) c.sem.noise = icl::parse_noise(o.noise);
  if (o.missing_rate) {
    c.missing.rate = *o.missing_rate;
    c.missing_rates = {*o.missing_rate};
  }
  if (!o.missing_mech.empty()) c.missing.mechanism = icl::parse_missing_mechanism(o.missing_mech);
  if (!o.pipeline.empty()) {
    c.pipeline = icl::parse_pipeline(o.pipeline);
    c.pipelines = {c.pipeline};
  }
  if (o.seed_set) c.seeds = {o.seed};
  c.validate();
  return c;
}

std::uint64_t run_seed(const Options& o, const icl::ExperimentConfig& c) { return o.seed_set ? o.seed : c.seeds.front(); }

icl::GroundTruth read_truth(const std::string& path, std::size_t d) {
  auto in = icl::open_input(path);
  const icl::EdgeList list = icl::read_edge_list(in);
  icl::GroundTruth gt{icl::to_weighted(list, d), {}};
  gt.order = icl::topological_order(gt.structure());
  return gt;
}

void write_json(const fs::path& path, const json& j) {
  auto f = icl::open_output(path);
  f << j.dump(2) << '\n';
}

int cmd_gen(const Options& o) {
  icl::ExperimentConfig c = resolve_config(o);
  c.missing.rate = 0.0;
  const icl::Scenario s = icl::make_scenario(c, run_seed(o, c));
  const fs::path out(o.out);
  {
    auto f = icl::open_output(out / "data.csv");
    icl::write_csv(f, s.data);
  }
  {
    auto f = icl::open_output(out / "truth.tsv");
    icl::write_edge_list(f, s.truth.graph);
  }
  {
    auto f = icl::open_output(out / "truth.dot");
    icl::write_dot(f, s.truth.structure());
  }
  return kOk;
}

int cmd_mask(const Options& o) {
  const icl::ExperimentConfig c = resolve_config(o);
  const icl::MaskedDataset input = icl::load_csv(o.data);
  if (input.mask.missing_count() != 0) throw icl::ParseError(o.data + ": input to mask must be complete");
  icl::RngStream rng = icl::RngStream(run_seed(o, c)).split(2);
  icl::Mask mask(input.rows(), input.cols());
  json info = {{"mechanism", icl::to_string(c.missing.mechanism)}, {"rate", c.missing.rate}};
  if (c.missing.rate > 0.0) {
    if (c.missing.mechanism == icl::MissingMechanism::mcar) {
      mask = icl::mcar_mask(input.rows(), input.cols(), c.missing.rate, rng);
    } else {
      if (o.truth.empty()) throw icl::ConfigError("mask: MAR needs --truth");
      const icl::GroundTruth gt = read_truth(o.truth, input.cols());
      icl::MarResult mar = icl::mar_mask(gt, input.values, c.missing.rate, rng, c.missing);
      mask = std::move(mar.mask);
      info["tau"] = mar.spec.tau;
      json pairs = json::array();
      for (const auto& e : mar.spec.pairs) pairs.push_back({e.from, e.to});
      info["pairs"] = pairs;
    }
  }
  info["achieved_rate"] = mask.missing_fraction();
  const fs::path out(o.out);
  {
    auto f = icl::open_output(out / "masked.csv");
    icl::write_csv(f, icl::apply_mask(input.values, mask));
  }
  {
    auto f = icl::open_output(out / "mask.csv");
    icl::write_mask_csv(f, mask);
  }
  write_json(out / "missing.json", info);
  return kOk;
}

int cmd_train(const Options& o) {
  const icl::ExperimentConfig c = resolve_config(o);
  icl::MaskedDataset data = icl::load_csv(o.data);
  icl::JointTrainConfig jt{c.imputer, c.structure, icl::TrainingSchedule::interleaved};
  if (c.pipeline == icl::Pipeline::impute_then_discover) jt.schedule = icl::TrainingSchedule::impute_then_discover;
  if (c.pipeline == icl::Pipeline::listwise_deletion) data = icl::listwise_delete(data);
  const icl::JointTrainResult r = icl::joint_train(data, jt, run_seed(o, c));
  const fs::path out(o.out);
  {
    auto f = icl::open_output(out / "skeleton.tsv");
    icl::write_edge_list(f, r.skeleton);
  }
  {
    auto f = icl::open_output(out / "B.csv");
    icl::write_csv(f, r.b.weights());
  }
  {
    auto f = icl::open_output(out / "xhat.csv");
    icl::write_csv(f, r.xhat);
  }
  {
    auto f = icl::open_output(out / "history.json");
    icl::write_history(f, r.history);
  }
  write_json(out / "train.json",
             {{"converged", r.converged}, {"final_h", r.final_h}, {"rows_used", data.rows()},
              {"pipeline", icl::to_string(c.pipeline)}});
  return kOk;
}

int cmd_orient(const Options& o) {
  const icl::ExperimentConfig c = resolve_config(o);
  const icl::MaskedDataset data = icl::load_csv(o.data);
  if (data.mask.missing_count() != 0) throw icl::ParseError(o.data + ": orientation needs complete data");
  auto in = icl::open_input(o.skeleton);
  const icl::Skeleton sk = icl::to_skeleton(icl::read_edge_list(in), data.cols());
  const icl::Orientation oriented = icl::orient_skeleton(sk, data.values, c.direction, run_seed(o, c));
  const icl::Digraph dag = icl::finalize_dag(oriented.graph, oriented.scores);
  const fs::path out(o.out);
  {
    auto f = icl::open_output(out / "scores.csv");
    icl::write_pair_scores(f, oriented.pairs);
  }
  {
    auto f = icl::open_output(out / "dag.tsv");
    icl::write_edge_list(f, dag, &oriented.scores);
  }
  {
    auto f = icl::open_output(out / "dag.dot");
    icl::write_dot(f, dag, &oriented.scores);
  }
  return kOk;
}

int cmd_eval(const Options& o) {
  auto pin = icl::open_input(o.predicted);
  auto tin = icl::open_input(o.truth);
  const icl::EdgeList predicted = icl::read_edge_list(pin);
  const icl::EdgeList truth = icl::read_edge_list(tin);
  std::size_t d = std::max(predicted.max_index_plus_one, truth.max_index_plus_one);
  if (o.nodes != 0) {
    if (o.nodes < d) throw icl::ConfigError("eval: --nodes is smaller than the largest node index");
    d = o.nodes;
  }
  d = std::max<std::size_t>(d, 1);
  const icl::Digraph p = icl::to_digraph(predicted, d);
  const icl::Digraph t = icl::to_digraph(truth, d);
  const json result = {{"nodes", d},
                       {"shd", icl::shd(p, t)},
                       {"skeleton_shd", icl::skeleton_shd(icl::skeleton_of(p), icl::skeleton_of(t))}};
  std::cout << result.dump(2) << '\n';
  if (!o.out.empty() && o.out != ".") write_json(fs::path(o.out) / "eval.json", result);
  return kOk;
}

int cmd_bench(const Options& o) {
  icl::ExperimentConfig c = resolve_config(o);
  c.output_dir = o.out;
  const icl::ReportFormat format = icl::parse_report_format(o.format);
  const icl::Report report = icl::run_bench(c, &std::cerr);
  const fs::path out(o.out);
  icl::emit_report(report, icl::ReportFormat::json, out / "report.json");
  icl::emit_report(report, icl::ReportFormat::csv, out / "runs.csv");
  if (format == icl::ReportFormat::markdown) icl::emit_report(report, format, out / "report.md");
  std::cout << icl::render_report(report, icl::ReportFormat::markdown);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal discovery with missing data: joint imputation and structure learning"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Experiment configuration (JSON)");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) {
          o.seed = s;
          o.seed_set = true;
        }, "Random seed");
    sub->add_option("--out", o.out, "Output directory");
  };

  auto* gen = app.add_subcommand("gen", "Sample a random DAG and a dataset from it");
  common(gen);
  gen->add_option("--mechanism", o.mechanism, "linear, nonlinear1 or nonlinear2");
  gen->add_option("--noise", o.noise, "gaussian, exponential or gumbel");

  auto* mask = app.add_subcommand("mask", "Remove entries from a complete dataset");
  common(mask);
  mask->add_option("--data", o.data, "Complete data CSV")->required();
  mask->add_option("--truth", o.truth, "Ground-truth edge list (needed for MAR)");
  mask->add_option("--missing-rate", o.missing_rate, "Proportion of missing entries");
  mask->add_option("--missing-mech", o.missing_mech, "mcar or mar");

  auto* train = app.add_subcommand("train", "Jointly impute and learn the causal skeleton");
  common(train);
  train->add_option("--data", o.data, "Data CSV, empty cells are missing")->required();
  train->add_option("--pipeline", o.pipeline, "icl, impute_then_discover or listwise_deletion");

  auto* orient = app.add_subcommand("orient", "Orient skeleton edges and remove cycles");
  common(orient);
  orient->add_option("--data", o.data, "Complete (imputed) data CSV")->required();
  orient->add_option("--skeleton", o.skeleton, "Skeleton edge list")->required();

  auto* eval = app.add_subcommand("eval", "Structural Hamming distance against a reference graph");
  eval->add_option("--predicted", o.predicted, "Predicted edge list")->required();
  eval->add_option("--truth", o.truth, "Reference edge list")->required();
  eval->add_option("--nodes", o.nodes, "Number of nodes (default: largest index + 1)");
  eval->add_option("--out", o.out, "Output directory for eval.json");

  auto* bench = app.add_subcommand("bench", "Run every pipeline over the configured seeds and missing rates");
  common(bench);
  bench->add_option("--mechanism", o.mechanism, "linear, nonlinear1 or nonlinear2");
  bench->add_option("--noise", o.noise, "gaussian, exponential or gumbel");
  bench->add_option("--missing-rate", o.missing_rate, "Single missing rate instead of the configured sweep");
  bench->add_option("--missing-mech", o.missing_mech, "mcar or mar");
  bench->add_option("--pipeline", o.pipeline, "Run only this pipeline");
  bench->add_option("--format", o.format, "Report format: json, markdown or csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*gen) return cmd_gen(o);
    if (*mask) return cmd_mask(o);
    if (*train) return cmd_train(o);
    if (*orient) return cmd_orient(o);
    if (*eval) return cmd_eval(o);
    if (*bench) return cmd_bench(o);
  } catch (const icl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const icl::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const icl::TrainingError& e) {
    std::cerr << "training failed: " << e.what() << '\n';
    return kTraining;
  } catch (const icl::NumericError& e) {
    std::cerr << "training failed: " << e.what() << '\n';
    return kTraining;
  } catch (const icl::Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
